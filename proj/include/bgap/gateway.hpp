#pragma once

#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "bgap/error.hpp"
#include "bgap/matrix.hpp"

namespace bgap {

struct ProviderConfig {
    std::string base_url;             // http(s)://host[:port] or stub://<name>
    std::string model;
    std::string api_key_env;          // env var holding the API key
    int max_concurrency = 4;
    double timeout_seconds = 120.0;
    int max_retries = 3;
    double temperature = 0.0;
    std::string chat_path = "/chat/completions";
    std::string embed_path = "/embeddings";
    std::string cache_dir;            // empty disables the response cache
    bool offline = false;             // cache-only; any network need is an error
    double retry_backoff_seconds = 0.5;
    int embed_batch_size = 16;
    int stub_dim = 2048;              // vector width served by stub embedders
};

struct ChatMessage {
    std::string role;  // "user" | "assistant" | "system"
    std::string content;
};

struct TokenUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct ChatResult {
    std::string text;
    TokenUsage usage;
};

// A full request/reply record, as persisted in provider caches.
struct ChatExchange {
    std::string system;
    std::vector<ChatMessage> messages;
    std::string reply;
    TokenUsage usage;
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    // messages must be non-empty; returns the assistant text.
    virtual ChatResult chat(const std::string& system,
                            const std::vector<ChatMessage>& messages) = 0;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    // One row per input text, truncated to the first truncate_dim coordinates
    // of the provider vector. Row order matches input order.
    virtual MatF embed(const std::vector<std::string>& texts, int truncate_dim = 1024) = 0;
};

// Counting semaphore bounding in-flight provider requests.
class Semaphore {
public:
    explicit Semaphore(int count) : count_(count) {}
    void acquire();
    void release();

private:
    std::mutex mu_;
    std::condition_variable cv_;
    int count_;
};

// Raw transport under the retrying client. Implementations throw
// ProviderError (non-retryable) or TransientError (retryable).
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual ChatResult complete(const std::string& system,
                                const std::vector<ChatMessage>& messages,
                                double temperature) = 0;
    // True when the backend performs no network activity (stubs), letting it
    // run under --offline without a warm cache.
    virtual bool offline_safe() const { return false; }
};

class EmbedBackend {
public:
    virtual ~EmbedBackend() = default;
    // Returns one full-width vector per text.
    virtual std::vector<std::vector<float>> embed_batch(
        const std::vector<std::string>& texts) = 0;
    virtual bool offline_safe() const { return false; }
};

// Retryable transport failure (HTTP 429/5xx, timeouts, connection resets).
class TransientError : public Error {
public:
    explicit TransientError(const std::string& msg) : Error(msg) {}
};

// Chat client with exponential-backoff retries, bounded concurrency, and a
// content-hash response cache (hits only when temperature == 0).
class ChatClient : public ChatProvider {
public:
    // backend == nullptr selects one from config.base_url ("http(s)://" wires
    // up the JSON endpoint client; "stub://echo" and "stub://offline" the
    // deterministic test stubs).
    explicit ChatClient(ProviderConfig config, std::shared_ptr<ChatBackend> backend = nullptr);

    ChatResult chat(const std::string& system,
                    const std::vector<ChatMessage>& messages) override;

    TokenUsage total_usage() const;
    long backend_calls() const { return backend_calls_.load(); }

private:
    ProviderConfig config_;
    std::shared_ptr<ChatBackend> backend_;
    Semaphore semaphore_;
    std::atomic<long> backend_calls_{0};
    mutable std::mutex usage_mu_;
    TokenUsage usage_;

    std::mutex cache_mu_;
    std::unordered_map<std::string, ChatResult> mem_cache_;
};

// Embedding client: per-text caching, batch submission, bounded concurrency,
// prefix truncation, input-order results.
class EmbeddingClient : public EmbeddingProvider {
public:
    explicit EmbeddingClient(ProviderConfig config,
                             std::shared_ptr<EmbedBackend> backend = nullptr);

    MatF embed(const std::vector<std::string>& texts, int truncate_dim = 1024) override;

    long backend_calls() const { return backend_calls_.load(); }

private:
    std::vector<float> embed_one_uncached(const std::string& text);

    ProviderConfig config_;
    std::shared_ptr<EmbedBackend> backend_;
    Semaphore semaphore_;
    std::atomic<long> backend_calls_{0};

    std::mutex cache_mu_;
    std::unordered_map<std::string, std::vector<float>> mem_cache_;
};

std::shared_ptr<ChatBackend> make_chat_backend(const ProviderConfig& config);
std::shared_ptr<EmbedBackend> make_embed_backend(const ProviderConfig& config);

}  // namespace bgap
