#pragma once

// Deterministic offline providers. These are part of the supported surface,
// not test scaffolding: they let the whole pipeline run without network
// access, and they instrument concurrency for the gateway contract checks.

#include <atomic>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "bgap/gateway.hpp"

namespace bgap {

// Tracks concurrent entries so tests can observe the semaphore bound.
class InFlightGauge {
public:
    void enter();
    void leave();
    int max_seen() const { return max_seen_.load(); }
    long total() const { return total_.load(); }

private:
    std::atomic<int> current_{0};
    std::atomic<int> max_seen_{0};
    std::atomic<long> total_{0};
};

// Echoes the last user message. Useful for wiring tests.
class EchoChatBackend : public ChatBackend {
public:
    ChatResult complete(const std::string& system, const std::vector<ChatMessage>& messages,
                        double temperature) override;
    bool offline_safe() const override { return true; }
    InFlightGauge gauge;
};

// Replays a fixed list of replies in call order (thread-safe). Optionally
// fails the first `fail_first` calls with a retryable error, to exercise the
// retry contract.
class ScriptedChatBackend : public ChatBackend {
public:
    explicit ScriptedChatBackend(std::vector<std::string> replies, int fail_first = 0);
    ChatResult complete(const std::string& system, const std::vector<ChatMessage>& messages,
                        double temperature) override;
    bool offline_safe() const override { return true; }
    InFlightGauge gauge;

private:
    std::mutex mu_;
    std::vector<std::string> replies_;
    size_t next_ = 0;
    int fail_first_;
};

// Wraps an arbitrary reply function.
class LambdaChatBackend : public ChatBackend {
public:
    using Fn = std::function<std::string(const std::string& system,
                                         const std::vector<ChatMessage>& messages)>;
    explicit LambdaChatBackend(Fn fn) : fn_(std::move(fn)) {}
    ChatResult complete(const std::string& system, const std::vector<ChatMessage>& messages,
                        double temperature) override;
    bool offline_safe() const override { return true; }
    InFlightGauge gauge;

private:
    Fn fn_;
};

// Maps each text to a pseudo-random unit vector seeded by the text's hash.
// Identical texts get identical vectors; distinct texts are near-orthogonal
// in high dimensions. `dim` is the full provider width, before any client
// truncation. Optional sleep forces observable request overlap.
class HashEmbedBackend : public EmbedBackend {
public:
    explicit HashEmbedBackend(int dim = 2048, int sleep_ms = 0)
        : dim_(dim), sleep_ms_(sleep_ms) {}
    std::vector<std::vector<float>> embed_batch(const std::vector<std::string>& texts) override;
    bool offline_safe() const override { return true; }
    InFlightGauge gauge;

    static std::vector<float> vector_for(const std::string& text, int dim);

private:
    int dim_;
    int sleep_ms_;
};

// Rule-based chat stub covering every prompt the pipeline issues: the six
// facet description prompts, goal classification, term filtering, and the
// simulator/assistant generation prompts. Replies are deterministic
// functions of the prompt content, so full offline runs are reproducible
// bit-for-bit. Recognition is by prompt markers; unrecognized prompts get a
// generic deterministic reply.
class OfflineChatBackend : public ChatBackend {
public:
    ChatResult complete(const std::string& system, const std::vector<ChatMessage>& messages,
                        double temperature) override;
    bool offline_safe() const override { return true; }
    InFlightGauge gauge;
};

}  // namespace bgap
