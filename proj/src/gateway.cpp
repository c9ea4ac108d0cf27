#include "bgap/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "bgap/sha256.hpp"
#include "bgap/stubs.hpp"
#include "httplib.h"
#include "json.hpp"

namespace bgap {

namespace fs = std::filesystem;
using nlohmann::json;

void Semaphore::acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return count_ > 0; });
    --count_;
}

void Semaphore::release() {
    {
        std::lock_guard lock(mu_);
        ++count_;
    }
    cv_.notify_one();
}

namespace {

struct SemaphoreGuard {
    explicit SemaphoreGuard(Semaphore& s) : sem(s) { sem.acquire(); }
    ~SemaphoreGuard() { sem.release(); }
    Semaphore& sem;
};

std::string api_key_from_env(const ProviderConfig& config) {
    if (config.api_key_env.empty()) return {};
    const char* v = std::getenv(config.api_key_env.c_str());
    return v ? std::string(v) : std::string();
}

void sleep_backoff(double base_seconds, int attempt) {
    double s = base_seconds * double(1 << attempt);
    std::this_thread::sleep_for(std::chrono::duration<double>(s));
}

bool retryable_status(int status) {
    return status == 429 || status == 408 || (status >= 500 && status < 600);
}

// Runs fn with the retry contract: transient failures back off and retry up
// to max_retries; anything else propagates immediately.
template <typename Fn>
auto with_retries(const ProviderConfig& config, Fn&& fn) {
    int attempt = 0;
    for (;;) {
        try {
            return fn();
        } catch (const TransientError& e) {
            if (attempt >= config.max_retries)
                throw ProviderError("retries exhausted: " + std::string(e.what()));
            sleep_backoff(config.retry_backoff_seconds, attempt);
            ++attempt;
        }
    }
}

class HttpChatBackend : public ChatBackend {
public:
    explicit HttpChatBackend(ProviderConfig config) : config_(std::move(config)) {}

    ChatResult complete(const std::string& system, const std::vector<ChatMessage>& messages,
                        double temperature) override {
        json body;
        body["model"] = config_.model;
        body["temperature"] = temperature;
        json msgs = json::array();
        if (!system.empty()) msgs.push_back({{"role", "system"}, {"content", system}});
        for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
        body["messages"] = std::move(msgs);

        json reply = post_json(config_.chat_path, body);
        ChatResult out;
        try {
            out.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw ProviderError("malformed chat completion response: " + std::string(e.what()));
        }
        if (reply.contains("usage")) {
            out.usage.prompt_tokens = reply["usage"].value("prompt_tokens", 0L);
            out.usage.completion_tokens = reply["usage"].value("completion_tokens", 0L);
        }
        return out;
    }

    json post_json(const std::string& path, const json& body) {
        httplib::Client client(config_.base_url);
        client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_seconds));
        client.set_read_timeout(std::chrono::duration<double>(config_.timeout_seconds));
        httplib::Headers headers;
        std::string key = api_key_from_env(config_);
        if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);
        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (!res) throw TransientError("transport failure: " + httplib::to_string(res.error()));
        if (res->status < 200 || res->status >= 300) {
            std::string msg = "HTTP " + std::to_string(res->status) + " from " + path;
            if (retryable_status(res->status)) throw TransientError(msg);
            throw ProviderError(msg + ": " + res->body.substr(0, 200));
        }
        try {
            return json::parse(res->body);
        } catch (const json::exception&) {
            throw ProviderError("non-JSON response from " + path);
        }
    }

private:
    ProviderConfig config_;
};

class HttpEmbedBackend : public EmbedBackend {
public:
    explicit HttpEmbedBackend(ProviderConfig config)
        : config_(std::move(config)), chat_backend_(config_) {}

    std::vector<std::vector<float>> embed_batch(const std::vector<std::string>& texts) override {
        json body;
        body["model"] = config_.model;
        body["input"] = texts;
        json reply = chat_backend_.post_json(config_.embed_path, body);
        std::vector<std::vector<float>> out(texts.size());
        try {
            const auto& data = reply.at("data");
            if (data.size() != texts.size())
                throw ProviderError("embedding count mismatch: got " +
                                    std::to_string(data.size()) + " for " +
                                    std::to_string(texts.size()) + " inputs");
            for (const auto& item : data) {
                size_t idx = item.value("index", size_t(out.size() + 1));
                if (idx >= out.size()) throw ProviderError("embedding index out of range");
                out[idx] = item.at("embedding").get<std::vector<float>>();
            }
        } catch (const json::exception& e) {
            throw ProviderError("malformed embeddings response: " + std::string(e.what()));
        }
        return out;
    }

private:
    ProviderConfig config_;
    HttpChatBackend chat_backend_;
};

bool is_stub_url(const std::string& url) { return url.rfind("stub://", 0) == 0; }

std::string cache_file(const std::string& dir, const std::string& key) {
    return (fs::path(dir) / (key + ".json")).string();
}

// Cached entries persist the whole exchange so cache directories are
// auditable on their own.
json exchange_to_json(const ChatExchange& e) {
    json msgs = json::array();
    for (const auto& m : e.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    return json{{"system", e.system},
                {"messages", std::move(msgs)},
                {"reply", e.reply},
                {"prompt_tokens", e.usage.prompt_tokens},
                {"completion_tokens", e.usage.completion_tokens}};
}

}  // namespace

std::shared_ptr<ChatBackend> make_chat_backend(const ProviderConfig& config) {
    if (is_stub_url(config.base_url)) {
        std::string name = config.base_url.substr(7);
        if (name == "echo") return std::make_shared<EchoChatBackend>();
        if (name == "offline" || name == "chat") return std::make_shared<OfflineChatBackend>();
        throw ValidationError("unknown chat stub: " + config.base_url);
    }
    if (config.offline && config.cache_dir.empty())
        throw ValidationError("offline mode requires a cache directory or a stub provider");
    return std::make_shared<HttpChatBackend>(config);
}

std::shared_ptr<EmbedBackend> make_embed_backend(const ProviderConfig& config) {
    if (is_stub_url(config.base_url)) {
        std::string name = config.base_url.substr(7);
        if (name == "hash" || name == "embed")
            return std::make_shared<HashEmbedBackend>(config.stub_dim);
        throw ValidationError("unknown embedding stub: " + config.base_url);
    }
    if (config.offline && config.cache_dir.empty())
        throw ValidationError("offline mode requires a cache directory or a stub provider");
    return std::make_shared<HttpEmbedBackend>(config);
}

ChatClient::ChatClient(ProviderConfig config, std::shared_ptr<ChatBackend> backend)
    : config_(std::move(config)),
      backend_(backend ? std::move(backend) : make_chat_backend(config_)),
      semaphore_(std::max(1, config_.max_concurrency)) {
    if (config_.max_concurrency < 1) throw ValidationError("max_concurrency must be >= 1");
    if (config_.timeout_seconds <= 0) throw ValidationError("timeout must be > 0");
    if (!config_.cache_dir.empty()) fs::create_directories(config_.cache_dir);
}

ChatResult ChatClient::chat(const std::string& system,
                            const std::vector<ChatMessage>& messages) {
    if (messages.empty()) throw ValidationError("chat: messages must be non-empty");

    // Replies are only deterministic at temperature 0; skip the cache otherwise.
    bool cacheable = config_.temperature == 0.0 && !config_.cache_dir.empty();
    std::string key;
    if (cacheable) {
        json req;
        req["kind"] = "chat";
        req["model"] = config_.model;
        req["system"] = system;
        json msgs = json::array();
        for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
        req["messages"] = std::move(msgs);
        req["temperature"] = config_.temperature;
        key = sha256_hex(req.dump());

        {
            std::lock_guard lock(cache_mu_);
            auto it = mem_cache_.find(key);
            if (it != mem_cache_.end()) return it->second;
        }
        std::ifstream in(cache_file(config_.cache_dir, key));
        if (in) {
            json j = json::parse(in);
            ChatResult r;
            r.text = j.at("reply").get<std::string>();
            r.usage.prompt_tokens = j.value("prompt_tokens", 0L);
            r.usage.completion_tokens = j.value("completion_tokens", 0L);
            std::lock_guard lock(cache_mu_);
            mem_cache_[key] = r;
            return r;
        }
    }

    if (config_.offline && !backend_->offline_safe())
        throw ProviderError("offline: chat request not present in cache");

    ChatResult result = with_retries(config_, [&] {
        SemaphoreGuard guard(semaphore_);
        backend_calls_.fetch_add(1);
        return backend_->complete(system, messages, config_.temperature);
    });

    {
        std::lock_guard lock(usage_mu_);
        usage_.prompt_tokens += result.usage.prompt_tokens;
        usage_.completion_tokens += result.usage.completion_tokens;
    }
    if (cacheable) {
        ChatExchange exchange{system, messages, result.text, result.usage};
        std::ofstream out(cache_file(config_.cache_dir, key), std::ios::trunc);
        out << exchange_to_json(exchange).dump() << "\n";
        std::lock_guard lock(cache_mu_);
        mem_cache_[key] = result;
    }
    return result;
}

TokenUsage ChatClient::total_usage() const {
    std::lock_guard lock(usage_mu_);
    return usage_;
}

EmbeddingClient::EmbeddingClient(ProviderConfig config, std::shared_ptr<EmbedBackend> backend)
    : config_(std::move(config)),
      backend_(backend ? std::move(backend) : make_embed_backend(config_)),
      semaphore_(std::max(1, config_.max_concurrency)) {
    if (config_.max_concurrency < 1) throw ValidationError("max_concurrency must be >= 1");
    if (!config_.cache_dir.empty()) fs::create_directories(config_.cache_dir);
}

MatF EmbeddingClient::embed(const std::vector<std::string>& texts, int truncate_dim) {
    if (texts.empty()) throw ValidationError("embed: texts must be non-empty");
    if (truncate_dim < 1) throw ValidationError("embed: truncate_dim must be positive");

    std::vector<std::vector<float>> full(texts.size());
    std::vector<size_t> missing;

    for (size_t i = 0; i < texts.size(); ++i) {
        std::string key = sha256_hex("embed\x1f" + config_.model + "\x1f" + texts[i]);
        bool found = false;
        if (!config_.cache_dir.empty()) {
            {
                std::lock_guard lock(cache_mu_);
                auto it = mem_cache_.find(key);
                if (it != mem_cache_.end()) {
                    full[i] = it->second;
                    found = true;
                }
            }
            if (!found) {
                std::ifstream in(cache_file(config_.cache_dir, key));
                if (in) {
                    json j = json::parse(in);
                    full[i] = j.at("embedding").get<std::vector<float>>();
                    std::lock_guard lock(cache_mu_);
                    mem_cache_[key] = full[i];
                    found = true;
                }
            }
        }
        if (!found) missing.push_back(i);
    }

    if (!missing.empty() && config_.offline && !backend_->offline_safe())
        throw ProviderError("offline: " + std::to_string(missing.size()) +
                            " embedding(s) not present in cache");

    // Batch the cache misses; batches run concurrently under the semaphore,
    // results land at their original indices so output order is input order.
    if (!missing.empty()) {
        size_t batch = size_t(std::max(1, config_.embed_batch_size));
        std::vector<std::pair<size_t, size_t>> ranges;  // [begin, end) into missing
        for (size_t b = 0; b < missing.size(); b += batch)
            ranges.emplace_back(b, std::min(b + batch, missing.size()));

        std::exception_ptr first_error;
        std::mutex err_mu;
        std::atomic<size_t> next{0};
        int workers = std::min<int>(config_.max_concurrency, int(ranges.size()));
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    size_t r = next.fetch_add(1);
                    if (r >= ranges.size()) return;
                    auto [begin, end] = ranges[r];
                    std::vector<std::string> chunk;
                    chunk.reserve(end - begin);
                    for (size_t m = begin; m < end; ++m) chunk.push_back(texts[missing[m]]);
                    try {
                        auto vecs = with_retries(config_, [&] {
                            SemaphoreGuard guard(semaphore_);
                            backend_calls_.fetch_add(1);
                            return backend_->embed_batch(chunk);
                        });
                        if (vecs.size() != chunk.size())
                            throw ProviderError("embedding batch size mismatch");
                        for (size_t m = begin; m < end; ++m)
                            full[missing[m]] = std::move(vecs[m - begin]);
                    } catch (...) {
                        std::lock_guard lock(err_mu);
                        if (!first_error) first_error = std::current_exception();
                        return;
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);

        if (!config_.cache_dir.empty()) {
            for (size_t i : missing) {
                std::string key = sha256_hex("embed\x1f" + config_.model + "\x1f" + texts[i]);
                json j;
                j["embedding"] = full[i];
                std::ofstream out(cache_file(config_.cache_dir, key), std::ios::trunc);
                out << j.dump() << "\n";
                std::lock_guard lock(cache_mu_);
                mem_cache_[key] = full[i];
            }
        }
    }

    MatF out(texts.size(), truncate_dim);
    for (size_t i = 0; i < texts.size(); ++i) {
        if (int(full[i].size()) < truncate_dim)
            throw ProviderError("provider returned dimension " + std::to_string(full[i].size()) +
                                " < truncate_dim " + std::to_string(truncate_dim));
        for (int j = 0; j < truncate_dim; ++j) out(Eigen::Index(i), j) = full[i][size_t(j)];
    }
    return out;
}

}  // namespace bgap
