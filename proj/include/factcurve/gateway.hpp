#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "factcurve/errors.hpp"

namespace factcurve {

// ---------------------------------------------------------------------------
// Requests and responses
// ---------------------------------------------------------------------------

struct ModelRequest {
    std::string model_id;
    std::string prompt;
    double temperature = 0.0;
    int max_tokens = 1024;

    friend bool operator==(const ModelRequest&, const ModelRequest&) = default;
};

struct ModelResponse {
    std::string text;
    bool cached = false;
    std::map<std::string, std::string> provider_meta;
};

/// SHA-256 of `data`, lowercase hex.
[[nodiscard]] inline std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256_hex: digest failure");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

/// Canonical serialization of a request: JSON object with sorted keys, prompt
/// bytes preserved verbatim, floats in shortest round-trip form.
[[nodiscard]] inline std::string canonical_request(const ModelRequest& req) {
    nlohmann::json j{
        {"max_tokens", req.max_tokens},
        {"model_id", req.model_id},
        {"prompt", req.prompt},
        {"temperature", req.temperature},
    };
    return j.dump();
}

/// Cache key: content hash of the canonicalized request.
[[nodiscard]] inline std::string cache_key(const ModelRequest& req) {
    return sha256_hex(canonical_request(req));
}

// ---------------------------------------------------------------------------
// Transport
// ---------------------------------------------------------------------------

/// A single attempt against a model provider. Implementations throw
/// ProviderUnreachableError, RateLimitedError or MalformedPayloadError;
/// retrying is the gateway's job.
class Transport {
public:
    virtual ~Transport() = default;
    virtual ModelResponse send(const ModelRequest& req) = 0;
};

// ---------------------------------------------------------------------------
// On-disk response cache
// ---------------------------------------------------------------------------

/// Content-addressed store of model responses. One JSON document per entry at
/// <root>/<first two key hex chars>/<key>.json, UTF-8 with LF newlines.
/// Thread-safe: shared in-memory index with exclusive writes.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path root) : root_(std::move(root)) {}

    using Clock = std::function<std::string()>;

    /// Override the timestamp source (ISO 8601 UTC) for reproducible stores.
    void set_clock(Clock clock) { clock_ = std::move(clock); }

    [[nodiscard]] std::optional<ModelResponse> lookup(const std::string& key) const {
        {
            std::shared_lock lock(mutex_);
            auto it = memo_.find(key);
            if (it != memo_.end()) return it->second;
        }
        const auto path = entry_path(key);
        if (!std::filesystem::exists(path)) return std::nullopt;
        std::ifstream in(path, std::ios::binary);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("corrupt cache entry " + path.string() + ": " + e.what());
        }
        ModelResponse resp;
        resp.text = j.at("response").at("text").get<std::string>();
        if (j.at("response").contains("provider_meta"))
            resp.provider_meta =
                j.at("response").at("provider_meta").get<std::map<std::string, std::string>>();
        {
            std::unique_lock lock(mutex_);
            memo_[key] = resp;
        }
        return resp;
    }

    void store(const std::string& key, const ModelRequest& req, const ModelResponse& resp) {
        nlohmann::json j{
            {"request",
             {{"model_id", req.model_id},
              {"prompt", req.prompt},
              {"temperature", req.temperature},
              {"max_tokens", req.max_tokens}}},
            {"response", {{"text", resp.text}, {"provider_meta", resp.provider_meta}}},
            {"created_at", clock_ ? clock_() : now_utc()},
        };
        const auto path = entry_path(key);
        std::unique_lock lock(mutex_);
        std::filesystem::create_directories(path.parent_path());
        const auto tmp = path.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary);
            out << j.dump(2) << "\n";
            if (!out) throw Error("cache write failed: " + tmp);
        }
        std::filesystem::rename(tmp, path);
        memo_[key] = resp;
    }

    [[nodiscard]] const std::filesystem::path& root() const { return root_; }

    [[nodiscard]] static std::string now_utc() {
        const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&t, &tm);
        char buf[32];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }

private:
    [[nodiscard]] std::filesystem::path entry_path(const std::string& key) const {
        return root_ / key.substr(0, 2) / (key + ".json");
    }

    std::filesystem::path root_;
    Clock clock_;
    mutable std::shared_mutex mutex_;
    mutable std::map<std::string, ModelResponse> memo_;
};

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

enum class GatewayMode {
    Replay, // cache only; a miss is an error and no provider call ever happens
    Record, // cache first, provider on miss, response persisted
};

/// Outcome of one request within complete_many: either a response or an
/// error message, never both.
struct CompletionOutcome {
    std::optional<ModelResponse> response;
    std::string error;

    [[nodiscard]] bool ok() const { return response.has_value(); }
};

/// Uniform access to chat-completion providers with deterministic
/// record/replay caching, retries and bounded parallelism.
class Gateway {
public:
    struct RetryPolicy {
        int max_attempts = 3;
        std::chrono::milliseconds initial_backoff{1000};
    };

    struct CallStats {
        std::atomic<long> provider_calls{0};
        std::atomic<long> cache_hits{0};
        std::atomic<long> cache_misses{0};
    };

    Gateway(GatewayMode mode, std::shared_ptr<ResponseCache> cache,
            std::shared_ptr<Transport> transport = nullptr)
        : mode_(mode), cache_(std::move(cache)), transport_(std::move(transport)) {}

    void set_retry_policy(RetryPolicy policy) { retry_ = policy; }

    /// Override the backoff sleep (tests inject a no-op).
    void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) {
        sleeper_ = std::move(sleeper);
    }

    [[nodiscard]] GatewayMode mode() const { return mode_; }
    [[nodiscard]] const CallStats& stats() const { return stats_; }

    ModelResponse complete(const ModelRequest& req) {
        if (req.prompt.empty()) throw DomainError("complete: empty prompt");
        if (req.max_tokens <= 0) throw DomainError("complete: max_tokens must be positive");
        if (req.temperature < 0.0) throw DomainError("complete: negative temperature");

        const auto key = cache_key(req);
        if (auto hit = cache_->lookup(key)) {
            ++stats_.cache_hits;
            hit->cached = true;
            return *hit;
        }
        ++stats_.cache_misses;
        if (mode_ == GatewayMode::Replay) throw CacheMissError(key);
        if (!transport_) throw ConfigError("complete: record mode without a configured provider");

        auto resp = send_with_retries(req);
        cache_->store(key, req, resp);
        resp.cached = false;
        return resp;
    }

    /// Completes every request with at most max_in_flight provider calls
    /// outstanding. Results are positional; one failure does not cancel the
    /// others.
    [[nodiscard]] std::vector<CompletionOutcome> complete_many(
            const std::vector<ModelRequest>& reqs, int max_in_flight) {
        if (max_in_flight < 1) throw DomainError("complete_many: max_in_flight must be >= 1");

        std::vector<CompletionOutcome> outcomes(reqs.size());
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= reqs.size()) return;
                try {
                    outcomes[i].response = complete(reqs[i]);
                } catch (const std::exception& e) {
                    outcomes[i].error = e.what();
                }
            }
        };

        const auto n_workers =
            std::min<std::size_t>(static_cast<std::size_t>(max_in_flight), reqs.size());
        std::vector<std::thread> threads;
        threads.reserve(n_workers);
        for (std::size_t t = 0; t < n_workers; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
        return outcomes;
    }

private:
    ModelResponse send_with_retries(const ModelRequest& req) {
        auto backoff = retry_.initial_backoff;
        for (int attempt = 1;; ++attempt) {
            try {
                ++stats_.provider_calls;
                return transport_->send(req);
            } catch (const ProviderUnreachableError&) {
                if (attempt >= retry_.max_attempts) throw;
            } catch (const RateLimitedError&) {
                if (attempt >= retry_.max_attempts)
                    throw RateLimitedError("rate limited after " +
                                           std::to_string(retry_.max_attempts) + " attempts");
            }
            sleeper_ ? sleeper_(backoff) : std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }

    GatewayMode mode_;
    std::shared_ptr<ResponseCache> cache_;
    std::shared_ptr<Transport> transport_;
    RetryPolicy retry_;
    std::function<void(std::chrono::milliseconds)> sleeper_;
    CallStats stats_;
};

} // namespace factcurve
