#pragma once

#include "analogist/errors.hpp"
#include "analogist/prompts.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace analogist {

struct CompletionRequest {
    std::string system_prompt;
    std::string user_prompt;
    double temperature = 0.1;
    std::string model_tag;
};

struct EmbeddingVector {
    std::vector<float> values;
    std::string model_tag;
};

double cosine_similarity(const std::vector<float>& a, const std::vector<float>& b);
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// Stable content-addressed keys. Identical inputs hash identically across
// runs and platforms; distinct inputs collide only with SHA-256 probability.
std::string sha256_hex(std::string_view data);
std::string completion_cache_key(const CompletionRequest& request);
std::string embedding_cache_key(const std::string& model_tag, std::string_view input);

// Extracts the first integer after a case-insensitive "score" marker and
// checks it against the 1-4 rubric. Throws ParseError / ScoreOutOfRange.
int parse_score(const std::string& response);

// Parses a bracketed, comma-separated list of (optionally quoted) titles.
// Trims entries, drops empties and exact duplicates preserving order.
// Throws ParseError when no usable list is found.
std::vector<std::string> parse_candidate_list(const std::string& response);

// Matches a selection response against candidate titles: whole-response
// normalized-title equality first, then the earliest (longest on ties)
// case-insensitive occurrence of any candidate title. nullopt = off-list.
std::optional<std::size_t> match_selection(const std::string& response,
                                           const std::vector<std::string>& candidate_titles);

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string complete(const CompletionRequest& request) = 0;
};

class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    virtual std::vector<float> embed(std::string_view input) = 0;
    virtual std::string model_tag() const = 0;
};

// Deterministic synthetic embeddings: SHA-256 of the text expanded into a
// unit vector. Identical text always maps to an identical vector, on every
// platform. Used by tests and offline runs.
class HashEmbeddingBackend : public EmbeddingBackend {
public:
    explicit HashEmbeddingBackend(std::size_t dimension = 64,
                                  std::string model_tag = "hash-embed-v1");
    std::vector<float> embed(std::string_view input) override;
    std::string model_tag() const override { return model_tag_; }

private:
    std::size_t dimension_;
    std::string model_tag_;
};

enum class RunMode { Live, Record, Replay };

std::optional<RunMode> run_mode_from_string(const std::string& name);
std::string to_string(RunMode mode);

struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds base_delay{1000};
    double factor = 2.0;
    bool jitter = true;
};

namespace detail {
inline std::chrono::duration<double, std::milli> backoff_delay(const RetryPolicy& policy,
                                                               int attempt) {
    auto delay = std::chrono::duration<double, std::milli>(
        static_cast<double>(policy.base_delay.count()) * std::pow(policy.factor, attempt - 1));
    if (policy.jitter) {
        static thread_local std::mt19937_64 rng{std::random_device{}()};
        delay *= 0.5 + (rng() >> 11) * 0x1.0p-53;  // uniform in [0.5, 1.5)
    }
    return delay;
}
}  // namespace detail

// Runs call() until it returns or a non-transport error escapes. Transport
// failures back off exponentially and rethrow once max_attempts is spent.
template <typename Fn>
auto with_transport_retry(const RetryPolicy& policy, Fn&& call) {
    int attempt = 0;
    for (;;) {
        ++attempt;
        try {
            return call();
        } catch (const TransportError&) {
            if (attempt >= policy.max_attempts) throw;
            std::this_thread::sleep_for(detail::backoff_delay(policy, attempt));
        }
    }
}

// Token bucket; acquire() blocks until a request slot is free.
class RateLimiter {
public:
    // requests_per_minute <= 0 disables limiting.
    explicit RateLimiter(double requests_per_minute);
    void acquire();

private:
    double rate_per_sec_;
    double capacity_;
    double tokens_;
    std::chrono::steady_clock::time_point last_refill_;
    std::mutex mutex_;
};

// Key -> raw response recordings, loaded from / appended to a JSONL file of
// {"key": <digest>, "response": <text>} records.
class ReplayStore {
public:
    ReplayStore() = default;
    explicit ReplayStore(const std::string& path, bool writable);

    std::optional<std::string> lookup(const std::string& key) const;
    void record(const std::string& key, const std::string& response);
    std::size_t size() const { return entries_.size(); }

private:
    std::string path_;
    bool writable_ = false;
    std::unordered_map<std::string, std::string> entries_;
    mutable std::mutex mutex_;
};

struct GatewayConfig {
    RunMode mode = RunMode::Live;
    std::string cache_dir;     // empty disables the disk cache
    std::string fixture_path;  // replay source or record sink
    double requests_per_minute = 0.0;
    RetryPolicy retry;
    std::string chat_model = "gpt-3.5-turbo-0125";
    std::string judge_model = "gpt-4";
    // Used for embedding cache keys when no backend is attached (replay runs).
    std::string embedding_model = "hash-embed-v1";
    double temperature = 0.1;
};

struct GatewayCounters {
    std::atomic<std::uint64_t> completions{0};
    std::atomic<std::uint64_t> embeddings{0};
    std::atomic<std::uint64_t> backend_calls{0};
    std::atomic<std::uint64_t> cache_hits{0};
    std::atomic<std::uint64_t> replay_hits{0};
};

// Provider-agnostic access to a chat model and an embedding model with a
// persistent content-addressed cache and deterministic replay. Safe for
// concurrent use; egress is serialized through the rate limiter.
class Gateway {
public:
    Gateway(GatewayConfig config, std::unique_ptr<ChatBackend> chat,
            std::unique_ptr<EmbeddingBackend> embedding);

    std::string complete(const CompletionRequest& request);
    EmbeddingVector embed(std::string_view input);

    // Request builders with the configured model tags and temperature.
    CompletionRequest chat_request(std::string system_prompt, std::string user_prompt) const;
    CompletionRequest judge_request(std::string system_prompt, std::string user_prompt) const;

    const GatewayConfig& config() const { return config_; }
    const GatewayCounters& counters() const { return counters_; }
    std::string embedding_model_tag() const;

private:
    std::string cache_path(const std::string& key) const;
    std::optional<std::string> cache_lookup(const std::string& key) const;
    void cache_store(const std::string& key, const std::string& response,
                     const std::string& model_tag) const;
    std::string dispatch(const std::string& key, const std::string& model_tag,
                         const std::function<std::string()>& backend_call);

    GatewayConfig config_;
    std::unique_ptr<ChatBackend> chat_;
    std::unique_ptr<EmbeddingBackend> embedding_;
    std::unique_ptr<ReplayStore> replay_;
    RateLimiter limiter_;
    GatewayCounters counters_;
};

}  // namespace analogist
