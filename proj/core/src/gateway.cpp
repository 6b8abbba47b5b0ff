#include "analogist/gateway.hpp"

#include "analogist/errors.hpp"
#include "analogist/text.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <thread>

namespace analogist {

namespace fs = std::filesystem;
using nlohmann::json;

double cosine_similarity(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) throw ConfigError("cosine over mismatched dimensions");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    // Zero vectors rank last instead of poisoning sorts with NaN.
    if (na == 0.0 || nb == 0.0) return -std::numeric_limits<double>::infinity();
    double cos = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(cos, -1.0, 1.0);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.model_tag != b.model_tag)
        throw ConfigError("cosine over mismatched embedding models: '" + a.model_tag + "' vs '" +
                          b.model_tag + "'");
    return cosine_similarity(a.values, b.values);
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

namespace {

std::string format_temperature(double t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", t);
    return buf;
}

}  // namespace

std::string completion_cache_key(const CompletionRequest& request) {
    std::string material = "chat\x1f" + request.model_tag + "\x1f" + request.system_prompt +
                           "\x1f" + request.user_prompt + "\x1f" +
                           format_temperature(request.temperature);
    return sha256_hex(material);
}

std::string embedding_cache_key(const std::string& model_tag, std::string_view input) {
    std::string material = "embed\x1f" + model_tag + "\x1f";
    material += input;
    return sha256_hex(material);
}

int parse_score(const std::string& response) {
    std::size_t marker = text::ifind(response, "score");
    if (marker == std::string::npos)
        throw ParseError("no 'score' marker in judge response");
    std::size_t i = marker + 5;
    while (i < response.size()) {
        char c = response[i];
        bool neg = (c == '-' && i + 1 < response.size() &&
                    std::isdigit(static_cast<unsigned char>(response[i + 1])));
        if (!neg && !std::isdigit(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        std::size_t start = i;
        if (neg) ++i;
        while (i < response.size() && std::isdigit(static_cast<unsigned char>(response[i]))) ++i;
        // "3.5" is not an integer; skip the fraction and keep scanning.
        if (i + 1 < response.size() && response[i] == '.' &&
            std::isdigit(static_cast<unsigned char>(response[i + 1]))) {
            ++i;
            while (i < response.size() && std::isdigit(static_cast<unsigned char>(response[i])))
                ++i;
            continue;
        }
        int value = std::stoi(response.substr(start, i - start));
        if (value < 1 || value > 4)
            throw ScoreOutOfRange("judge score " + std::to_string(value) + " outside [1, 4]");
        return value;
    }
    throw ParseError("no integer after 'score' marker");
}

std::vector<std::string> parse_candidate_list(const std::string& response) {
    std::size_t open = response.find('[');
    if (open == std::string::npos) throw ParseError("no bracketed list in response");

    // Find the matching close bracket, ignoring brackets inside quotes.
    std::size_t close = std::string::npos;
    int depth = 0;
    char quote = 0;
    for (std::size_t i = open; i < response.size(); ++i) {
        char c = response[i];
        if (quote != 0) {
            if (c == quote) quote = 0;
            continue;
        }
        if (c == '"' || c == '\'') quote = c;
        else if (c == '[') ++depth;
        else if (c == ']' && --depth == 0) {
            close = i;
            break;
        }
    }
    if (close == std::string::npos) throw ParseError("unterminated list in response");

    std::string body = response.substr(open + 1, close - open - 1);
    std::vector<std::string> raw;
    json parsed = json::parse(response.substr(open, close - open + 1), nullptr, false);
    if (parsed.is_array()) {
        for (const auto& item : parsed) {
            if (item.is_string()) raw.push_back(item.get<std::string>());
            else raw.push_back(item.dump());
        }
    } else {
        // Tolerate single quotes and bare entries.
        std::string current;
        quote = 0;
        for (char c : body) {
            if (quote != 0) {
                if (c == quote) quote = 0;
                else current += c;
                continue;
            }
            if (c == '"' || c == '\'') quote = c;
            else if (c == ',') {
                raw.push_back(current);
                current.clear();
            } else current += c;
        }
        raw.push_back(current);
    }

    std::vector<std::string> titles;
    std::unordered_set<std::string> seen;
    for (std::string& entry : raw) {
        std::string title = text::trim(entry);
        if (title.size() >= 2 &&
            ((title.front() == '"' && title.back() == '"') ||
             (title.front() == '\'' && title.back() == '\'')))
            title = text::trim(title.substr(1, title.size() - 2));
        if (title.empty()) continue;
        if (seen.insert(title).second) titles.push_back(std::move(title));
    }
    if (titles.empty()) throw ParseError("candidate list is empty");
    return titles;
}

std::optional<std::size_t> match_selection(const std::string& response,
                                           const std::vector<std::string>& candidate_titles) {
    std::string whole = text::normalize_title(response);
    for (std::size_t i = 0; i < candidate_titles.size(); ++i)
        if (!whole.empty() && whole == text::normalize_title(candidate_titles[i])) return i;

    std::optional<std::size_t> best;
    std::size_t best_pos = std::string::npos;
    std::size_t best_len = 0;
    for (std::size_t i = 0; i < candidate_titles.size(); ++i) {
        std::size_t pos = text::ifind(response, candidate_titles[i]);
        if (pos == std::string::npos) continue;
        if (pos < best_pos || (pos == best_pos && candidate_titles[i].size() > best_len)) {
            best = i;
            best_pos = pos;
            best_len = candidate_titles[i].size();
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Synthetic embeddings

HashEmbeddingBackend::HashEmbeddingBackend(std::size_t dimension, std::string model_tag)
    : dimension_(dimension), model_tag_(std::move(model_tag)) {}

std::vector<float> HashEmbeddingBackend::embed(std::string_view input) {
    // Expand SHA-256(text) into uniform u64 blocks, then Box-Muller. No
    // std:: distributions: their output is implementation-defined.
    std::string seed = sha256_hex(input);
    std::vector<double> values(dimension_);
    std::size_t produced = 0;
    std::uint32_t block = 0;
    auto next_u64s = [&](std::uint64_t out[4]) {
        std::string material = seed + "/" + std::to_string(block++);
        std::string hexdigest = sha256_hex(material);
        for (int w = 0; w < 4; ++w) {
            std::uint64_t v = 0;
            for (int b = 0; b < 16; ++b) {
                char c = hexdigest[w * 16 + b];
                v = (v << 4) | static_cast<std::uint64_t>(c <= '9' ? c - '0' : c - 'a' + 10);
            }
            out[w] = v;
        }
    };
    while (produced < dimension_) {
        std::uint64_t words[4];
        next_u64s(words);
        for (int pair = 0; pair < 2 && produced < dimension_; ++pair) {
            double u1 = (static_cast<double>(words[pair * 2] >> 11) + 0.5) * 0x1.0p-53;
            double u2 = (static_cast<double>(words[pair * 2 + 1] >> 11) + 0.5) * 0x1.0p-53;
            constexpr double two_pi = 6.283185307179586476925286766559;
            double r = std::sqrt(-2.0 * std::log(u1));
            values[produced++] = r * std::cos(two_pi * u2);
            if (produced < dimension_) values[produced++] = r * std::sin(two_pi * u2);
        }
    }
    double norm = 0.0;
    for (double v : values) norm += v * v;
    norm = std::sqrt(norm);
    std::vector<float> out(dimension_);
    for (std::size_t i = 0; i < dimension_; ++i)
        out[i] = static_cast<float>(norm > 0.0 ? values[i] / norm : (i == 0 ? 1.0 : 0.0));
    return out;
}

// ---------------------------------------------------------------------------
// Modes, rate limiting, replay

std::optional<RunMode> run_mode_from_string(const std::string& name) {
    if (name == "live") return RunMode::Live;
    if (name == "record") return RunMode::Record;
    if (name == "replay") return RunMode::Replay;
    return std::nullopt;
}

std::string to_string(RunMode mode) {
    switch (mode) {
        case RunMode::Live: return "live";
        case RunMode::Record: return "record";
        case RunMode::Replay: return "replay";
    }
    return "?";
}

RateLimiter::RateLimiter(double requests_per_minute)
    : rate_per_sec_(requests_per_minute / 60.0),
      capacity_(requests_per_minute),
      tokens_(requests_per_minute),
      last_refill_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
    if (rate_per_sec_ <= 0.0) return;
    std::unique_lock lock(mutex_);
    for (;;) {
        auto now = std::chrono::steady_clock::now();
        double elapsed = std::chrono::duration<double>(now - last_refill_).count();
        tokens_ = std::min(capacity_, tokens_ + elapsed * rate_per_sec_);
        last_refill_ = now;
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_per_sec_);
        lock.unlock();
        std::this_thread::sleep_for(wait);
        lock.lock();
    }
}

ReplayStore::ReplayStore(const std::string& path, bool writable)
    : path_(path), writable_(writable) {
    std::ifstream in(path);
    if (!in) {
        if (!writable)
            throw ConfigError("replay fixture file not found: " + path);
        return;  // record mode starts a fresh file
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (!j.is_object() || !j.contains("key") || !j.contains("response"))
            throw SchemaError(path + ":" + std::to_string(lineno) +
                              ": fixture records need 'key' and 'response'");
        entries_[j["key"].get<std::string>()] = j["response"].get<std::string>();
    }
}

std::optional<std::string> ReplayStore::lookup(const std::string& key) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ReplayStore::record(const std::string& key, const std::string& response) {
    if (!writable_) return;
    std::lock_guard lock(mutex_);
    auto [it, inserted] = entries_.emplace(key, response);
    if (!inserted) return;
    std::ofstream out(path_, std::ios::app);
    out << json{{"key", key}, {"response", response}}.dump() << '\n';
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(GatewayConfig config, std::unique_ptr<ChatBackend> chat,
                 std::unique_ptr<EmbeddingBackend> embedding)
    : config_(std::move(config)),
      chat_(std::move(chat)),
      embedding_(std::move(embedding)),
      limiter_(config_.requests_per_minute) {
    if (config_.mode == RunMode::Replay) {
        if (config_.fixture_path.empty())
            throw ConfigError("replay mode requires a fixture path");
        replay_ = std::make_unique<ReplayStore>(config_.fixture_path, /*writable=*/false);
    } else if (config_.mode == RunMode::Record) {
        if (config_.fixture_path.empty())
            throw ConfigError("record mode requires a fixture path");
        replay_ = std::make_unique<ReplayStore>(config_.fixture_path, /*writable=*/true);
    }
    if (!config_.cache_dir.empty()) fs::create_directories(config_.cache_dir);
}

std::string Gateway::cache_path(const std::string& key) const {
    return (fs::path(config_.cache_dir) / key.substr(0, 2) / (key + ".json")).string();
}

std::optional<std::string> Gateway::cache_lookup(const std::string& key) const {
    if (config_.cache_dir.empty()) return std::nullopt;
    std::ifstream in(cache_path(key));
    if (!in) return std::nullopt;
    json j = json::parse(in, nullptr, false);
    if (!j.is_object() || !j.contains("response")) return std::nullopt;
    return j["response"].get<std::string>();
}

void Gateway::cache_store(const std::string& key, const std::string& response,
                          const std::string& model_tag) const {
    if (config_.cache_dir.empty()) return;
    fs::path target = cache_path(key);
    fs::create_directories(target.parent_path());
    // Write-then-rename keeps concurrent readers away from partial files.
    static std::atomic<std::uint64_t> counter{0};
    fs::path tmp = target;
    tmp += ".tmp" + std::to_string(counter.fetch_add(1));
    {
        std::ofstream out(tmp);
        out << json{{"key", key},
                    {"model_tag", model_tag},
                    {"response", response},
                    {"timestamp", static_cast<std::int64_t>(std::time(nullptr))}}
                   .dump();
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) fs::remove(tmp, ec);
}

std::string Gateway::dispatch(const std::string& key, const std::string& model_tag,
                              const std::function<std::string()>& backend_call) {
    if (config_.mode == RunMode::Replay) {
        auto hit = replay_->lookup(key);
        if (!hit) throw ReplayMiss("no recording for key " + key);
        counters_.replay_hits.fetch_add(1);
        return *hit;
    }

    if (auto hit = cache_lookup(key)) {
        counters_.cache_hits.fetch_add(1);
        if (replay_) replay_->record(key, *hit);
        return *hit;
    }

    std::string response = with_transport_retry(config_.retry, [&] {
        limiter_.acquire();
        counters_.backend_calls.fetch_add(1);
        return backend_call();
    });
    cache_store(key, response, model_tag);
    if (replay_) replay_->record(key, response);
    return response;
}

std::string Gateway::complete(const CompletionRequest& request) {
    if (request.system_prompt.empty() && request.user_prompt.empty())
        throw ConfigError("completion request with empty prompts");
    counters_.completions.fetch_add(1);
    std::string key = completion_cache_key(request);
    return dispatch(key, request.model_tag, [&] {
        if (!chat_) throw ConfigError("no chat backend configured");
        return chat_->complete(request);
    });
}

EmbeddingVector Gateway::embed(std::string_view input) {
    if (input.empty()) throw ConfigError("embed: empty input");
    counters_.embeddings.fetch_add(1);
    std::string tag = embedding_model_tag();
    std::string key = embedding_cache_key(tag, input);
    std::string payload = dispatch(key, tag, [&] {
        if (!embedding_) throw ConfigError("no embedding backend configured");
        std::vector<float> values = embedding_->embed(input);
        json arr = json::array();
        for (float v : values) arr.push_back(v);
        return arr.dump();
    });
    json arr = json::parse(payload, nullptr, false);
    if (!arr.is_array() || arr.empty())
        throw SchemaError("embedding payload is not a vector");
    EmbeddingVector out;
    out.model_tag = tag;
    out.values.reserve(arr.size());
    for (const auto& v : arr) out.values.push_back(v.get<float>());
    for (float v : out.values)
        if (!std::isfinite(v)) throw SchemaError("embedding contains non-finite values");
    return out;
}

CompletionRequest Gateway::chat_request(std::string system_prompt, std::string user_prompt) const {
    return CompletionRequest{std::move(system_prompt), std::move(user_prompt),
                             config_.temperature, config_.chat_model};
}

CompletionRequest Gateway::judge_request(std::string system_prompt, std::string user_prompt) const {
    return CompletionRequest{std::move(system_prompt), std::move(user_prompt),
                             config_.temperature, config_.judge_model};
}

std::string Gateway::embedding_model_tag() const {
    if (embedding_) return embedding_->model_tag();
    // Replay runs have no backend; key embeddings under the configured tag so
    // lookups match what the recording run stored.
    return config_.embedding_model;
}

}  // namespace analogist
