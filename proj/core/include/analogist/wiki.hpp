#pragma once

#include "analogist/gateway.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace analogist {

// A resolved encyclopedia page (redirects already followed).
struct WikiPage {
    std::string title;    // canonical title
    std::string page_id;  // opaque identifier, stable across titles
    std::string extract;  // lead extract, plain text
    bool disambiguation = false;
};

enum class VerifyStatus { Verified, NotFound, Ambiguous };

std::string to_string(VerifyStatus status);

struct VerificationVerdict {
    std::string query_title;
    VerifyStatus status = VerifyStatus::NotFound;
    std::optional<std::string> canonical_title;
    std::optional<std::string> page_id;
    std::optional<std::string> extract;

    bool ok() const { return status == VerifyStatus::Verified; }
};

// Enforces the verdict invariants: Verified carries canonical title, page id
// and a nonempty extract; anything else carries no extract.
void validate(const VerificationVerdict& verdict);

nlohmann::json to_json(const VerificationVerdict& verdict);

// Minimal encyclopedia surface the verifier needs. Implementations: the live
// HTTP client, the JSON fixture source, and the recording wrapper.
class WikiSource {
public:
    virtual ~WikiSource() = default;

    // Resolve a title to a page, following redirects. nullopt = no such page.
    virtual std::optional<WikiPage> resolve(const std::string& title) = 0;

    // Full-text search; canonical titles, best hit first.
    virtual std::vector<std::string> search(const std::string& query, int limit) = 0;

    // Fetch a page by id. nullopt = the page no longer exists.
    virtual std::optional<WikiPage> fetch(const std::string& page_id) = 0;
};

// Hermetic source backed by a JSON fixture:
//   {"pages":    [{"title", "page_id", "extract", "disambiguation", "aliases": [...]}, ...],
//    "searches": [{"query", "results": [...]}, ...]}
// Aliases resolve to their page, modelling redirects. Lookups key on
// normalize_title, so near-miss capitalisation behaves like the live site.
class FixtureWikiSource : public WikiSource {
public:
    FixtureWikiSource() = default;
    explicit FixtureWikiSource(const std::string& path);

    std::optional<WikiPage> resolve(const std::string& title) override;
    std::vector<std::string> search(const std::string& query, int limit) override;
    std::optional<WikiPage> fetch(const std::string& page_id) override;

    // Fixture authoring (tests and the recording wrapper).
    void add_page(WikiPage page, std::vector<std::string> aliases = {});
    void add_alias(const std::string& page_id, const std::string& alias);
    void add_search(const std::string& query, std::vector<std::string> results);
    void save(const std::string& path) const;

    std::size_t page_count() const { return pages_.size(); }

private:
    std::vector<WikiPage> pages_;
    std::vector<std::pair<std::string, std::vector<std::string>>> aliases_;  // parallel to pages_
    std::unordered_map<std::string, std::size_t> by_title_;                  // normalized -> index
    std::unordered_map<std::string, std::size_t> by_id_;
    std::unordered_map<std::string, std::vector<std::string>> searches_;  // normalized query
    mutable std::mutex mutex_;
};

// Pass-through wrapper that captures every response from an inner (live)
// source into a fixture for later replay.
class RecordingWikiSource : public WikiSource {
public:
    RecordingWikiSource(std::shared_ptr<WikiSource> inner, std::string fixture_path);
    ~RecordingWikiSource() override;

    std::optional<WikiPage> resolve(const std::string& title) override;
    std::vector<std::string> search(const std::string& query, int limit) override;
    std::optional<WikiPage> fetch(const std::string& page_id) override;

    void flush() const;

private:
    std::shared_ptr<WikiSource> inner_;
    std::string fixture_path_;
    FixtureWikiSource recorded_;
    std::mutex mutex_;
};

struct VerifierConfig {
    // Rule (b): top search hit accepted when its normalized title is at least
    // this similar (normalized Levenshtein) to the normalized query.
    double accept_similarity = 0.85;
    int search_limit = 5;
    double requests_per_minute = 0.0;  // <= 0 disables the bucket
    RetryPolicy retry;
    // Cached verdicts older than ttl are re-checked; <= 0 means never expire.
    std::chrono::seconds ttl{0};
};

// Title -> verdict with a normalized-title cache. Thread-safe.
class Verifier {
public:
    explicit Verifier(std::shared_ptr<WikiSource> source, VerifierConfig config = {});

    VerificationVerdict verify(const std::string& title);

    // Lead extract of a previously verified page: reference markers stripped,
    // truncated to the first five paragraphs. Throws GonePageError when the
    // page has vanished since verification.
    std::string fetch_description(const std::string& page_id);

    std::size_t cache_size() const;

private:
    VerificationVerdict verify_uncached(const std::string& title);
    std::optional<WikiPage> resolve_with_retry(const std::string& title);

    std::shared_ptr<WikiSource> source_;
    VerifierConfig config_;
    RateLimiter limiter_;
    mutable std::mutex mutex_;
    struct CacheEntry {
        VerificationVerdict verdict;
        std::chrono::steady_clock::time_point stored_at;
    };
    std::unordered_map<std::string, CacheEntry> cache_;  // key: normalize_title
};

// Strips inline reference markers ([3], [a], [citation needed], ...) from an
// extract without touching substantive bracketed prose.
std::string strip_reference_markers(const std::string& text);

// First `limit` paragraphs (blank-line separated) of `text`.
std::string truncate_paragraphs(const std::string& text, std::size_t limit);

}  // namespace analogist
