#include "analogist/wiki.hpp"

#include "analogist/text.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

namespace analogist {

using nlohmann::json;

std::string to_string(VerifyStatus status) {
    switch (status) {
        case VerifyStatus::Verified: return "verified";
        case VerifyStatus::NotFound: return "not-found";
        case VerifyStatus::Ambiguous: return "ambiguous";
    }
    return "?";
}

void validate(const VerificationVerdict& verdict) {
    if (verdict.query_title.empty())
        throw SchemaError("verdict: empty query title");
    if (verdict.status == VerifyStatus::Verified) {
        if (!verdict.canonical_title || verdict.canonical_title->empty() ||
            !verdict.page_id || verdict.page_id->empty() || !verdict.extract ||
            verdict.extract->empty())
            throw SchemaError("verified verdict for '" + verdict.query_title +
                              "' lacks canonical title, page id, or extract");
    } else if (verdict.extract) {
        throw SchemaError("non-verified verdict for '" + verdict.query_title +
                          "' carries an extract");
    }
}

json to_json(const VerificationVerdict& verdict) {
    json j{{"query_title", verdict.query_title}, {"status", to_string(verdict.status)}};
    if (verdict.canonical_title) j["canonical_title"] = *verdict.canonical_title;
    if (verdict.page_id) j["page_id"] = *verdict.page_id;
    if (verdict.extract) j["extract"] = *verdict.extract;
    return j;
}

// ---------------------------------------------------------------------------
// FixtureWikiSource

FixtureWikiSource::FixtureWikiSource(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("wiki fixture not found: " + path);
    json j = json::parse(in, nullptr, false);
    if (!j.is_object()) throw SchemaError("wiki fixture is not a JSON object: " + path);
    for (const auto& p : j.value("pages", json::array())) {
        WikiPage page;
        page.title = p.at("title").get<std::string>();
        page.page_id = p.at("page_id").get<std::string>();
        page.extract = p.value("extract", std::string{});
        page.disambiguation = p.value("disambiguation", false);
        std::vector<std::string> aliases;
        for (const auto& a : p.value("aliases", json::array()))
            aliases.push_back(a.get<std::string>());
        add_page(std::move(page), std::move(aliases));
    }
    for (const auto& s : j.value("searches", json::array())) {
        std::vector<std::string> results;
        for (const auto& r : s.at("results")) results.push_back(r.get<std::string>());
        add_search(s.at("query").get<std::string>(), std::move(results));
    }
}

void FixtureWikiSource::add_page(WikiPage page, std::vector<std::string> aliases) {
    std::lock_guard lock(mutex_);
    std::size_t index = pages_.size();
    by_title_[text::normalize_title(page.title)] = index;
    for (const auto& alias : aliases) by_title_[text::normalize_title(alias)] = index;
    by_id_[page.page_id] = index;
    pages_.push_back(std::move(page));
    aliases_.emplace_back(pages_.back().title, std::move(aliases));
}

void FixtureWikiSource::add_alias(const std::string& page_id, const std::string& alias) {
    std::lock_guard lock(mutex_);
    auto it = by_id_.find(page_id);
    if (it == by_id_.end()) throw ConfigError("add_alias: unknown page id " + page_id);
    by_title_[text::normalize_title(alias)] = it->second;
    auto& aliases = aliases_[it->second].second;
    if (std::find(aliases.begin(), aliases.end(), alias) == aliases.end())
        aliases.push_back(alias);
}

void FixtureWikiSource::add_search(const std::string& query, std::vector<std::string> results) {
    std::lock_guard lock(mutex_);
    searches_[text::normalize_title(query)] = std::move(results);
}

std::optional<WikiPage> FixtureWikiSource::resolve(const std::string& title) {
    std::lock_guard lock(mutex_);
    auto it = by_title_.find(text::normalize_title(title));
    if (it == by_title_.end()) return std::nullopt;
    return pages_[it->second];
}

std::vector<std::string> FixtureWikiSource::search(const std::string& query, int limit) {
    std::lock_guard lock(mutex_);
    std::vector<std::string> results;
    auto it = searches_.find(text::normalize_title(query));
    if (it != searches_.end()) {
        results = it->second;
    } else {
        // Unscripted query: an exact-title page still surfaces as the top hit,
        // which keeps small fixtures terse.
        auto page = by_title_.find(text::normalize_title(query));
        if (page != by_title_.end()) results.push_back(pages_[page->second].title);
    }
    if (limit >= 0 && results.size() > static_cast<std::size_t>(limit))
        results.resize(static_cast<std::size_t>(limit));
    return results;
}

std::optional<WikiPage> FixtureWikiSource::fetch(const std::string& page_id) {
    std::lock_guard lock(mutex_);
    auto it = by_id_.find(page_id);
    if (it == by_id_.end()) return std::nullopt;
    return pages_[it->second];
}

void FixtureWikiSource::save(const std::string& path) const {
    std::lock_guard lock(mutex_);
    json pages = json::array();
    for (std::size_t i = 0; i < pages_.size(); ++i) {
        const WikiPage& p = pages_[i];
        json entry{{"title", p.title},
                   {"page_id", p.page_id},
                   {"extract", p.extract},
                   {"disambiguation", p.disambiguation}};
        if (!aliases_[i].second.empty()) entry["aliases"] = aliases_[i].second;
        pages.push_back(std::move(entry));
    }
    json searches = json::array();
    std::vector<std::string> queries;
    queries.reserve(searches_.size());
    for (const auto& [query, _] : searches_) queries.push_back(query);
    std::sort(queries.begin(), queries.end());  // stable file content
    for (const auto& query : queries)
        searches.push_back(json{{"query", query}, {"results", searches_.at(query)}});
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write wiki fixture: " + path);
    out << json{{"pages", pages}, {"searches", searches}}.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// RecordingWikiSource

RecordingWikiSource::RecordingWikiSource(std::shared_ptr<WikiSource> inner,
                                         std::string fixture_path)
    : inner_(std::move(inner)), fixture_path_(std::move(fixture_path)) {}

RecordingWikiSource::~RecordingWikiSource() {
    try {
        flush();
    } catch (...) {
        // Destructor must not throw; an explicit flush() reports failures.
    }
}

std::optional<WikiPage> RecordingWikiSource::resolve(const std::string& title) {
    auto page = inner_->resolve(title);
    std::lock_guard lock(mutex_);
    if (page) {
        if (!recorded_.fetch(page->page_id)) recorded_.add_page(*page);
        if (text::normalize_title(title) != text::normalize_title(page->title))
            recorded_.add_alias(page->page_id, title);  // remember the redirect
    }
    return page;
}

std::vector<std::string> RecordingWikiSource::search(const std::string& query, int limit) {
    auto results = inner_->search(query, limit);
    std::lock_guard lock(mutex_);
    recorded_.add_search(query, results);
    return results;
}

std::optional<WikiPage> RecordingWikiSource::fetch(const std::string& page_id) {
    auto page = inner_->fetch(page_id);
    std::lock_guard lock(mutex_);
    if (page && !recorded_.fetch(page->page_id)) recorded_.add_page(*page);
    return page;
}

void RecordingWikiSource::flush() const { recorded_.save(fixture_path_); }

// ---------------------------------------------------------------------------
// Verifier

Verifier::Verifier(std::shared_ptr<WikiSource> source, VerifierConfig config)
    : source_(std::move(source)),
      config_(config),
      limiter_(config.requests_per_minute) {
    if (!source_) throw ConfigError("verifier needs a wiki source");
    if (config_.accept_similarity <= 0.0 || config_.accept_similarity > 1.0)
        throw ConfigError("accept_similarity must be in (0, 1]");
}

std::size_t Verifier::cache_size() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
}

std::optional<WikiPage> Verifier::resolve_with_retry(const std::string& title) {
    return with_transport_retry(config_.retry, [&] {
        limiter_.acquire();
        return source_->resolve(title);
    });
}

VerificationVerdict Verifier::verify(const std::string& title) {
    if (text::trim(title).empty()) throw SchemaError("verify: empty title");
    std::string key = text::normalize_title(title);
    {
        std::lock_guard lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) {
            bool fresh = config_.ttl.count() <= 0 ||
                         std::chrono::steady_clock::now() - it->second.stored_at < config_.ttl;
            if (fresh) {
                VerificationVerdict verdict = it->second.verdict;
                verdict.query_title = title;
                return verdict;
            }
            cache_.erase(it);
        }
    }
    VerificationVerdict verdict = verify_uncached(title);
    validate(verdict);
    {
        std::lock_guard lock(mutex_);
        cache_[key] = CacheEntry{verdict, std::chrono::steady_clock::now()};
    }
    return verdict;
}

VerificationVerdict Verifier::verify_uncached(const std::string& title) {
    VerificationVerdict verdict;
    verdict.query_title = title;

    auto accept = [&](const WikiPage& page) {
        if (page.disambiguation) {
            verdict.status = VerifyStatus::Ambiguous;
            verdict.canonical_title = page.title;
            verdict.page_id = page.page_id;
            return;
        }
        std::string extract = page.extract;
        if (extract.empty()) {
            // Some resolve paths return bare metadata; pull the full page.
            auto full = with_transport_retry(config_.retry, [&] {
                limiter_.acquire();
                return source_->fetch(page.page_id);
            });
            if (full) extract = full->extract;
        }
        if (extract.empty()) {
            verdict.status = VerifyStatus::NotFound;  // a page we cannot describe
            return;
        }
        verdict.status = VerifyStatus::Verified;
        verdict.canonical_title = page.title;
        verdict.page_id = page.page_id;
        verdict.extract = std::move(extract);
    };

    // Rule (a): exact title or redirect.
    if (auto page = resolve_with_retry(title)) {
        accept(*page);
        return verdict;
    }

    // Rule (b): fuzzy match against the top search hit.
    auto results = with_transport_retry(config_.retry, [&] {
        limiter_.acquire();
        return source_->search(title, config_.search_limit);
    });
    if (results.empty()) return verdict;  // NotFound

    const std::string& top = results.front();
    double similarity = text::levenshtein_similarity(text::normalize_title(title),
                                                     text::normalize_title(top));
    if (similarity < config_.accept_similarity) return verdict;  // NotFound

    if (auto page = resolve_with_retry(top)) accept(*page);
    return verdict;
}

std::string Verifier::fetch_description(const std::string& page_id) {
    if (page_id.empty()) throw SchemaError("fetch_description: empty page id");
    auto page = with_transport_retry(config_.retry, [&] {
        limiter_.acquire();
        return source_->fetch(page_id);
    });
    if (!page) throw GonePageError("page " + page_id + " no longer exists");
    return truncate_paragraphs(strip_reference_markers(page->extract), 5);
}

// ---------------------------------------------------------------------------
// Extract cleanup

std::string strip_reference_markers(const std::string& text) {
    // Footnote shapes only: numbers, single letters, "note 3", and the common
    // editorial tags. Substantive bracketed prose stays put.
    static const std::regex marker(
        R"(\[\s*(?:\d+|[a-z]|note\s+\d+|nb\s+\d+|citation\s+needed|clarification\s+needed|page\s+needed|who\?|when\?|according\s+to\s+whom\??)\s*\])",
        std::regex::icase);
    return std::regex_replace(text, marker, "");
}

std::string truncate_paragraphs(const std::string& text, std::size_t limit) {
    std::vector<std::string> paragraphs;
    std::string current;
    std::istringstream in(text);
    std::string line;
    auto flush = [&] {
        if (!analogist::text::trim(current).empty()) paragraphs.push_back(current);
        current.clear();
    };
    while (std::getline(in, line)) {
        if (analogist::text::trim(line).empty()) {
            flush();
        } else {
            if (!current.empty()) current += '\n';
            current += line;
        }
    }
    flush();
    if (paragraphs.size() > limit) paragraphs.resize(limit);
    std::string out;
    for (std::size_t i = 0; i < paragraphs.size(); ++i) {
        if (i) out += "\n\n";
        out += paragraphs[i];
    }
    return out;
}

}  // namespace analogist
