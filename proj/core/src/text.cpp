#include "analogist/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <cctype>

namespace analogist::text {

namespace {

const icu::Normalizer2& nfkc_cf_instance() {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* norm = icu::Normalizer2::getNFKCCasefoldInstance(status);
    if (U_FAILURE(status) || norm == nullptr) {
        // ICU data is baked into libicu; this cannot fail on a sane install.
        std::abort();
    }
    return *norm;
}

std::vector<UChar32> to_codepoints(std::string_view s) {
    icu::UnicodeString us = icu::UnicodeString::fromUTF8(
        icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    std::vector<UChar32> cps;
    cps.reserve(static_cast<std::size_t>(us.countChar32()));
    for (int32_t i = 0; i < us.length();) {
        UChar32 c = us.char32At(i);
        cps.push_back(c);
        i += U16_LENGTH(c);
    }
    return cps;
}

void append_codepoint(std::string& out, UChar32 c) {
    icu::UnicodeString us(c);
    std::string tmp;
    us.toUTF8String(tmp);
    out += tmp;
}

bool is_word_char(UChar32 c) { return u_isalnum(c); }

bool is_space_cp(UChar32 c) { return u_isUWhiteSpace(c); }

// Strip non-alphanumeric codepoints from both ends of a token.
std::string strip_token_edges(const std::vector<UChar32>& cps) {
    std::size_t b = 0, e = cps.size();
    while (b < e && !is_word_char(cps[b])) ++b;
    while (e > b && !is_word_char(cps[e - 1])) --e;
    std::string out;
    for (std::size_t i = b; i < e; ++i) append_codepoint(out, cps[i]);
    return out;
}

bool is_article(const std::string& token) {
    return token == "the" || token == "a" || token == "an";
}

}  // namespace

std::string nfkc_casefold(std::string_view s) {
    const icu::Normalizer2& norm = nfkc_cf_instance();
    icu::UnicodeString in = icu::UnicodeString::fromUTF8(
        icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    UErrorCode status = U_ZERO_ERROR;
    icu::UnicodeString out = norm.normalize(in, status);
    std::string result;
    if (U_FAILURE(status)) return std::string(s);
    out.toUTF8String(result);
    return result;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    bool in_space = true;  // swallows leading whitespace
    for (UChar32 c : to_codepoints(s)) {
        if (is_space_cp(c)) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out += ' ';
        in_space = false;
        append_codepoint(out, c);
    }
    return out;
}

std::string normalize_title(std::string_view title) {
    std::string folded = nfkc_casefold(title);

    // Split on whitespace, strip punctuation from token edges.
    std::vector<std::string> tokens;
    std::vector<UChar32> current;
    auto flush = [&] {
        if (current.empty()) return;
        std::string tok = strip_token_edges(current);
        current.clear();
        if (!tok.empty()) tokens.push_back(std::move(tok));
    };
    for (UChar32 c : to_codepoints(folded)) {
        if (is_space_cp(c)) {
            flush();
        } else {
            current.push_back(c);
        }
    }
    flush();

    std::size_t b = 0, e = tokens.size();
    while (b < e && is_article(tokens[b])) ++b;
    while (e > b && is_article(tokens[e - 1])) --e;

    std::string out;
    for (std::size_t i = b; i < e; ++i) {
        if (!out.empty()) out += ' ';
        out += tokens[i];
    }
    return out;
}

double levenshtein_similarity(std::string_view a, std::string_view b) {
    std::vector<UChar32> ca = to_codepoints(a);
    std::vector<UChar32> cb = to_codepoints(b);
    const std::size_t n = ca.size(), m = cb.size();
    if (n == 0 && m == 0) return 1.0;

    std::vector<std::size_t> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            std::size_t sub = prev[j - 1] + (ca[i - 1] == cb[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    double dist = static_cast<double>(prev[m]);
    return 1.0 - dist / static_cast<double>(std::max(n, m));
}

std::set<std::string> word_token_set(std::string_view s) {
    std::string folded = nfkc_casefold(s);
    std::vector<UChar32> cps = to_codepoints(folded);

    std::set<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) tokens.insert(std::move(current));
        current.clear();
    };
    for (std::size_t i = 0; i < cps.size(); ++i) {
        UChar32 c = cps[i];
        if (is_word_char(c)) {
            append_codepoint(current, c);
            continue;
        }
        // Interior apostrophe keeps contractions like "don't" whole.
        bool apostrophe = (c == U'\'' || c == U'’');
        bool between_letters = apostrophe && !current.empty() && i + 1 < cps.size() &&
                               u_isalpha(cps[i + 1]);
        if (between_letters) {
            append_codepoint(current, U'\'');
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

std::size_t word_count(std::string_view s) {
    std::size_t count = 0;
    bool in_word = false;
    for (UChar32 c : to_codepoints(s)) {
        if (is_space_cp(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++count;
        }
    }
    return count;
}

std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t nl = s.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.emplace_back(s.substr(start));
            break;
        }
        std::string_view line = s.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.emplace_back(line);
        start = nl + 1;
    }
    return lines;
}

std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from) {
    if (needle.empty()) return from <= haystack.size() ? from : std::string_view::npos;
    if (haystack.size() < needle.size()) return std::string_view::npos;
    auto lower = [](unsigned char c) { return static_cast<char>(std::tolower(c)); };
    for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i) {
        bool hit = true;
        for (std::size_t j = 0; j < needle.size(); ++j) {
            if (lower(haystack[i + j]) != lower(needle[j])) {
                hit = false;
                break;
            }
        }
        if (hit) return i;
    }
    return std::string_view::npos;
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

}  // namespace analogist::text
