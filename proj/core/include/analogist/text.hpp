#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace analogist::text {

// NFKC normalization + Unicode case folding in one pass (ICU nfkc_cf).
std::string nfkc_casefold(std::string_view s);

// Collapse runs of whitespace to single spaces and trim the ends.
std::string collapse_whitespace(std::string_view s);

// Canonical form used for title equality everywhere: NFKC + casefold,
// whitespace collapsed, punctuation stripped from the edges of each token,
// leading/trailing articles ("the", "a", "an") dropped. Idempotent.
std::string normalize_title(std::string_view title);

// Edit-distance similarity over codepoints, normalized to [0, 1]:
// 1 - dist / max(|a|, |b|). Both empty -> 1.
double levenshtein_similarity(std::string_view a, std::string_view b);

// Casefolded word tokens as a set. Tokens are maximal runs of Unicode
// alphanumerics; an apostrophe between two letters does not split a token.
// Pure-punctuation runs never produce tokens.
std::set<std::string> word_token_set(std::string_view s);

// Whitespace-delimited token count (the unit of the summary length cap).
std::size_t word_count(std::string_view s);

std::vector<std::string> split_lines(std::string_view s);

// Case-insensitive ASCII search; npos when absent.
std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from = 0);

std::string trim(std::string_view s);

}  // namespace analogist::text
