#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "top/error.hpp"

namespace top::metrics {

using Tokens = std::vector<std::string>;

struct TokenizerOptions {
    bool lowercase = true;
    bool strip_punctuation = true;
};

/// ASCII lowercasing and punctuation removal, then whitespace splitting.
/// Non-ASCII bytes pass through untouched.
inline Tokens tokenize(std::string_view text, const TokenizerOptions& opts = {}) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (char ch : text) {
        const auto u = static_cast<unsigned char>(ch);
        if (u < 0x80) {
            if (opts.strip_punctuation && std::ispunct(u)) continue;
            cleaned.push_back(opts.lowercase ? static_cast<char>(std::tolower(u)) : ch);
        } else {
            cleaned.push_back(ch);
        }
    }
    Tokens out;
    std::istringstream in(cleaned);
    for (std::string tok; in >> tok;) out.push_back(std::move(tok));
    return out;
}

/// Longest common subsequence length, O(|a| |b|) time and O(min) memory.
inline std::size_t lcs_length(const Tokens& a, const Tokens& b) {
    const Tokens& outer = a.size() >= b.size() ? a : b;
    const Tokens& inner = a.size() >= b.size() ? b : a;
    std::vector<std::size_t> prev(inner.size() + 1, 0), cur(inner.size() + 1, 0);
    for (std::size_t i = 1; i <= outer.size(); ++i) {
        for (std::size_t j = 1; j <= inner.size(); ++j) {
            cur[j] = outer[i - 1] == inner[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[inner.size()];
}

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f = 0.0;
};

/// Rouge-L with beta = 1: P = LCS/|candidate|, R = LCS/|reference|, F = 2PR/(P+R).
inline RougeScore rouge_l(const Tokens& candidate, const Tokens& reference) {
    if (candidate.empty() || reference.empty()) throw InvalidArgument("rouge_l needs non-empty token sequences");
    const auto lcs = static_cast<double>(lcs_length(candidate, reference));
    RougeScore s;
    s.precision = lcs / static_cast<double>(candidate.size());
    s.recall = lcs / static_cast<double>(reference.size());
    // 2PR/(P+R) reduces to 2 LCS/(|c|+|r|); one rounding keeps F within [min(P,R), max(P,R)].
    s.f = 2.0 * lcs / static_cast<double>(candidate.size() + reference.size());
    return s;
}

} // namespace top::metrics
