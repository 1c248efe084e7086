#pragma once

// Next-token negative log-likelihood and perplexity over externally supplied
// per-token log-probabilities.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "top/error.hpp"

namespace top::text {

struct TokenLogProbs {
    std::vector<std::string> tokens;
    std::vector<double> logprobs;

    void validate() const {
        if (tokens.size() != logprobs.size())
            throw InvalidArgument("token and logprob counts differ: " + std::to_string(tokens.size()) + " vs " +
                                  std::to_string(logprobs.size()));
        for (std::size_t i = 0; i < logprobs.size(); ++i) {
            if (!std::isfinite(logprobs[i]) || logprobs[i] > 0.0)
                throw InvalidArgument("logprob " + std::to_string(i) + " must be finite and <= 0");
        }
    }
};

/// Accepts {"tokens": [...], "logprobs": [...]} or {"logprobs": [...]}
/// (tokens left as empty strings), or an OpenAI-style
/// {"content": [{"token", "logprob"}, ...]} block.
inline TokenLogProbs logprobs_from_json(const nlohmann::json& j) {
    TokenLogProbs lp;
    if (j.contains("content") && j.at("content").is_array()) {
        for (const auto& e : j.at("content")) {
            lp.tokens.push_back(e.value("token", std::string{}));
            lp.logprobs.push_back(e.at("logprob").get<double>());
        }
    } else {
        lp.logprobs = j.at("logprobs").get<std::vector<double>>();
        if (j.contains("tokens"))
            lp.tokens = j.at("tokens").get<std::vector<std::string>>();
        else
            lp.tokens.assign(lp.logprobs.size(), std::string{});
    }
    lp.validate();
    return lp;
}

inline TokenLogProbs load_logprobs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open logprobs file " + path.string());
    try {
        return logprobs_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("malformed logprobs file " + path.string() + ": " + e.what());
    }
}

/// -sum log p(y_i | y_<i); always >= 0.
inline double next_token_nll(const TokenLogProbs& lp) {
    lp.validate();
    if (lp.logprobs.empty()) throw InvalidArgument("next_token_nll needs at least one token");
    double acc = 0.0;
    for (double v : lp.logprobs) acc -= v;
    return acc;
}

inline double perplexity(const TokenLogProbs& lp) {
    const double nll = next_token_nll(lp);
    return std::exp(nll / static_cast<double>(lp.logprobs.size()));
}

} // namespace top::text
