#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "top/error.hpp"

namespace top::metrics {

/// Precomputed aesthetic quality number for one image.
struct AestheticScore {
    std::string id;
    double score = 0.0;
};

/// JSON-lines file of {"id": string, "score": number}.
inline std::map<std::string, AestheticScore> load_aesthetic_scores(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open aesthetic score file " + path.string());
    std::map<std::string, AestheticScore> out;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        AestheticScore s;
        try {
            const auto j = nlohmann::json::parse(line);
            s.id = j.at("id").get<std::string>();
            s.score = j.at("score").get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(lineno, path.string() + ": " + e.what());
        }
        if (!std::isfinite(s.score)) throw ParseError(lineno, "non-finite score for id '" + s.id + "'");
        const std::string id = s.id;
        if (!out.emplace(id, std::move(s)).second) throw ParseError(lineno, "duplicate aesthetic score id '" + id + "'");
    }
    return out;
}

} // namespace top::metrics
