#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "top/error.hpp"

namespace top::metrics {

struct EmbeddingRecord {
    std::string id;
    std::vector<double> vector;
};

inline double embedding_cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw InvalidArgument("embedding dimension mismatch: " + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()));
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!std::isfinite(a[i]) || !std::isfinite(b[i])) throw InvalidArgument("non-finite embedding entry");
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw InvalidArgument("cosine similarity of a zero vector");
    const double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::max(-1.0, std::min(1.0, c));
}

inline double embedding_cosine(const EmbeddingRecord& a, const EmbeddingRecord& b) {
    return embedding_cosine(a.vector, b.vector);
}

/// JSON-lines file of {"id": string, "vector": [numbers]}; blank lines skipped.
inline std::map<std::string, std::vector<double>> load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open embeddings file " + path.string());
    std::map<std::string, std::vector<double>> out;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        EmbeddingRecord rec;
        try {
            const auto j = nlohmann::json::parse(line);
            rec.id = j.at("id").get<std::string>();
            rec.vector = j.at("vector").get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(lineno, path.string() + ": " + e.what());
        }
        if (!out.emplace(rec.id, std::move(rec.vector)).second)
            throw ParseError(lineno, "duplicate embedding id '" + rec.id + "'");
    }
    return out;
}

} // namespace top::metrics
