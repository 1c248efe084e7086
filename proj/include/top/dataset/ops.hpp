#pragma once

// Dataset operations: preference attachment, aesthetic filtering,
// preference x content cross-matching, statistics, and in-place userid
// replacement for JSON-lines files.

#include <algorithm>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "top/dataset/anonymize.hpp"
#include "top/dataset/records.hpp"
#include "top/error.hpp"

namespace top::dataset {

inline std::vector<CommentRecord> append_preference(std::vector<CommentRecord> records,
                                                    const std::map<std::string, std::string>& prefs) {
    for (auto& r : records) {
        const auto it = prefs.find(r.userid);
        if (it == prefs.end()) throw InvalidArgument("no preference for userid '" + r.userid + "'");
        r.preference = it->second;
    }
    return records;
}

inline constexpr double kAestheticThreshold = 5.0;

/// Keeps rows whose score strictly exceeds the threshold, in order.
inline std::vector<ImageRecord> filter_by_aesthetic(const std::vector<ImageRecord>& records,
                                                    double threshold = kAestheticThreshold) {
    std::vector<ImageRecord> out;
    std::copy_if(records.begin(), records.end(), std::back_inserter(out),
                 [threshold](const ImageRecord& r) { return r.aes_score > threshold; });
    return out;
}

struct PieceIntro {
    std::string piecename;
    std::string intro;
};

/// |P| x |C| rows in preference-major order, outputs left empty.
inline std::vector<ParaphraseRecord> crossmatch(const std::vector<std::string>& preferences,
                                                const std::vector<PieceIntro>& contents) {
    if (preferences.empty()) throw InvalidArgument("crossmatch needs at least one preference");
    if (contents.empty()) throw InvalidArgument("crossmatch needs at least one content item");
    std::vector<ParaphraseRecord> out;
    out.reserve(preferences.size() * contents.size());
    for (const auto& p : preferences)
        for (const auto& c : contents) out.push_back(ParaphraseRecord{c.piecename, c.intro, p, "", std::nullopt});
    return out;
}

struct Manifest {
    std::vector<CommentRecord> comments;
    std::vector<ParaphraseRecord> paraphrases;
    std::vector<ImageRecord> images;
};

struct DatasetStats {
    std::size_t texts = 0;
    std::size_t images = 0;
    std::size_t unique_users = 0;
    /// Rows per "lang" tag; untagged rows are not counted here.
    std::map<std::string, std::size_t> by_lang;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["texts"] = texts;
        j["images"] = images;
        j["unique_users"] = unique_users;
        j["by_lang"] = by_lang;
        return j;
    }

    /// Two-column table, labels left-aligned and counts right-aligned.
    std::string to_table() const {
        std::vector<std::pair<std::string, std::string>> rows = {
            {"texts", std::to_string(texts)}, {"images", std::to_string(images)}, {"unique_users", std::to_string(unique_users)}};
        for (const auto& [k, v] : by_lang) rows.emplace_back("lang:" + k, std::to_string(v));
        std::size_t wl = 6, wv = 5;
        for (const auto& [k, v] : rows) {
            wl = std::max(wl, k.size());
            wv = std::max(wv, v.size());
        }
        std::ostringstream out;
        auto line = [&](const std::string& k, const std::string& v) {
            out << k << std::string(wl - k.size() + 2, ' ') << std::string(wv - v.size(), ' ') << v << '\n';
        };
        line("metric", "count");
        out << std::string(wl, '-') << "  " << std::string(wv, '-') << '\n';
        for (const auto& [k, v] : rows) line(k, v);
        return out.str();
    }

    friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

/// Comment and paraphrase rows count as texts; users are the distinct userids
/// of comment and image rows.
inline DatasetStats dataset_stats(const Manifest& m) {
    DatasetStats s;
    s.texts = m.comments.size() + m.paraphrases.size();
    s.images = m.images.size();
    std::set<std::string> users;
    auto tag = [&](const std::optional<std::string>& lang) {
        if (lang) ++s.by_lang[*lang];
    };
    for (const auto& r : m.comments) {
        users.insert(r.userid);
        tag(r.lang);
    }
    for (const auto& r : m.paraphrases) tag(r.lang);
    for (const auto& r : m.images) {
        users.insert(r.userid);
        tag(r.lang);
    }
    s.unique_users = users.size();
    return s;
}

namespace detail {

inline void skip_ws(std::string_view s, std::size_t& i) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r' || s[i] == '\n')) ++i;
}

/// Advances past a JSON string starting at s[i] == '"'.
inline void skip_string(std::string_view s, std::size_t& i) {
    ++i;
    while (i < s.size() && s[i] != '"') i += s[i] == '\\' ? 2 : 1;
    if (i >= s.size()) throw InvalidArgument("unterminated string");
    ++i;
}

/// Advances past any JSON value.
inline void skip_value(std::string_view s, std::size_t& i) {
    skip_ws(s, i);
    if (i >= s.size()) throw InvalidArgument("missing value");
    if (s[i] == '"') return skip_string(s, i);
    if (s[i] == '{' || s[i] == '[') {
        int depth = 0;
        while (i < s.size()) {
            const char c = s[i];
            if (c == '"') {
                skip_string(s, i);
                continue;
            }
            if (c == '{' || c == '[') ++depth;
            if (c == '}' || c == ']') {
                if (--depth == 0) {
                    ++i;
                    return;
                }
            }
            ++i;
        }
        throw InvalidArgument("unbalanced brackets");
    }
    while (i < s.size() && s[i] != ',' && s[i] != '}' && s[i] != ']' && s[i] != ' ' && s[i] != '\t') ++i;
}

} // namespace detail

/// Rewrites the top-level string value of `key` in a JSON object line,
/// leaving every other byte untouched.
inline std::string replace_top_level_string(std::string_view line, std::string_view key,
                                            const std::function<std::string(const std::string&)>& map) {
    // Parse first so malformed input is rejected with nlohmann's diagnostics.
    const auto doc = nlohmann::json::parse(line);
    if (!doc.is_object()) throw InvalidArgument("expected a JSON object");
    if (!doc.contains(key) || !doc.at(std::string(key)).is_string())
        throw InvalidArgument("missing string field '" + std::string(key) + "'");

    std::size_t i = 0;
    detail::skip_ws(line, i);
    ++i; // '{'
    while (true) {
        detail::skip_ws(line, i);
        if (line[i] == '}') break;
        const std::size_t key_start = i;
        detail::skip_string(line, i);
        const auto name = nlohmann::json::parse(line.substr(key_start, i - key_start)).get<std::string>();
        detail::skip_ws(line, i);
        ++i; // ':'
        detail::skip_ws(line, i);
        const std::size_t value_start = i;
        detail::skip_value(line, i);
        if (name == key) {
            const auto value = nlohmann::json::parse(line.substr(value_start, i - value_start)).get<std::string>();
            std::string out(line.substr(0, value_start));
            out += nlohmann::json(map(value)).dump();
            out += line.substr(i);
            return out;
        }
        detail::skip_ws(line, i);
        if (line[i] == ',') ++i;
    }
    throw InvalidArgument("field '" + std::string(key) + "' not found");
}

/// Replaces every line's userid with its token; blank lines pass through.
/// Throws ParseError naming the first bad line.
inline std::string anonymize_jsonl(const std::string& text, const AesKey& key) {
    std::string out;
    std::size_t line_no = 0, pos = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::size_t end = nl == std::string::npos ? text.size() : nl;
        std::string_view line(text.data() + pos, end - pos);
        ++line_no;
        std::string_view body = line;
        const bool cr = !body.empty() && body.back() == '\r';
        if (cr) body.remove_suffix(1);
        if (body.find_first_not_of(" \t") == std::string_view::npos) {
            out += line;
        } else {
            try {
                out += replace_top_level_string(body, "userid",
                                                [&](const std::string& u) { return anonymize_userid(key, u); });
            } catch (const std::exception& e) {
                throw ParseError(line_no, e.what());
            }
            if (cr) out += '\r';
        }
        if (nl != std::string::npos) out += '\n';
        pos = end + 1;
    }
    return out;
}

} // namespace top::dataset
