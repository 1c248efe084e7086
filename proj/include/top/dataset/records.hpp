#pragma once

// Dataset rows and their JSON-lines form. Field order on output is fixed so
// write -> read -> write is byte-stable.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "top/error.hpp"

namespace top::dataset {

using ordered_json = nlohmann::ordered_json;

struct CommentRecord {
    std::string userid;
    std::string piecename;
    std::string comment;
    std::optional<std::string> preference;
    std::optional<std::string> lang;

    friend bool operator==(const CommentRecord&, const CommentRecord&) = default;
};

struct ParaphraseRecord {
    std::string piecename;
    std::string intro;
    std::string preference;
    std::string output;
    std::optional<std::string> lang;

    friend bool operator==(const ParaphraseRecord&, const ParaphraseRecord&) = default;
};

struct ImageRecord {
    std::string path;
    std::string userid;
    double aes_score = 0.0;
    std::optional<std::string> lang;

    friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

/// One problem found while loading or validating, tied to a 1-based line.
struct RecordIssue {
    std::size_t line = 0;
    std::string message;

    std::string to_string() const { return "line " + std::to_string(line) + ": " + message; }
};

namespace detail {

struct FieldSpec {
    const char* name;
    bool required;
    bool is_number;
};

inline void check_fields(const nlohmann::json& j, std::initializer_list<FieldSpec> fields,
                         std::vector<std::string>& problems) {
    if (!j.is_object()) {
        problems.push_back("expected a JSON object");
        return;
    }
    for (const auto& f : fields) {
        if (!j.contains(f.name)) {
            if (f.required) problems.push_back(std::string("missing field '") + f.name + "'");
            continue;
        }
        const auto& v = j.at(f.name);
        if (f.is_number ? !v.is_number() : !v.is_string())
            problems.push_back(std::string("field '") + f.name + "' must be a " + (f.is_number ? "number" : "string"));
    }
    for (const auto& [key, _] : j.items()) {
        const bool known = std::any_of(fields.begin(), fields.end(), [&](const FieldSpec& f) { return key == f.name; });
        if (!known) problems.push_back("unexpected field '" + key + "'");
    }
}

inline std::optional<std::string> opt_string(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) return std::nullopt;
    return j.at(key).get<std::string>();
}

} // namespace detail

template <typename T>
struct RecordCodec;

template <>
struct RecordCodec<CommentRecord> {
    static constexpr const char* schema = "comment";

    static CommentRecord from_json(const nlohmann::json& j, std::vector<std::string>& problems) {
        detail::check_fields(j, {{"userid", true, false},
                                 {"piecename", true, false},
                                 {"comment", true, false},
                                 {"preference", false, false},
                                 {"lang", false, false}},
                             problems);
        if (!problems.empty()) return {};
        return CommentRecord{j.at("userid"), j.at("piecename"), j.at("comment"), detail::opt_string(j, "preference"),
                             detail::opt_string(j, "lang")};
    }

    static ordered_json to_json(const CommentRecord& r) {
        ordered_json j;
        j["userid"] = r.userid;
        j["piecename"] = r.piecename;
        j["comment"] = r.comment;
        if (r.preference) j["preference"] = *r.preference;
        if (r.lang) j["lang"] = *r.lang;
        return j;
    }
};

template <>
struct RecordCodec<ParaphraseRecord> {
    static constexpr const char* schema = "paraphrase";

    static ParaphraseRecord from_json(const nlohmann::json& j, std::vector<std::string>& problems) {
        detail::check_fields(j, {{"piecename", true, false},
                                 {"intro", true, false},
                                 {"preference", true, false},
                                 {"output", true, false},
                                 {"lang", false, false}},
                             problems);
        if (!problems.empty()) return {};
        return ParaphraseRecord{j.at("piecename"), j.at("intro"), j.at("preference"), j.at("output"),
                                detail::opt_string(j, "lang")};
    }

    static ordered_json to_json(const ParaphraseRecord& r) {
        ordered_json j;
        j["piecename"] = r.piecename;
        j["intro"] = r.intro;
        j["preference"] = r.preference;
        j["output"] = r.output;
        if (r.lang) j["lang"] = *r.lang;
        return j;
    }
};

template <>
struct RecordCodec<ImageRecord> {
    static constexpr const char* schema = "image";

    static ImageRecord from_json(const nlohmann::json& j, std::vector<std::string>& problems) {
        detail::check_fields(j, {{"path", true, false},
                                 {"userid", true, false},
                                 {"aes_score", true, true},
                                 {"lang", false, false}},
                             problems);
        if (!problems.empty()) return {};
        return ImageRecord{j.at("path"), j.at("userid"), j.at("aes_score").get<double>(), detail::opt_string(j, "lang")};
    }

    static ordered_json to_json(const ImageRecord& r) {
        ordered_json j;
        j["path"] = r.path;
        j["userid"] = r.userid;
        j["aes_score"] = r.aes_score;
        if (r.lang) j["lang"] = *r.lang;
        return j;
    }
};

/// Records with the source line of each; `issues` lists every rejected line.
template <typename T>
struct LoadResult {
    std::vector<T> records;
    std::vector<std::size_t> lines;
    std::vector<RecordIssue> issues;

    bool ok() const noexcept { return issues.empty(); }
};

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open " + path.string());
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    return lines;
}

/// Parses JSON lines; blank lines are skipped. Large inputs are parsed in
/// parallel chunks, results stay in line order.
template <typename T>
LoadResult<T> parse_records(const std::vector<std::string>& lines) {
    struct Parsed {
        bool blank = true;
        T record{};
        std::vector<std::string> problems;
    };
    std::vector<Parsed> parsed(lines.size());
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto& line = lines[i];
            if (line.find_first_not_of(" \t") == std::string::npos) continue;
            parsed[i].blank = false;
            try {
                parsed[i].record = RecordCodec<T>::from_json(nlohmann::json::parse(line), parsed[i].problems);
            } catch (const nlohmann::json::exception& e) {
                parsed[i].problems.push_back(std::string("invalid JSON: ") + e.what());
            }
        }
    };
    const std::size_t workers =
        lines.size() < 4096 ? 1 : std::max<std::size_t>(1, std::min<std::size_t>(8, std::thread::hardware_concurrency()));
    if (workers == 1) {
        work(0, lines.size());
    } else {
        std::vector<std::thread> pool;
        for (std::size_t k = 0; k < workers; ++k)
            pool.emplace_back(work, lines.size() * k / workers, lines.size() * (k + 1) / workers);
        for (auto& t : pool) t.join();
    }
    LoadResult<T> out;
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        if (parsed[i].blank) continue;
        if (parsed[i].problems.empty()) {
            out.records.push_back(std::move(parsed[i].record));
            out.lines.push_back(i + 1);
        } else {
            for (auto& p : parsed[i].problems) out.issues.push_back({i + 1, std::move(p)});
        }
    }
    return out;
}

template <typename T>
LoadResult<T> load_records(const std::filesystem::path& path) {
    return parse_records<T>(read_lines(path));
}

inline std::string join_issues(const std::vector<RecordIssue>& issues) {
    std::string s;
    for (const auto& i : issues) s += (s.empty() ? "" : "\n") + i.to_string();
    return s;
}

/// load_records that throws ParseError (first bad line) listing every issue.
template <typename T>
std::vector<T> load_records_or_throw(const std::filesystem::path& path) {
    auto r = load_records<T>(path);
    if (!r.ok()) throw ParseError(r.issues.front().line, path.string() + ": " + join_issues(r.issues));
    return std::move(r.records);
}

template <typename T>
std::string to_jsonl_line(const T& r) {
    return RecordCodec<T>::to_json(r).dump();
}

template <typename T>
void write_records(std::ostream& out, const std::vector<T>& records) {
    for (const auto& r : records) out << to_jsonl_line(r) << '\n';
}

template <typename T>
void write_records(const std::filesystem::path& path, const std::vector<T>& records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    write_records(out, records);
    if (!out) throw InvalidArgument("failed writing " + path.string());
}

struct ValidationOptions {
    /// Paraphrase rows must carry an output (training format).
    bool require_output = false;
    /// Image paths are resolved against this directory.
    std::filesystem::path base_dir = ".";
};

namespace detail {

inline std::size_t line_of(const std::vector<std::size_t>& lines, std::size_t i) {
    return i < lines.size() ? lines[i] : i + 1;
}

inline void nonempty(const std::string& v, const char* field, std::size_t line, std::vector<RecordIssue>& out) {
    if (v.empty()) out.push_back({line, std::string("field '") + field + "' is empty"});
}

inline void check_record(const CommentRecord& r, std::size_t line, const ValidationOptions&,
                         std::vector<RecordIssue>& out) {
    nonempty(r.userid, "userid", line, out);
}

inline void check_record(const ParaphraseRecord& r, std::size_t line, const ValidationOptions& opt,
                         std::vector<RecordIssue>& out) {
    nonempty(r.piecename, "piecename", line, out);
    nonempty(r.intro, "intro", line, out);
    nonempty(r.preference, "preference", line, out);
    if (opt.require_output) nonempty(r.output, "output", line, out);
}

inline void check_record(const ImageRecord& r, std::size_t line, const ValidationOptions& opt,
                         std::vector<RecordIssue>& out) {
    nonempty(r.path, "path", line, out);
    nonempty(r.userid, "userid", line, out);
    if (!std::isfinite(r.aes_score)) out.push_back({line, "field 'aes_score' is not finite"});
    if (!r.path.empty()) {
        const std::filesystem::path p(r.path);
        const auto full = p.is_absolute() ? p : opt.base_dir / p;
        std::error_code ec;
        if (!std::filesystem::exists(full, ec)) out.push_back({line, "image path '" + r.path + "' does not exist"});
    }
}

} // namespace detail

/// Every semantic violation, in record order. `lines` maps records to source
/// lines; when empty, record i is reported as line i + 1.
template <typename T>
std::vector<RecordIssue> validate(const std::vector<T>& records, const std::vector<std::size_t>& lines = {},
                                  const ValidationOptions& opt = {}) {
    std::vector<RecordIssue> out;
    for (std::size_t i = 0; i < records.size(); ++i) detail::check_record(records[i], detail::line_of(lines, i), opt, out);
    return out;
}

/// Parse and semantic issues of a whole file, ordered by line.
template <typename T>
std::vector<RecordIssue> validate_file(const std::filesystem::path& path, const ValidationOptions& opt = {}) {
    auto r = load_records<T>(path);
    auto issues = r.issues;
    auto semantic = validate(r.records, r.lines, opt);
    issues.insert(issues.end(), semantic.begin(), semantic.end());
    std::stable_sort(issues.begin(), issues.end(), [](const RecordIssue& a, const RecordIssue& b) { return a.line < b.line; });
    return issues;
}

} // namespace top::dataset
