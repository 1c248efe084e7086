#pragma once

// Prompt assembly for the text pipeline: H' = I^p + h_1 + ... + h_n and
// x' = I^c + P + x, where + is a separator join.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "top/core/types.hpp"
#include "top/error.hpp"

namespace top::text {

struct PromptTemplates {
    std::string preference_instruction = "Summarize the reading preferences of this user from their comments:";
    std::string paraphrase_instruction = "Rewrite the following introduction so it appeals to a reader with this preference:";
    std::string separator = "\n";

    void validate() const {
        if (preference_instruction.empty()) throw InvalidArgument("preference instruction must be non-empty");
        if (paraphrase_instruction.empty()) throw InvalidArgument("paraphrase instruction must be non-empty");
    }
};

/// Whole-file UTF-8 read, bytes kept as-is.
inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Reads an instruction template, dropping one trailing newline.
inline std::string load_template(const std::filesystem::path& path) {
    std::string s = read_text_file(path);
    if (!s.empty() && s.back() == '\n') s.pop_back();
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

inline std::string assemble_preference_prompt(const PromptTemplates& t, const UserHistory& h) {
    t.validate();
    if (h.items.empty()) throw InvalidArgument("cannot build a preference prompt from an empty history");
    if (h.modality() != Modality::text) throw ModalityError("preference prompt needs a text history");
    std::string out = t.preference_instruction;
    for (const auto& item : h.items) {
        out += t.separator;
        out += std::get<std::string>(item);
    }
    return out;
}

inline std::string assemble_paraphrase_prompt(const PromptTemplates& t, const Preference& p, const std::string& x) {
    t.validate();
    if (p.form() != PreferenceForm::text) throw ModalityError("paraphrase prompt needs a text preference");
    std::string out = t.paraphrase_instruction;
    out += t.separator;
    out += p.as_text();
    out += t.separator;
    out += x;
    return out;
}

} // namespace top::text
