#pragma once

// Shared framework types: user history H, content input C, preference P and
// paraphrased output O.

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "top/error.hpp"
#include "top/image.hpp"
#include "top/style/transfer.hpp"

namespace top {

enum class Modality { text, image };

inline std::string_view to_string(Modality m) { return m == Modality::text ? "text" : "image"; }

/// A history image: a file reference, optionally with its pixels already decoded.
struct ImageRef {
    std::filesystem::path path;
    std::optional<ImageTensor> pixels;
};

using HistoryItem = std::variant<std::string, ImageRef>;

struct UserHistory {
    std::vector<HistoryItem> items;

    /// Modality shared by all items; throws if empty or mixed.
    Modality modality() const {
        if (items.empty()) throw InvalidArgument("user history is empty");
        const bool text = std::holds_alternative<std::string>(items.front());
        for (const auto& item : items) {
            if (std::holds_alternative<std::string>(item) != text)
                throw ModalityError("user history mixes text and image items");
        }
        return text ? Modality::text : Modality::image;
    }

    std::vector<std::string> texts() const {
        if (modality() != Modality::text) throw ModalityError("expected a text history");
        std::vector<std::string> out;
        for (const auto& item : items) out.push_back(std::get<std::string>(item));
        return out;
    }
};

/// Text or image payload carried by ContentInput and ParaphraseOutput.
class Content {
public:
    Content() : payload_(std::string{}) {}
    explicit Content(std::string text) : payload_(std::move(text)) {}
    explicit Content(ImageTensor image) : payload_(std::move(image)) {}

    Modality modality() const noexcept {
        return std::holds_alternative<std::string>(payload_) ? Modality::text : Modality::image;
    }
    bool is_text() const noexcept { return modality() == Modality::text; }

    const std::string& text() const {
        if (!is_text()) throw ModalityError("expected text content, found an image");
        return std::get<std::string>(payload_);
    }
    const ImageTensor& image() const {
        if (is_text()) throw ModalityError("expected image content, found text");
        return std::get<ImageTensor>(payload_);
    }

    friend bool operator==(const Content&, const Content&) = default;

private:
    std::variant<std::string, ImageTensor> payload_;
};

struct ContentInput : Content {
    using Content::Content;
};

struct ParaphraseOutput : Content {
    using Content::Content;
};

enum class PreferenceForm { text, embedding, style_target };

/// Extracted user preference: natural language, an embedding, or gram/histogram style targets.
class Preference {
public:
    Preference() = default;

    static Preference text(std::string s) { return Preference(Payload(std::move(s))); }

    static Preference embedding(std::vector<double> v) {
        for (double x : v)
            if (!std::isfinite(x)) throw InvalidArgument("preference embedding must be finite");
        return Preference(Payload(std::move(v)));
    }

    static Preference style_target(style::StyleTarget t) {
        for (const auto& g : t.grams)
            for (std::size_t i = 0; i < g.n; ++i)
                for (std::size_t j = i + 1; j < g.n; ++j)
                    if (g.at(i, j) != g.at(j, i)) throw InvalidArgument("style target gram matrix is not symmetric");
        return Preference(Payload(std::move(t)));
    }

    PreferenceForm form() const noexcept { return static_cast<PreferenceForm>(payload_.index()); }

    const std::string& as_text() const {
        if (form() != PreferenceForm::text) throw ModalityError("preference is not in text form");
        return std::get<std::string>(payload_);
    }
    const std::vector<double>& as_embedding() const {
        if (form() != PreferenceForm::embedding) throw ModalityError("preference is not an embedding");
        return std::get<std::vector<double>>(payload_);
    }
    const style::StyleTarget& as_style_target() const {
        if (form() != PreferenceForm::style_target) throw ModalityError("preference is not a style target");
        return std::get<style::StyleTarget>(payload_);
    }

private:
    using Payload = std::variant<std::string, std::vector<double>, style::StyleTarget>;

    explicit Preference(Payload v) : payload_(std::move(v)) {}

    Payload payload_;
};

} // namespace top
