#pragma once

// Run configuration: one JSON document, unknown keys rejected at every level.
// Relative file paths are resolved against the config file's directory.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "top/error.hpp"
#include "top/metrics/report.hpp"
#include "top/style/transfer.hpp"
#include "top/style/types.hpp"
#include "top/text/chat_client.hpp"
#include "top/text/prompt.hpp"

namespace top {

struct RunConfig {
    std::uint64_t seed = 0;
    text::ChatEndpointConfig endpoint;
    text::PromptTemplates templates;
    style::LossConfig loss;
    style::ConvBankSpec bank = style::ConvBankSpec::standard(0);
    metrics::MetricRegistry text_metrics = metrics::default_text_registry();
    metrics::MetricRegistry image_metrics = metrics::default_image_registry();
    metrics::TokenizerOptions tokenizer;
    metrics::SsimParams ssim;

    /// Applies a run seed to the bank, the optimizer and the retry jitter.
    void set_seed(std::uint64_t s) {
        seed = s;
        bank.seed = s;
        loss.seed = s;
    }

    const metrics::MetricRegistry& registry(Modality m) const {
        return m == Modality::text ? text_metrics : image_metrics;
    }
};

namespace detail {

/// Object view that records which keys were read and rejects the rest.
class Section {
public:
    Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + "must be an object");
    }

    ~Section() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [k, _] : j_.items())
            if (!seen_.count(k)) throw ConfigError("unknown config key '" + prefix() + k + "'");
    }

    bool has(const std::string& k) {
        seen_.insert(k);
        return j_.contains(k);
    }

    template <typename T>
    void read(const std::string& k, T& out) {
        if (!has(k)) return;
        const auto& v = j_.at(k);
        if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
            // nlohmann converts -1 or 2.5 to an unsigned silently.
            const bool ok = v.is_number_integer() && (!std::is_unsigned_v<T> || v.is_number_unsigned() || v.get<std::int64_t>() >= 0);
            if (!ok)
                throw ConfigError("config key '" + prefix() + k + "' must be " +
                                  (std::is_unsigned_v<T> ? "a non-negative integer" : "an integer"));
        }
        try {
            out = v.get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("config key '" + prefix() + k + "' has the wrong type");
        }
    }

    Section sub(const std::string& k) {
        seen_.insert(k);
        return Section(j_.at(k), prefix() + k);
    }

    const nlohmann::json& raw(const std::string& k) {
        seen_.insert(k);
        return j_.at(k);
    }

    std::string prefix() const { return path_.empty() ? "" : path_ + "."; }

private:
    std::string where() const { return path_.empty() ? "config " : "config key '" + path_ + "' "; }

    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

inline std::filesystem::path existing_file(const std::filesystem::path& base, const std::string& p,
                                            const std::string& key) {
    const auto full = resolve(base, p);
    if (!std::filesystem::is_regular_file(full)) throw ConfigError(key + ": file not found: " + full.string());
    return full;
}

inline metrics::MetricRegistry read_registry(const nlohmann::json& j, const std::string& key) {
    if (!j.is_array()) throw ConfigError("config key '" + key + "' must be an array");
    metrics::MetricRegistry out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        Section s(j[i], key + "[" + std::to_string(i) + "]");
        metrics::MetricSpec spec;
        std::string index;
        s.read("name", spec.name);
        s.read("index", index);
        if (spec.name.empty()) throw ConfigError(key + "[" + std::to_string(i) + "]: metric name is required");
        spec.index = metrics::metric_index_from_string(index);
        out.push_back(spec);
    }
    return out;
}

} // namespace detail

/// Values in `j` override defaults; `base_dir` anchors relative file paths.
inline RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = ".") {
    RunConfig cfg;
    detail::Section root(j, "");
    if (root.has("seed")) {
        std::uint64_t seed = 0;
        root.read("seed", seed);
        cfg.set_seed(seed);
    }

    if (root.has("endpoint")) {
        auto s = root.sub("endpoint");
        auto& e = cfg.endpoint;
        s.read("base_url", e.base_url);
        s.read("model", e.model);
        s.read("api_key_env", e.api_key_env);
        s.read("timeout_s", e.timeout_s);
        s.read("max_retries", e.max_retries);
        s.read("temperature", e.temperature);
        s.read("backoff_initial_s", e.backoff_initial_s);
        s.read("max_in_flight", e.max_in_flight);
        s.read("request_logprobs", e.request_logprobs);
        s.read("mock_prefix", e.mock_prefix);
    }
    cfg.endpoint.validate();

    if (root.has("templates")) {
        auto s = root.sub("templates");
        auto& t = cfg.templates;
        std::string file;
        s.read("preference_instruction", t.preference_instruction);
        s.read("paraphrase_instruction", t.paraphrase_instruction);
        if (s.has("preference_instruction_file")) {
            s.read("preference_instruction_file", file);
            t.preference_instruction =
                text::load_template(detail::existing_file(base_dir, file, "templates.preference_instruction_file"));
        }
        if (s.has("paraphrase_instruction_file")) {
            s.read("paraphrase_instruction_file", file);
            t.paraphrase_instruction =
                text::load_template(detail::existing_file(base_dir, file, "templates.paraphrase_instruction_file"));
        }
        s.read("separator", t.separator);
    }
    try {
        cfg.templates.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("templates: ") + e.what());
    }

    if (root.has("bank")) {
        auto s = root.sub("bank");
        auto& b = cfg.bank;
        s.read("seed", b.seed);
        if (s.has("layers")) {
            const auto& layers = s.raw("layers");
            if (!layers.is_array() || layers.empty()) throw ConfigError("bank.layers must be a non-empty array");
            b.layers.clear();
            for (std::size_t i = 0; i < layers.size(); ++i) {
                detail::Section l(layers[i], "bank.layers[" + std::to_string(i) + "]");
                style::ConvLayerSpec spec;
                l.read("filters", spec.filters);
                l.read("kernel", spec.kernel);
                l.read("stride", spec.stride);
                l.read("pool", spec.pool);
                b.layers.push_back(spec);
            }
        }
        if (s.has("weights_file")) {
            std::string file;
            s.read("weights_file", file);
            b.weights_file = detail::existing_file(base_dir, file, "bank.weights_file");
        }
    }
    try {
        cfg.bank.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("bank: ") + e.what());
    }

    if (root.has("style")) {
        auto s = root.sub("style");
        auto& l = cfg.loss;
        s.read("alpha", l.alpha);
        s.read("beta", l.beta);
        s.read("delta", l.delta);
        s.read("gamma", l.gamma);
        s.read("layer_weights", l.layer_weights);
        s.read("content_layer", l.content_layer);
        s.read("bins", l.bins);
        s.read("max_iterations", l.max_iterations);
        s.read("tolerance", l.tolerance);
        s.read("initial_step", l.initial_step);
    }
    try {
        cfg.loss.validate(cfg.bank.layers.size());
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("style: ") + e.what());
    }

    if (root.has("metrics")) {
        auto s = root.sub("metrics");
        if (s.has("text")) cfg.text_metrics = detail::read_registry(s.raw("text"), "metrics.text");
        if (s.has("image")) cfg.image_metrics = detail::read_registry(s.raw("image"), "metrics.image");
        if (s.has("tokenizer")) {
            auto t = s.sub("tokenizer");
            t.read("lowercase", cfg.tokenizer.lowercase);
            t.read("strip_punctuation", cfg.tokenizer.strip_punctuation);
        }
        if (s.has("ssim")) {
            auto t = s.sub("ssim");
            t.read("window", cfg.ssim.window);
            t.read("sigma", cfg.ssim.sigma);
            t.read("dynamic_range", cfg.ssim.dynamic_range);
            t.read("k1", cfg.ssim.k1);
            t.read("k2", cfg.ssim.k2);
        }
    }
    try {
        metrics::validate_registry(cfg.text_metrics, Modality::text);
        metrics::validate_registry(cfg.image_metrics, Modality::image);
        cfg.ssim.taps();
    } catch (const Error& e) {
        throw ConfigError(std::string("metrics: ") + e.what());
    }
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

} // namespace top
