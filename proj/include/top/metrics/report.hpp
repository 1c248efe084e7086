#pragma once

// Metric registry and TopReport assembly. A metric filed under CPI compares
// the output with the content, under PPI with the preference, and under NRI
// scores the output alone.

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "top/core/types.hpp"
#include "top/error.hpp"
#include "top/metrics/embedding.hpp"
#include "top/metrics/rouge.hpp"
#include "top/metrics/ssim.hpp"
#include "top/metrics/style_metrics.hpp"
#include "top/style/conv_bank.hpp"
#include "top/style/transfer.hpp"
#include "top/text/likelihood.hpp"

namespace top::metrics {

enum class MetricIndex { cpi, ppi, nri };

inline std::string to_string(MetricIndex i) {
    switch (i) {
    case MetricIndex::cpi: return "cpi";
    case MetricIndex::ppi: return "ppi";
    default: return "nri";
    }
}

inline MetricIndex metric_index_from_string(const std::string& s) {
    if (s == "cpi") return MetricIndex::cpi;
    if (s == "ppi") return MetricIndex::ppi;
    if (s == "nri") return MetricIndex::nri;
    throw ConfigError("unknown metric index '" + s + "' (expected cpi, ppi or nri)");
}

/// Known metric names.
inline const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names = {"rouge_l_f",    "embedding_cosine", "perplexity", "ssim",
                                                   "content_loss", "style_loss",       "aes_score"};
    return names;
}

struct MetricSpec {
    std::string name;
    MetricIndex index = MetricIndex::cpi;

    friend bool operator==(const MetricSpec&, const MetricSpec&) = default;
};

using MetricRegistry = std::vector<MetricSpec>;

inline bool metric_applies(const std::string& name, MetricIndex index, Modality m) {
    const bool nri_only = name == "perplexity" || name == "aes_score";
    if (nri_only != (index == MetricIndex::nri)) return false;
    if (name == "rouge_l_f" || name == "perplexity") return m == Modality::text;
    if (name == "ssim" || name == "content_loss" || name == "style_loss" || name == "aes_score")
        return m == Modality::image;
    return name == "embedding_cosine";
}

inline void validate_registry(const MetricRegistry& r, Modality m) {
    if (r.empty()) throw ConfigError("metric registry is empty");
    std::set<std::string> seen;
    for (const auto& spec : r) {
        if (std::find(metric_names().begin(), metric_names().end(), spec.name) == metric_names().end())
            throw ConfigError("unknown metric '" + spec.name + "'");
        if (!seen.insert(spec.name).second) throw ConfigError("metric '" + spec.name + "' registered twice");
        if (!metric_applies(spec.name, spec.index, m))
            throw ModalityError("metric '" + spec.name + "' cannot be used as " + to_string(spec.index) + " on " +
                                std::string(top::to_string(m)) + " outputs");
    }
}

/// rouge_l_f -> CPI, embedding_cosine -> PPI, perplexity -> NRI.
inline MetricRegistry default_text_registry() {
    return {{"rouge_l_f", MetricIndex::cpi}, {"embedding_cosine", MetricIndex::ppi}, {"perplexity", MetricIndex::nri}};
}

/// ssim and content_loss -> CPI, style_loss -> PPI.
inline MetricRegistry default_image_registry() {
    return {{"ssim", MetricIndex::cpi}, {"content_loss", MetricIndex::cpi}, {"style_loss", MetricIndex::ppi}};
}

inline MetricRegistry default_registry(Modality m) {
    return m == Modality::text ? default_text_registry() : default_image_registry();
}

/// Per-sample data a metric may need beyond O, C and P.
struct EvalAux {
    std::optional<std::vector<double>> output_embedding;
    std::optional<std::vector<double>> content_embedding;
    /// Falls back to the preference itself when it is in embedding form.
    std::optional<std::vector<double>> preference_embedding;
    std::optional<text::TokenLogProbs> output_logprobs;
    std::optional<double> output_aesthetic;
};

/// Shared evaluation settings. The bank is only needed by the loss metrics.
struct EvalContext {
    std::shared_ptr<const style::ConvBank> bank;
    style::LossConfig loss;
    TokenizerOptions tokenizer;
    SsimParams ssim;
};

struct TopReport {
    std::map<std::string, double> cpi;
    std::map<std::string, double> ppi;
    std::map<std::string, double> nri;

    std::map<std::string, double>& section(MetricIndex i) {
        return i == MetricIndex::cpi ? cpi : i == MetricIndex::ppi ? ppi : nri;
    }
    const std::map<std::string, double>& section(MetricIndex i) const {
        return i == MetricIndex::cpi ? cpi : i == MetricIndex::ppi ? ppi : nri;
    }

    std::size_t size() const noexcept { return cpi.size() + ppi.size() + nri.size(); }

    nlohmann::json to_json() const { return nlohmann::json{{"cpi", cpi}, {"ppi", ppi}, {"nri", nri}}; }

    static TopReport from_json(const nlohmann::json& j) {
        TopReport r;
        r.cpi = j.at("cpi").get<std::map<std::string, double>>();
        r.ppi = j.at("ppi").get<std::map<std::string, double>>();
        r.nri = j.at("nri").get<std::map<std::string, double>>();
        return r;
    }

    friend bool operator==(const TopReport&, const TopReport&) = default;
};

namespace detail {

inline const std::vector<double>& need(const std::optional<std::vector<double>>& v, const char* what) {
    if (!v) throw MissingDataError(std::string("embedding_cosine needs the ") + what + " embedding");
    return *v;
}

inline const style::ConvBank& need_bank(const EvalContext& ctx, const std::string& metric) {
    if (!ctx.bank) throw MissingDataError(metric + " needs a convolution bank");
    return *ctx.bank;
}

inline double compute_metric(const MetricSpec& spec, const Content& o, const Content& c, const Preference& p,
                             const EvalAux& aux, const EvalContext& ctx) {
    const std::string& name = spec.name;
    if (name == "rouge_l_f") {
        const std::string& ref = spec.index == MetricIndex::cpi ? c.text() : p.as_text();
        return rouge_l(tokenize(o.text(), ctx.tokenizer), tokenize(ref, ctx.tokenizer)).f;
    }
    if (name == "embedding_cosine") {
        const auto& out = need(aux.output_embedding, "output");
        if (spec.index == MetricIndex::cpi) return embedding_cosine(out, need(aux.content_embedding, "content"));
        if (aux.preference_embedding) return embedding_cosine(out, *aux.preference_embedding);
        if (p.form() == PreferenceForm::embedding) return embedding_cosine(out, p.as_embedding());
        throw MissingDataError("embedding_cosine needs the preference embedding");
    }
    if (name == "perplexity") {
        if (!aux.output_logprobs) throw MissingDataError("perplexity needs output logprobs");
        return text::perplexity(*aux.output_logprobs);
    }
    if (name == "aes_score") {
        if (!aux.output_aesthetic) throw MissingDataError("aes_score needs a precomputed aesthetic score");
        return *aux.output_aesthetic;
    }
    if (name == "ssim") {
        if (spec.index != MetricIndex::cpi) throw MissingDataError("ssim needs a reference image; use it as cpi");
        return ssim(o.image(), c.image(), ctx.ssim);
    }
    const auto& bank = need_bank(ctx, name);
    const auto weights = ctx.loss.weights_for(bank.layer_count());
    if (name == "content_loss") {
        if (spec.index != MetricIndex::cpi) throw MissingDataError("content_loss is only defined against the content");
        return content_metric(o.image(), c.image(), bank, ctx.loss.content_layer);
    }
    // style_loss
    if (spec.index == MetricIndex::cpi) return style_metric(o.image(), c.image(), bank, weights);
    if (p.form() != PreferenceForm::style_target) throw MissingDataError("style_loss as ppi needs a style-target preference");
    return style_metric(o.image(), p.as_style_target().grams, bank, weights);
}

} // namespace detail

/// Scores one sample; throws MissingDataError when a metric's input is absent.
inline TopReport build_report(const Content& output, const Content& content, const Preference& preference,
                              const MetricRegistry& registry, const EvalAux& aux = {}, const EvalContext& ctx = {}) {
    if (output.modality() != content.modality()) throw ModalityError("output and content modalities differ");
    validate_registry(registry, output.modality());
    TopReport r;
    for (const auto& spec : registry) {
        const double v = detail::compute_metric(spec, output, content, preference, aux, ctx);
        if (!std::isfinite(v)) throw NonFiniteError("metric '" + spec.name + "' is not finite");
        r.section(spec.index)[spec.name] = v;
    }
    return r;
}

/// Per-metric arithmetic mean over a batch of reports with identical keys.
inline TopReport mean_report(const std::vector<TopReport>& reports) {
    if (reports.empty()) throw InvalidArgument("cannot average an empty batch of reports");
    TopReport out;
    for (auto idx : {MetricIndex::cpi, MetricIndex::ppi, MetricIndex::nri}) {
        for (const auto& [name, _] : reports.front().section(idx)) {
            double acc = 0.0;
            for (const auto& r : reports) {
                const auto& sec = r.section(idx);
                const auto it = sec.find(name);
                if (it == sec.end()) throw InvalidArgument("report batch disagrees on metric '" + name + "'");
                acc += it->second;
            }
            out.section(idx)[name] = acc / static_cast<double>(reports.size());
        }
        for (const auto& r : reports)
            if (r.section(idx).size() != reports.front().section(idx).size())
                throw InvalidArgument("report batch has differing metric sets");
    }
    return out;
}

} // namespace top::metrics
