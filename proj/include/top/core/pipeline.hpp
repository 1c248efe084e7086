#pragma once

// Four-stage paraphrase pipeline: P = P_enc(P_ext(H)), O = C_gen(C_enc(C) | P).
// Stages are looked up by (role, modality) in a StageRegistry.

#include <exception>
#include <functional>
#include <map>
#include <string>
#include <utility>

#include "top/core/types.hpp"
#include "top/error.hpp"
#include "top/metrics/report.hpp"

namespace top {

enum class StageRole { extractor, preference_encoder, content_encoder, generator };

inline std::string to_string(StageRole r) {
    switch (r) {
    case StageRole::extractor: return "extractor";
    case StageRole::preference_encoder: return "preference_encoder";
    case StageRole::content_encoder: return "content_encoder";
    default: return "generator";
    }
}

using ExtractorFn = std::function<Preference(const UserHistory&)>;
using PreferenceEncoderFn = std::function<Preference(const Preference&)>;
using ContentEncoderFn = std::function<ContentInput(const ContentInput&)>;
using GeneratorFn = std::function<ParaphraseOutput(const ContentInput&, const Preference&)>;

template <typename Fn>
struct Stage {
    std::string name;
    Fn fn;
    /// Whether separate pipeline runs may call this stage concurrently.
    bool concurrent_safe = true;
};

class StageRegistry {
public:
    void set_extractor(Modality m, Stage<ExtractorFn> s) { extractors_[m] = std::move(s); }
    void set_preference_encoder(Modality m, Stage<PreferenceEncoderFn> s) { pref_encoders_[m] = std::move(s); }
    void set_content_encoder(Modality m, Stage<ContentEncoderFn> s) { content_encoders_[m] = std::move(s); }
    void set_generator(Modality m, Stage<GeneratorFn> s) { generators_[m] = std::move(s); }

    const Stage<ExtractorFn>& extractor(Modality m) const { return find(extractors_, m, StageRole::extractor); }
    const Stage<PreferenceEncoderFn>& preference_encoder(Modality m) const {
        return find(pref_encoders_, m, StageRole::preference_encoder);
    }
    const Stage<ContentEncoderFn>& content_encoder(Modality m) const {
        return find(content_encoders_, m, StageRole::content_encoder);
    }
    const Stage<GeneratorFn>& generator(Modality m) const { return find(generators_, m, StageRole::generator); }

    bool covers(Modality m) const {
        return extractors_.count(m) && pref_encoders_.count(m) && content_encoders_.count(m) && generators_.count(m);
    }

    bool concurrent_safe(Modality m) const {
        return extractor(m).concurrent_safe && preference_encoder(m).concurrent_safe &&
               content_encoder(m).concurrent_safe && generator(m).concurrent_safe;
    }

private:
    template <typename S>
    static const S& find(const std::map<Modality, S>& table, Modality m, StageRole role) {
        const auto it = table.find(m);
        if (it == table.end() || !it->second.fn)
            throw ModalityError("no " + to_string(role) + " stage registered for " + std::string(to_string(m)) +
                                " content");
        return it->second;
    }

    std::map<Modality, Stage<ExtractorFn>> extractors_;
    std::map<Modality, Stage<PreferenceEncoderFn>> pref_encoders_;
    std::map<Modality, Stage<ContentEncoderFn>> content_encoders_;
    std::map<Modality, Stage<GeneratorFn>> generators_;
};

/// Identity stages: empty text preference, unchanged content.
inline void register_identity_stages(StageRegistry& r, Modality m) {
    r.set_extractor(m, {"identity-extractor", [](const UserHistory&) { return Preference::text(""); }});
    r.set_preference_encoder(m, {"identity-pref-encoder", [](const Preference& p) { return p; }});
    r.set_content_encoder(m, {"identity-content-encoder", [](const ContentInput& c) { return c; }});
    r.set_generator(m, {"identity-generator", [](const ContentInput& c, const Preference&) {
                            return c.is_text() ? ParaphraseOutput(c.text()) : ParaphraseOutput(c.image());
                        }});
}

struct PipelineResult {
    ParaphraseOutput output;
    Preference preference;
};

namespace detail {

/// Runs one stage; failures come out as StageError nested around the original exception.
template <typename S, typename... Args>
auto run_stage(const S& stage, StageRole role, Args&&... args) {
    try {
        return stage.fn(std::forward<Args>(args)...);
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        std::throw_with_nested(StageError(to_string(role) + ":" + stage.name, e.what()));
    }
}

} // namespace detail

inline PipelineResult run_pipeline(const UserHistory& history, const ContentInput& content,
                                   const StageRegistry& stages) {
    const Modality m = content.modality();
    if (history.modality() != m)
        throw ModalityError("history is " + std::string(to_string(history.modality())) + " but content is " +
                            std::string(to_string(m)));
    const auto& ext = stages.extractor(m);
    const auto& penc = stages.preference_encoder(m);
    const auto& cenc = stages.content_encoder(m);
    const auto& gen = stages.generator(m);

    const Preference raw = detail::run_stage(ext, StageRole::extractor, history);
    Preference pref = detail::run_stage(penc, StageRole::preference_encoder, raw);
    const ContentInput encoded = detail::run_stage(cenc, StageRole::content_encoder, content);
    ParaphraseOutput out = detail::run_stage(gen, StageRole::generator, encoded, pref);
    if (out.modality() != m)
        throw ModalityError("stage 'generator:" + gen.name + "' returned " + std::string(to_string(out.modality())) +
                            " output for " + std::string(to_string(m)) + " content");
    return PipelineResult{std::move(out), std::move(pref)};
}

/// CPI / PPI / NRI scores of one output; a pure function of its arguments.
inline metrics::TopReport evaluate(const ParaphraseOutput& output, const ContentInput& content,
                                   const Preference& preference, const metrics::MetricRegistry& registry,
                                   const metrics::EvalAux& aux = {}, const metrics::EvalContext& ctx = {}) {
    return metrics::build_report(output, content, preference, registry, aux, ctx);
}

} // namespace top
