#pragma once

// Gram-matrix style transfer: weighted content + style + histogram objective,
// its reverse-mode gradient through the convolution bank, and a projected
// gradient descent with backtracking line search.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "top/error.hpp"
#include "top/image.hpp"
#include "top/style/conv_bank.hpp"
#include "top/style/histogram.hpp"
#include "top/style/losses.hpp"

namespace top::style {

struct LossConfig {
    double alpha = 1.0;  // content weight
    double beta = 1e-2;  // style weight
    double delta = 1.0;  // histogram-term weight; 0 gives the plain content + style objective
    double gamma = 10.0; // RBF bandwidth
    /// Per-layer style weights; empty means uniform over the bank's layers.
    std::vector<double> layer_weights;
    std::size_t content_layer = 1;
    std::size_t bins = 32;
    std::size_t max_iterations = 300;
    double tolerance = 1e-5;
    double initial_step = 1.0; // largest per-pixel change of the first trial step
    std::uint64_t seed = 0;

    std::vector<double> weights_for(std::size_t layers) const {
        if (layer_weights.empty()) return std::vector<double>(layers, 1.0 / static_cast<double>(layers));
        return layer_weights;
    }

    void validate(std::size_t layers) const {
        auto nonneg = [](double v, const char* name) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(name) + " must be finite and >= 0");
        };
        nonneg(alpha, "alpha");
        nonneg(beta, "beta");
        nonneg(delta, "delta");
        nonneg(gamma, "gamma");
        if (!(tolerance > 0.0)) throw InvalidArgument("tolerance must be > 0");
        if (!(initial_step > 0.0)) throw InvalidArgument("initial_step must be > 0");
        if (bins < 2) throw InvalidArgument("bins must be >= 2");
        if (content_layer >= layers)
            throw InvalidArgument("content_layer " + std::to_string(content_layer) + " out of range for " +
                                  std::to_string(layers) + " layers");
        if (!layer_weights.empty()) {
            if (layer_weights.size() != layers)
                throw InvalidArgument("layer_weights has " + std::to_string(layer_weights.size()) +
                                      " entries, bank has " + std::to_string(layers) + " layers");
            double sum = 0.0;
            for (double w : layer_weights) {
                nonneg(w, "layer weight");
                sum += w;
            }
            if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("layer_weights must sum to 1");
        }
    }
};

/// Style preference: per-layer gram targets plus hard and soft colour histograms.
struct StyleTarget {
    std::vector<GramMatrix> grams;
    HistogramFeature hist;
    HistogramFeature soft_hist;
};

/// Element-wise mean of the history images' gram matrices and histograms.
inline StyleTarget aggregate_style_target(const std::vector<ImageTensor>& history, const ConvBank& bank,
                                          std::size_t bins) {
    if (history.empty()) throw InvalidArgument("style history must contain at least one image");
    StyleTarget target;
    std::vector<HistogramFeature> hard;
    std::vector<HistogramFeature> soft;
    for (const auto& img : history) {
        const auto feats = extract_features(img, bank);
        if (target.grams.empty()) {
            for (const auto& f : feats) target.grams.push_back(GramMatrix{f.layer, f.maps, std::vector<double>(f.maps * f.maps, 0.0)});
        }
        for (std::size_t l = 0; l < feats.size(); ++l) {
            const GramMatrix g = gram(feats[l]);
            for (std::size_t i = 0; i < g.entries.size(); ++i) target.grams[l].entries[i] += g.entries[i];
        }
        hard.push_back(histogram(img, bins));
        soft.push_back(soft_histogram(img, bins));
    }
    const auto count = static_cast<double>(history.size());
    for (auto& g : target.grams)
        for (double& v : g.entries) v /= count;
    target.hist = mean_histogram(hard);
    target.soft_hist = mean_histogram(soft);
    return target;
}

struct LossBreakdown {
    double content = 0.0;   // L_content at the content layer
    double style = 0.0;     // sum_l w_l L_style^l
    double histogram = 0.0; // 1 - hist_similarity
    double total = 0.0;     // alpha * content + beta * style + delta * histogram
    std::vector<double> style_layers;
};

namespace detail {

enum class HistMode { hard, soft };

inline LossBreakdown objective(const ImageTensor& img, const ConvBank& bank, const FeatureMap& content_feats,
                               const StyleTarget& style, const LossConfig& cfg, HistMode mode,
                               std::vector<double>* grad) {
    const std::size_t layers = bank.layer_count();
    if (style.grams.size() != layers) throw InvalidArgument("style target layer count does not match the bank");
    const auto weights = cfg.weights_for(layers);
    const ForwardTrace trace = bank.forward(img);

    LossBreakdown out;
    out.content = content_loss(trace.features[cfg.content_layer], content_feats);
    out.style_layers.resize(layers);
    std::vector<GramMatrix> grams;
    grams.reserve(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        const FeatureMap& f = trace.features[l];
        grams.push_back(gram(f));
        out.style_layers[l] = style_loss_layer(grams[l], style.grams[l], f.maps, f.elements());
    }
    out.style = style_loss_total(out.style_layers, weights);

    const HistogramFeature& target_hist = mode == HistMode::hard ? style.hist : style.soft_hist;
    const HistogramFeature cur = mode == HistMode::hard ? histogram(img, cfg.bins) : soft_histogram(img, cfg.bins);
    const double dist = hist_distance(cur, target_hist);
    const double sim = std::exp(-cfg.gamma * dist);
    out.histogram = 1.0 - sim;
    out.total = cfg.alpha * out.content + cfg.beta * out.style + cfg.delta * out.histogram;

    if (grad == nullptr) return out;

    std::vector<std::vector<double>> feature_grads(layers);
    bool any_feature_grad = false;
    if (cfg.alpha != 0.0) {
        const FeatureMap& f = trace.features[cfg.content_layer];
        auto& g = feature_grads[cfg.content_layer];
        g.resize(f.values.size());
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = cfg.alpha * (f.values[i] - content_feats.values[i]);
        any_feature_grad = true;
    }
    if (cfg.beta != 0.0) {
        for (std::size_t l = 0; l < layers; ++l) {
            if (weights[l] == 0.0) continue;
            const FeatureMap& f = trace.features[l];
            const std::size_t n = f.maps;
            const std::size_t m = f.elements();
            const double nn = static_cast<double>(n);
            const double mm = static_cast<double>(m);
            // d/dF of (1/4N^2M^2) ||F F^T - A||^2 = (G - A) F / (N^2 M^2)
            const double scale = cfg.beta * weights[l] / (nn * nn * mm * mm);
            auto& g = feature_grads[l];
            if (g.empty()) g.assign(f.values.size(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    const double d = scale * (grams[l].entries[i * n + j] - style.grams[l].entries[i * n + j]);
                    if (d == 0.0) continue;
                    const double* fj = &f.values[j * m];
                    double* gi = &g[i * m];
                    for (std::size_t k = 0; k < m; ++k) gi[k] += d * fj[k];
                }
            }
            any_feature_grad = true;
        }
    }
    if (any_feature_grad) {
        *grad = bank.backward(trace, feature_grads);
    } else {
        grad->assign(img.size(), 0.0);
    }

    if (cfg.delta != 0.0 && dist > 0.0) {
        if (mode != HistMode::soft) throw InvalidArgument("hard histograms have no useful gradient");
        std::vector<double> dh(cur.values.size());
        const double coeff = cfg.delta * cfg.gamma * sim / dist;
        for (std::size_t i = 0; i < dh.size(); ++i) dh[i] = coeff * (cur.values[i] - target_hist.values[i]);
        const auto gh = soft_histogram_backward(img, cfg.bins, dh);
        for (std::size_t i = 0; i < gh.size(); ++i) (*grad)[i] += gh[i];
    }
    return out;
}

} // namespace detail

/// Reported objective: hard-binned histogram term.
inline LossBreakdown total_loss(const ImageTensor& img, const ConvBank& bank, const FeatureMap& content_feats,
                                const StyleTarget& style, const LossConfig& cfg) {
    cfg.validate(bank.layer_count());
    return detail::objective(img, bank, content_feats, style, cfg, detail::HistMode::hard, nullptr);
}

/// Optimized objective: identical except the histogram term uses soft binning.
inline LossBreakdown surrogate_loss(const ImageTensor& img, const ConvBank& bank, const FeatureMap& content_feats,
                                    const StyleTarget& style, const LossConfig& cfg) {
    cfg.validate(bank.layer_count());
    return detail::objective(img, bank, content_feats, style, cfg, detail::HistMode::soft, nullptr);
}

/// Gradient of surrogate_loss w.r.t. every pixel, in ImageTensor layout.
inline std::vector<double> grad_total_loss(const ImageTensor& img, const ConvBank& bank,
                                           const FeatureMap& content_feats, const StyleTarget& style,
                                           const LossConfig& cfg) {
    cfg.validate(bank.layer_count());
    std::vector<double> grad;
    detail::objective(img, bank, content_feats, style, cfg, detail::HistMode::soft, &grad);
    return grad;
}

struct TransferResult {
    ImageTensor image;
    /// Surrogate objective at the start and after every accepted step.
    std::vector<double> losses;
    /// Reported (hard-histogram) breakdown of the returned image.
    LossBreakdown breakdown;
    std::size_t iterations = 0;
};

inline constexpr double kArmijo = 1e-4;

inline TransferResult transfer(const ImageTensor& content, const StyleTarget& style, const ConvBank& bank,
                               const LossConfig& cfg) {
    cfg.validate(bank.layer_count());
    const FeatureMap content_feats = extract_features(content, bank)[cfg.content_layer];

    auto check = [](double v) {
        if (!std::isfinite(v)) throw NonFiniteError("style transfer objective became non-finite; check loss weights");
        return v;
    };

    TransferResult result;
    ImageTensor x = content;
    std::vector<double> grad;
    double loss = check(detail::objective(x, bank, content_feats, style, cfg, detail::HistMode::soft, &grad).total);
    result.losses.push_back(loss);
    double step = cfg.initial_step;

    for (std::size_t it = 0; it < cfg.max_iterations && loss > 0.0; ++it) {
        double gmax = 0.0;
        for (double g : grad) gmax = std::max(gmax, std::abs(g));
        if (gmax == 0.0) break;

        bool accepted = false;
        ImageTensor trial = x;
        std::vector<double> trial_grad;
        double trial_loss = loss;
        // Trial steps are sized by the largest per-pixel change they cause.
        double move = std::min(cfg.initial_step, 2.0 * step);
        for (int halvings = 0; halvings < 60; ++halvings, move *= 0.5) {
            const double t = move / gmax;
            auto xs = x.data();
            auto ts = trial.data();
            double directional = 0.0;
            for (std::size_t i = 0; i < ts.size(); ++i) {
                ts[i] = std::clamp(xs[i] - t * grad[i], 0.0, 1.0);
                directional += grad[i] * (ts[i] - xs[i]);
            }
            if (directional == 0.0) break; // every coordinate pinned at a bound
            trial_loss =
                check(detail::objective(trial, bank, content_feats, style, cfg, detail::HistMode::soft, &trial_grad).total);
            if (trial_loss <= loss + kArmijo * directional && trial_loss <= loss) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;

        const double improvement = (loss - trial_loss) / loss;
        x = std::move(trial);
        grad = std::move(trial_grad);
        loss = trial_loss;
        step = move;
        result.losses.push_back(loss);
        result.iterations = it + 1;
        if (improvement < cfg.tolerance) break;
    }

    result.breakdown = detail::objective(x, bank, content_feats, style, cfg, detail::HistMode::hard, nullptr);
    result.image = std::move(x);
    return result;
}

/// End-to-end transfer from raw history images.
inline TransferResult transfer(const ImageTensor& content, const std::vector<ImageTensor>& history,
                               const ConvBank& bank, const LossConfig& cfg) {
    cfg.validate(bank.layer_count());
    return transfer(content, aggregate_style_target(history, bank, cfg.bins), bank, cfg);
}

} // namespace top::style
