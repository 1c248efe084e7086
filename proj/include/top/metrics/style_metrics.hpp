#pragma once

// Style and content losses reused as image metrics.

#include <span>
#include <vector>

#include "top/image.hpp"
#include "top/style/conv_bank.hpp"
#include "top/style/losses.hpp"
#include "top/style/transfer.hpp"

namespace top::metrics {

/// sum_l w_l L_style^l between the output's grams and per-layer target grams.
inline double style_metric(const ImageTensor& o, const std::vector<style::GramMatrix>& target,
                           const style::ConvBank& bank, std::span<const double> weights) {
    const auto feats = style::extract_features(o, bank);
    if (target.size() != feats.size()) throw InvalidArgument("style target layer count does not match the bank");
    std::vector<double> losses(feats.size());
    for (std::size_t l = 0; l < feats.size(); ++l)
        losses[l] = style::style_loss_layer(style::gram(feats[l]), target[l], feats[l].maps, feats[l].elements());
    return style::style_loss_total(losses, weights);
}

inline double style_metric(const ImageTensor& o, const ImageTensor& ref, const style::ConvBank& bank,
                           std::span<const double> weights) {
    std::vector<style::GramMatrix> target;
    for (const auto& f : style::extract_features(ref, bank)) target.push_back(style::gram(f));
    return style_metric(o, target, bank, weights);
}

inline double content_metric(const ImageTensor& o, const ImageTensor& ref, const style::ConvBank& bank,
                             std::size_t content_layer) {
    if (content_layer >= bank.layer_count()) throw InvalidArgument("content layer out of range");
    const auto fo = style::extract_features(o, bank);
    const auto fr = style::extract_features(ref, bank);
    return style::content_loss(fo[content_layer], fr[content_layer]);
}

} // namespace top::metrics
