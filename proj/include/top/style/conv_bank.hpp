#pragma once

// Fixed, seeded convolution bank used as the feature extractor for the
// gram-matrix style losses. Zero-bias "same" convolutions, rectifier, and
// optional 2x2 average pooling after a layer's activation.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "top/error.hpp"
#include "top/image.hpp"
#include "top/rng.hpp"
#include "top/style/types.hpp"
#include "top/style/weights_io.hpp"

namespace top::style {

namespace detail {

/// Planar C x H x W activation buffer.
struct Planes {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> v;

    Planes() = default;
    Planes(std::size_t c, std::size_t h, std::size_t w) : channels(c), height(h), width(w), v(c * h * w, 0.0) {}

    double& operator()(std::size_t c, std::size_t y, std::size_t x) { return v[(c * height + y) * width + x]; }
    double operator()(std::size_t c, std::size_t y, std::size_t x) const {
        return v[(c * height + y) * width + x];
    }
};

inline Planes to_planes(const ImageTensor& img) {
    Planes p(ImageTensor::kChannels, img.height(), img.width());
    for (std::size_t y = 0; y < img.height(); ++y)
        for (std::size_t x = 0; x < img.width(); ++x)
            for (std::size_t c = 0; c < ImageTensor::kChannels; ++c) p(c, y, x) = img.at(y, x, c);
    return p;
}

inline std::size_t conv_out(std::size_t n, std::size_t stride) { return (n - 1) / stride + 1; }

inline Planes conv_forward(const Planes& in, const ConvLayerWeights& w) {
    const std::size_t k = w.spec.kernel;
    const std::size_t s = w.spec.stride;
    const auto pad = static_cast<std::ptrdiff_t>(k / 2);
    Planes out(w.spec.filters, conv_out(in.height, s), conv_out(in.width, s));
    const auto ih = static_cast<std::ptrdiff_t>(in.height);
    const auto iw = static_cast<std::ptrdiff_t>(in.width);
    for (std::size_t f = 0; f < out.channels; ++f) {
        for (std::size_t y = 0; y < out.height; ++y) {
            for (std::size_t x = 0; x < out.width; ++x) {
                double acc = 0.0;
                for (std::size_t c = 0; c < in.channels; ++c) {
                    for (std::size_t ky = 0; ky < k; ++ky) {
                        const auto sy = static_cast<std::ptrdiff_t>(y * s + ky) - pad;
                        if (sy < 0 || sy >= ih) continue;
                        for (std::size_t kx = 0; kx < k; ++kx) {
                            const auto sx = static_cast<std::ptrdiff_t>(x * s + kx) - pad;
                            if (sx < 0 || sx >= iw) continue;
                            acc += w.at(f, c, ky, kx) * in(c, static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
                        }
                    }
                }
                out(f, y, x) = acc;
            }
        }
    }
    return out;
}

/// Gradient w.r.t. the convolution input given the gradient w.r.t. its output.
inline Planes conv_backward(const Planes& grad_out, const ConvLayerWeights& w, std::size_t in_h, std::size_t in_w) {
    const std::size_t k = w.spec.kernel;
    const std::size_t s = w.spec.stride;
    const auto pad = static_cast<std::ptrdiff_t>(k / 2);
    Planes grad_in(w.in_channels, in_h, in_w);
    const auto ih = static_cast<std::ptrdiff_t>(in_h);
    const auto iw = static_cast<std::ptrdiff_t>(in_w);
    for (std::size_t f = 0; f < grad_out.channels; ++f) {
        for (std::size_t y = 0; y < grad_out.height; ++y) {
            for (std::size_t x = 0; x < grad_out.width; ++x) {
                const double g = grad_out(f, y, x);
                if (g == 0.0) continue;
                for (std::size_t c = 0; c < w.in_channels; ++c) {
                    for (std::size_t ky = 0; ky < k; ++ky) {
                        const auto sy = static_cast<std::ptrdiff_t>(y * s + ky) - pad;
                        if (sy < 0 || sy >= ih) continue;
                        for (std::size_t kx = 0; kx < k; ++kx) {
                            const auto sx = static_cast<std::ptrdiff_t>(x * s + kx) - pad;
                            if (sx < 0 || sx >= iw) continue;
                            grad_in(c, static_cast<std::size_t>(sy), static_cast<std::size_t>(sx)) += g * w.at(f, c, ky, kx);
                        }
                    }
                }
            }
        }
    }
    return grad_in;
}

inline Planes pool_forward(const Planes& in) {
    Planes out(in.channels, in.height / 2, in.width / 2);
    for (std::size_t c = 0; c < in.channels; ++c)
        for (std::size_t y = 0; y < out.height; ++y)
            for (std::size_t x = 0; x < out.width; ++x)
                out(c, y, x) = 0.25 * (in(c, 2 * y, 2 * x) + in(c, 2 * y, 2 * x + 1) + in(c, 2 * y + 1, 2 * x) +
                                       in(c, 2 * y + 1, 2 * x + 1));
    return out;
}

inline void pool_backward_add(const Planes& grad_out, Planes& grad_in) {
    for (std::size_t c = 0; c < grad_out.channels; ++c)
        for (std::size_t y = 0; y < grad_out.height; ++y)
            for (std::size_t x = 0; x < grad_out.width; ++x) {
                const double g = 0.25 * grad_out(c, y, x);
                grad_in(c, 2 * y, 2 * x) += g;
                grad_in(c, 2 * y, 2 * x + 1) += g;
                grad_in(c, 2 * y + 1, 2 * x) += g;
                grad_in(c, 2 * y + 1, 2 * x + 1) += g;
            }
}

/// Modified Gram-Schmidt over the rows of a rows x cols matrix.
inline void orthonormalize_rows(std::vector<double>& m, std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        double* ri = &m[i * cols];
        for (std::size_t j = 0; j < i; ++j) {
            const double* rj = &m[j * cols];
            double dot = 0.0;
            for (std::size_t k = 0; k < cols; ++k) dot += ri[k] * rj[k];
            for (std::size_t k = 0; k < cols; ++k) ri[k] -= dot * rj[k];
        }
        double norm = 0.0;
        for (std::size_t k = 0; k < cols; ++k) norm += ri[k] * ri[k];
        norm = std::sqrt(norm);
        if (norm < 1e-12) throw InvalidArgument("degenerate filter draw during orthonormalization");
        for (std::size_t k = 0; k < cols; ++k) ri[k] /= norm;
    }
}

} // namespace detail

/// Everything the backward pass needs from one forward evaluation.
struct ForwardTrace {
    std::vector<detail::Planes> inputs;   // input to each conv layer
    std::vector<detail::Planes> preacts;  // conv output before the rectifier
    std::vector<FeatureMap> features;     // rectified activations
};

class ConvBank {
public:
    ConvBank() = default;

    /// Seeded orthonormal filters, or the filters in `weights_file` when set.
    explicit ConvBank(const ConvBankSpec& spec);

    /// Build from explicit weights (layer in_channels must chain from 3).
    explicit ConvBank(std::vector<ConvLayerWeights> layers) : layers_(std::move(layers)) { check_chain(); }

    std::size_t layer_count() const noexcept { return layers_.size(); }
    const std::vector<ConvLayerWeights>& layers() const noexcept { return layers_; }

    /// Throws InvalidArgument if a pooling stage would receive a side shorter than 2.
    void check_input_size(std::size_t height, std::size_t width) const {
        std::size_t h = height;
        std::size_t w = width;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            h = detail::conv_out(h, layers_[l].spec.stride);
            w = detail::conv_out(w, layers_[l].spec.stride);
            if (layers_[l].spec.pool && l + 1 < layers_.size()) {
                if (h < 2 || w < 2) {
                    throw InvalidArgument("image " + std::to_string(height) + "x" + std::to_string(width) +
                                          " too small for the bank's receptive field at layer " + std::to_string(l));
                }
                h /= 2;
                w /= 2;
            }
        }
    }

    ForwardTrace forward(const ImageTensor& img) const {
        check_input_size(img.height(), img.width());
        ForwardTrace trace;
        detail::Planes in = detail::to_planes(img);
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            detail::Planes pre = detail::conv_forward(in, layers_[l]);
            FeatureMap fm;
            fm.layer = l;
            fm.maps = pre.channels;
            fm.height = pre.height;
            fm.width = pre.width;
            fm.values.resize(pre.v.size());
            for (std::size_t i = 0; i < pre.v.size(); ++i) fm.values[i] = pre.v[i] > 0.0 ? pre.v[i] : 0.0;
            trace.inputs.push_back(std::move(in));
            if (l + 1 < layers_.size()) {
                detail::Planes act(pre.channels, pre.height, pre.width);
                act.v = fm.values;
                in = layers_[l].spec.pool ? detail::pool_forward(act) : std::move(act);
            }
            trace.preacts.push_back(std::move(pre));
            trace.features.push_back(std::move(fm));
        }
        return trace;
    }

    /// Gradient w.r.t. the image given dLoss/dFeature for every layer.
    /// An empty entry in `feature_grads` means zero gradient for that layer.
    std::vector<double> backward(const ForwardTrace& trace, const std::vector<std::vector<double>>& feature_grads) const {
        if (feature_grads.size() != layers_.size()) throw InvalidArgument("one feature gradient per layer required");
        detail::Planes carry; // gradient arriving from the layer above, w.r.t. this layer's activation
        for (std::size_t li = layers_.size(); li-- > 0;) {
            const detail::Planes& pre = trace.preacts[li];
            detail::Planes g_act(pre.channels, pre.height, pre.width);
            if (!feature_grads[li].empty()) {
                if (feature_grads[li].size() != g_act.v.size()) throw InvalidArgument("feature gradient shape mismatch");
                g_act.v = feature_grads[li];
            }
            if (!carry.v.empty()) {
                for (std::size_t i = 0; i < g_act.v.size(); ++i) g_act.v[i] += carry.v[i];
            }
            for (std::size_t i = 0; i < g_act.v.size(); ++i)
                if (!(pre.v[i] > 0.0)) g_act.v[i] = 0.0;
            const detail::Planes& in = trace.inputs[li];
            detail::Planes g_in = detail::conv_backward(g_act, layers_[li], in.height, in.width);
            if (li == 0) {
                std::vector<double> out(in.height * in.width * ImageTensor::kChannels);
                for (std::size_t y = 0; y < in.height; ++y)
                    for (std::size_t x = 0; x < in.width; ++x)
                        for (std::size_t c = 0; c < ImageTensor::kChannels; ++c)
                            out[(y * in.width + x) * ImageTensor::kChannels + c] = g_in(c, y, x);
                return out;
            }
            const detail::Planes& below = trace.preacts[li - 1];
            if (layers_[li - 1].spec.pool) {
                carry = detail::Planes(below.channels, below.height, below.width);
                detail::pool_backward_add(g_in, carry);
            } else {
                carry = std::move(g_in);
            }
        }
        return {};
    }

private:
    void check_chain() const {
        std::size_t channels = ImageTensor::kChannels;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const auto& layer = layers_[l];
            if (layer.in_channels != channels)
                throw InvalidArgument("layer " + std::to_string(l) + " expects " + std::to_string(layer.in_channels) +
                                      " input channels, previous layer provides " + std::to_string(channels));
            if (layer.weights.size() != layer.spec.filters * channels * layer.spec.kernel * layer.spec.kernel)
                throw InvalidArgument("layer " + std::to_string(l) + " weight count mismatch");
            for (double v : layer.weights)
                if (!std::isfinite(v)) throw InvalidArgument("non-finite filter weight in layer " + std::to_string(l));
            channels = layer.spec.filters;
        }
        ConvBankSpec probe;
        for (const auto& layer : layers_) probe.layers.push_back(layer.spec);
        probe.validate();
    }

    std::vector<ConvLayerWeights> layers_;
};

/// Seeded unit-variance draws, orthonormalized per layer across filters.
inline std::vector<ConvLayerWeights> seeded_weights(const ConvBankSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    std::vector<ConvLayerWeights> out;
    std::size_t channels = ImageTensor::kChannels;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const auto& ls = spec.layers[l];
        const std::size_t fan_in = channels * ls.kernel * ls.kernel;
        if (ls.filters > fan_in)
            throw InvalidArgument("layer " + std::to_string(l) + ": " + std::to_string(ls.filters) +
                                  " filters cannot be orthonormal in dimension " + std::to_string(fan_in));
        ConvLayerWeights w;
        w.spec = ls;
        w.in_channels = channels;
        w.weights.resize(ls.filters * fan_in);
        for (double& v : w.weights) v = rng.normal();
        detail::orthonormalize_rows(w.weights, ls.filters, fan_in);
        out.push_back(std::move(w));
        channels = ls.filters;
    }
    return out;
}

inline std::vector<FeatureMap> extract_features(const ImageTensor& img, const ConvBank& bank) {
    return bank.forward(img).features;
}

inline ConvBank::ConvBank(const ConvBankSpec& spec) {
    if (spec.weights_file) {
        layers_ = read_weights(*spec.weights_file, spec.layers);
    } else {
        layers_ = seeded_weights(spec);
    }
    check_chain();
}

} // namespace top::style
