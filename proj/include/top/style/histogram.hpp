#pragma once

// Per-channel colour histograms over [0, 1]. Reported histograms use hard
// binning; the optimizer uses a triangular soft binning whose gradient is
// non-zero almost everywhere.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "top/error.hpp"
#include "top/image.hpp"

namespace top::style {

struct HistogramFeature {
    std::size_t bins = 0;
    std::vector<double> values; // channel-major, 3 * bins

    double at(std::size_t channel, std::size_t bin) const { return values[channel * bins + bin]; }

    friend bool operator==(const HistogramFeature&, const HistogramFeature&) = default;
};

/// Equal-width bins [k/B, (k+1)/B); the last bin is closed at 1.
inline HistogramFeature histogram(const ImageTensor& img, std::size_t bins) {
    if (bins < 2) throw InvalidArgument("histogram needs at least 2 bins");
    HistogramFeature h{bins, std::vector<double>(ImageTensor::kChannels * bins, 0.0)};
    const std::size_t pixels = img.height() * img.width();
    const auto data = img.data();
    for (std::size_t p = 0; p < pixels; ++p) {
        for (std::size_t c = 0; c < ImageTensor::kChannels; ++c) {
            const double v = data[p * ImageTensor::kChannels + c];
            auto k = static_cast<std::size_t>(std::floor(v * static_cast<double>(bins)));
            k = std::min(k, bins - 1);
            h.values[c * bins + k] += 1.0;
        }
    }
    for (double& v : h.values) v /= static_cast<double>(pixels);
    return h;
}

namespace detail {

/// Soft-bin assignment of one value: up to two (bin, weight, dweight/dv) triples.
struct SoftBin {
    std::size_t lo = 0;
    double w_lo = 0.0;
    double dw_lo = 0.0;
    std::size_t hi = 0;
    double w_hi = 0.0;
    double dw_hi = 0.0;
};

inline SoftBin soft_bin(double v, std::size_t bins) {
    const double b = static_cast<double>(bins);
    // Position in units of bins relative to the first bin centre.
    const double u = v * b - 0.5;
    SoftBin s;
    if (u <= 0.0) {
        s.lo = s.hi = 0;
        s.w_lo = 1.0;
        return s;
    }
    if (u >= b - 1.0) {
        s.lo = s.hi = bins - 1;
        s.w_lo = 1.0;
        return s;
    }
    const double fl = std::floor(u);
    const double frac = u - fl;
    s.lo = static_cast<std::size_t>(fl);
    s.hi = s.lo + 1;
    s.w_lo = 1.0 - frac;
    s.w_hi = frac;
    s.dw_lo = -b;
    s.dw_hi = b;
    return s;
}

} // namespace detail

/// Triangular-kernel histogram (kernel half-width 1/B around bin centres).
/// Each channel still sums to 1.
inline HistogramFeature soft_histogram(const ImageTensor& img, std::size_t bins) {
    if (bins < 2) throw InvalidArgument("histogram needs at least 2 bins");
    HistogramFeature h{bins, std::vector<double>(ImageTensor::kChannels * bins, 0.0)};
    const std::size_t pixels = img.height() * img.width();
    const auto data = img.data();
    const double inv = 1.0 / static_cast<double>(pixels);
    for (std::size_t p = 0; p < pixels; ++p) {
        for (std::size_t c = 0; c < ImageTensor::kChannels; ++c) {
            const auto s = detail::soft_bin(data[p * ImageTensor::kChannels + c], bins);
            h.values[c * bins + s.lo] += s.w_lo * inv;
            if (s.w_hi != 0.0) h.values[c * bins + s.hi] += s.w_hi * inv;
        }
    }
    return h;
}

/// Pulls dLoss/dhist back through soft_histogram to an image-shaped gradient.
inline std::vector<double> soft_histogram_backward(const ImageTensor& img, std::size_t bins,
                                                   const std::vector<double>& grad_hist) {
    if (grad_hist.size() != ImageTensor::kChannels * bins) throw InvalidArgument("histogram gradient size mismatch");
    std::vector<double> grad(img.size(), 0.0);
    const std::size_t pixels = img.height() * img.width();
    const auto data = img.data();
    const double inv = 1.0 / static_cast<double>(pixels);
    for (std::size_t p = 0; p < pixels; ++p) {
        for (std::size_t c = 0; c < ImageTensor::kChannels; ++c) {
            const std::size_t idx = p * ImageTensor::kChannels + c;
            const auto s = detail::soft_bin(data[idx], bins);
            grad[idx] = inv * (s.dw_lo * grad_hist[c * bins + s.lo] + s.dw_hi * grad_hist[c * bins + s.hi]);
        }
    }
    return grad;
}

inline double hist_distance(const HistogramFeature& a, const HistogramFeature& b) {
    if (a.bins != b.bins || a.values.size() != b.values.size())
        throw InvalidArgument("histograms differ in bin count: " + std::to_string(a.bins) + " vs " +
                              std::to_string(b.bins));
    double acc = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double d = a.values[i] - b.values[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

/// RBF similarity exp(-gamma * ||a - b||_2), in (0, 1].
inline double hist_similarity(const HistogramFeature& a, const HistogramFeature& b, double gamma) {
    if (gamma < 0.0) throw InvalidArgument("RBF bandwidth gamma must be >= 0");
    return std::exp(-gamma * hist_distance(a, b));
}

/// Mean of several histograms, each channel renormalized to unit mass.
inline HistogramFeature mean_histogram(const std::vector<HistogramFeature>& hs) {
    if (hs.empty()) throw InvalidArgument("mean of zero histograms");
    HistogramFeature out{hs.front().bins, std::vector<double>(hs.front().values.size(), 0.0)};
    for (const auto& h : hs) {
        if (h.bins != out.bins) throw InvalidArgument("histograms differ in bin count");
        for (std::size_t i = 0; i < h.values.size(); ++i) out.values[i] += h.values[i];
    }
    for (std::size_t c = 0; c < ImageTensor::kChannels; ++c) {
        double mass = 0.0;
        for (std::size_t k = 0; k < out.bins; ++k) mass += out.values[c * out.bins + k];
        for (std::size_t k = 0; k < out.bins; ++k) out.values[c * out.bins + k] /= mass;
    }
    return out;
}

} // namespace top::style
