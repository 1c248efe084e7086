#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "top/error.hpp"
#include "top/image.hpp"

namespace top::metrics {

struct SsimParams {
    std::size_t window = 11;
    double sigma = 1.5;
    double dynamic_range = 1.0;
    double k1 = 0.01;
    double k2 = 0.03;

    double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
    double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }

    /// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
    std::vector<double> taps() const {
        if (window == 0 || window % 2 == 0) throw InvalidArgument("SSIM window must be odd");
        if (!(k1 > 0.0 && k2 > 0.0)) throw InvalidArgument("SSIM constants K1, K2 must be > 0");
        std::vector<double> g(window);
        const double mid = static_cast<double>(window / 2);
        double sum = 0.0;
        for (std::size_t i = 0; i < window; ++i) {
            const double d = static_cast<double>(i) - mid;
            g[i] = std::exp(-d * d / (2.0 * sigma * sigma));
            sum += g[i];
        }
        for (double& v : g) v /= sum;
        return g;
    }
};

namespace detail {

/// Valid-mode separable filtering of an h x w plane.
inline std::vector<double> filter_valid(std::span<const double> plane, std::size_t h, std::size_t w,
                                        const std::vector<double>& taps) {
    const std::size_t k = taps.size();
    const std::size_t ow = w - k + 1;
    const std::size_t oh = h - k + 1;
    std::vector<double> rows(h * ow, 0.0);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (std::size_t i = 0; i < k; ++i) acc += taps[i] * plane[y * w + x + i];
            rows[y * ow + x] = acc;
        }
    std::vector<double> out(oh * ow, 0.0);
    for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (std::size_t i = 0; i < k; ++i) acc += taps[i] * rows[(y + i) * ow + x];
            out[y * ow + x] = acc;
        }
    return out;
}

} // namespace detail

/// Mean SSIM over every fully contained window of two h x w luma planes.
inline double ssim_planes(std::span<const double> x, std::span<const double> y, std::size_t h, std::size_t w,
                          const SsimParams& p = {}) {
    if (x.size() != h * w || y.size() != h * w) throw InvalidArgument("SSIM planes do not match their dimensions");
    if (h < p.window || w < p.window)
        throw InvalidArgument("image " + std::to_string(h) + "x" + std::to_string(w) + " smaller than the " +
                              std::to_string(p.window) + "x" + std::to_string(p.window) + " SSIM window");
    const auto taps = p.taps();
    std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto mx = detail::filter_valid(x, h, w, taps);
    const auto my = detail::filter_valid(y, h, w, taps);
    const auto mxx = detail::filter_valid(xx, h, w, taps);
    const auto myy = detail::filter_valid(yy, h, w, taps);
    const auto mxy = detail::filter_valid(xy, h, w, taps);
    const double c1 = p.c1();
    const double c2 = p.c2();
    double acc = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = mxx[i] - mx[i] * mx[i];
        const double vy = myy[i] - my[i] * my[i];
        const double cov = mxy[i] - mx[i] * my[i];
        acc += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
               ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    return acc / static_cast<double>(mx.size());
}

/// SSIM on the luma (0.299 R + 0.587 G + 0.114 B) of two images.
inline double ssim(const ImageTensor& x, const ImageTensor& y, const SsimParams& p = {}) {
    if (x.height() != y.height() || x.width() != y.width())
        throw InvalidArgument("SSIM needs images of equal size");
    return ssim_planes(x.luma(), y.luma(), x.height(), x.width(), p);
}

} // namespace top::metrics
