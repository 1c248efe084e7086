#pragma once

// Side-by-side result strip: content | history thumbnails | output.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "top/error.hpp"
#include "top/image.hpp"

namespace top::io {

inline constexpr std::size_t kMontageSeparator = 4;

/// Bilinear resampling with pixel-centre alignment.
inline ImageTensor resize_bilinear(const ImageTensor& src, std::size_t height, std::size_t width) {
    ImageTensor out(height, width);
    const double sy = static_cast<double>(src.height()) / static_cast<double>(height);
    const double sx = static_cast<double>(src.width()) / static_cast<double>(width);
    for (std::size_t y = 0; y < height; ++y) {
        const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height() - 1));
        const auto y0 = static_cast<std::size_t>(fy);
        const std::size_t y1 = std::min(y0 + 1, src.height() - 1);
        const double wy = fy - static_cast<double>(y0);
        for (std::size_t x = 0; x < width; ++x) {
            const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width() - 1));
            const auto x0 = static_cast<std::size_t>(fx);
            const std::size_t x1 = std::min(x0 + 1, src.width() - 1);
            const double wx = fx - static_cast<double>(x0);
            for (std::size_t c = 0; c < ImageTensor::kChannels; ++c) {
                const double top = src.at(y0, x0, c) * (1 - wx) + src.at(y0, x1, c) * wx;
                const double bot = src.at(y1, x0, c) * (1 - wx) + src.at(y1, x1, c) * wx;
                out.at(y, x, c) = std::clamp(top * (1 - wy) + bot * wy, 0.0, 1.0);
            }
        }
    }
    return out;
}

/// Width of a thumbnail scaled to `height`, aspect preserved, at least 1.
inline std::size_t thumbnail_width(const ImageTensor& img, std::size_t height) {
    const double w = std::round(static_cast<double>(img.width()) * static_cast<double>(height) /
                                static_cast<double>(img.height()));
    return std::max<std::size_t>(1, static_cast<std::size_t>(w));
}

/// Panels on a white background, top-aligned, separated by white gaps.
inline ImageTensor montage(const ImageTensor& content, const std::vector<ImageTensor>& history,
                           const ImageTensor& output) {
    const std::size_t h = content.height();
    std::vector<ImageTensor> panels = {content};
    for (const auto& img : history) panels.push_back(resize_bilinear(img, h, thumbnail_width(img, h)));
    panels.push_back(output);

    std::size_t width = kMontageSeparator * (panels.size() - 1), height = 0;
    for (const auto& p : panels) {
        width += p.width();
        height = std::max(height, p.height());
    }
    ImageTensor out(height, width, 1.0);
    std::size_t x0 = 0;
    for (const auto& p : panels) {
        for (std::size_t y = 0; y < p.height(); ++y)
            for (std::size_t x = 0; x < p.width(); ++x)
                for (std::size_t c = 0; c < ImageTensor::kChannels; ++c) out.at(y, x0 + x, c) = p.at(y, x, c);
        x0 += p.width() + kMontageSeparator;
    }
    return out;
}

} // namespace top::io
