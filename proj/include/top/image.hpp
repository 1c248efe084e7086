#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "top/error.hpp"

namespace top {

/// H x W x 3 image with row-major interleaved RGB intensities in [0, 1].
class ImageTensor {
public:
    static constexpr std::size_t kChannels = 3;

    ImageTensor() = default;

    ImageTensor(std::size_t height, std::size_t width, double fill = 0.0)
        : height_(height), width_(width), data_(height * width * kChannels, fill) {
        if (height == 0 || width == 0) throw InvalidArgument("image dimensions must be >= 1");
        check_range();
    }

    ImageTensor(std::size_t height, std::size_t width, std::vector<double> data)
        : height_(height), width_(width), data_(std::move(data)) {
        if (height == 0 || width == 0) throw InvalidArgument("image dimensions must be >= 1");
        if (data_.size() != height * width * kChannels) {
            throw InvalidArgument("image data length " + std::to_string(data_.size()) +
                                  " != " + std::to_string(height * width * kChannels));
        }
        check_range();
    }

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t channels() const noexcept { return kChannels; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& at(std::size_t y, std::size_t x, std::size_t c) {
        return data_[(y * width_ + x) * kChannels + c];
    }
    double at(std::size_t y, std::size_t x, std::size_t c) const {
        return data_[(y * width_ + x) * kChannels + c];
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    /// Clamp every entry back into [0, 1].
    void clamp() {
        for (double& v : data_) v = std::clamp(v, 0.0, 1.0);
    }

    /// Luma plane 0.299 R + 0.587 G + 0.114 B, row-major H x W.
    std::vector<double> luma() const {
        std::vector<double> out(height_ * width_);
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double* px = &data_[i * kChannels];
            out[i] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
        }
        return out;
    }

    friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

private:
    void check_range() const {
        for (double v : data_) {
            if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("image intensities must lie in [0, 1]");
        }
    }

    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<double> data_;
};

} // namespace top
