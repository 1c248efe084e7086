#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "top/error.hpp"

namespace top::style {

struct ConvLayerSpec {
    std::size_t filters = 1;
    std::size_t kernel = 3;
    std::size_t stride = 1;
    /// 2x2 average pooling applied to this layer's activation before the next layer.
    bool pool = false;

    friend bool operator==(const ConvLayerSpec&, const ConvLayerSpec&) = default;
};

struct ConvBankSpec {
    std::vector<ConvLayerSpec> layers;
    std::uint64_t seed = 0;
    /// When set, filter values come from a TOPW weights file instead of the seed.
    std::optional<std::filesystem::path> weights_file;

    /// 16/32/64 filters of 3x3, stride 1, pooling between layers.
    static ConvBankSpec standard(std::uint64_t seed = 0) {
        ConvBankSpec spec;
        spec.seed = seed;
        spec.layers = {{16, 3, 1, true}, {32, 3, 1, true}, {64, 3, 1, false}};
        return spec;
    }

    void validate() const {
        if (layers.empty()) throw InvalidArgument("convolution bank needs at least one layer");
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const auto& layer = layers[l];
            const std::string where = "layer " + std::to_string(l) + ": ";
            if (layer.filters < 1) throw InvalidArgument(where + "filter count must be >= 1");
            if (layer.kernel % 2 == 0) throw InvalidArgument(where + "kernel size must be odd");
            if (layer.stride < 1) throw InvalidArgument(where + "stride must be >= 1");
        }
    }
};

/// Activations of one layer: N_l maps of M_l = height * width elements each.
struct FeatureMap {
    std::size_t layer = 0;
    std::size_t maps = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> values; // maps x (height * width), map-major

    std::size_t elements() const noexcept { return height * width; }
    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(values).subspan(i * elements(), elements());
    }

    friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

/// Filter weights for one layer, [filter][channel][ky][kx].
struct ConvLayerWeights {
    ConvLayerSpec spec;
    std::size_t in_channels = 0;
    std::vector<double> weights;

    double at(std::size_t f, std::size_t c, std::size_t ky, std::size_t kx) const {
        return weights[((f * in_channels + c) * spec.kernel + ky) * spec.kernel + kx];
    }
};

} // namespace top::style
