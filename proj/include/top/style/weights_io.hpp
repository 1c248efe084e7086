#pragma once

// TOPW external convolution weights, little-endian:
//   "TOPW" | version u32 | layer count u32
//   per layer: filter count u32 | kernel size u32 | f32 weights
//   (filter-major, then input channel, then row-major kernel taps)
// Input channels are implied: 3 for the first layer, else the previous
// layer's filter count.

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "top/error.hpp"
#include "top/style/types.hpp"

namespace top::style {

inline constexpr std::uint32_t kWeightsVersion = 1;

namespace detail {

inline std::uint32_t read_u32(std::istream& in, const std::string& what) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw InvalidArgument("weights file truncated reading " + what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
    const std::array<unsigned char, 4> b{static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                         static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b.data()), 4);
}

} // namespace detail

/// Reads a TOPW file. `layout` supplies stride/pooling per layer and, when
/// non-empty, must agree with the file's filter and kernel counts. With an
/// empty layout every layer gets stride 1 and all but the last are pooled.
inline std::vector<ConvLayerWeights> read_weights(const std::filesystem::path& path,
                                                  const std::vector<ConvLayerSpec>& layout) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open weights file " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "TOPW", 4) != 0)
        throw InvalidArgument("weights file " + path.string() + " lacks TOPW magic");
    const std::uint32_t version = detail::read_u32(in, "version");
    if (version != kWeightsVersion) throw InvalidArgument("unsupported weights version " + std::to_string(version));
    const std::uint32_t count = detail::read_u32(in, "layer count");
    if (count == 0) throw InvalidArgument("weights file has no layers");
    if (!layout.empty() && layout.size() != count)
        throw InvalidArgument("weights file has " + std::to_string(count) + " layers, config expects " +
                              std::to_string(layout.size()));

    std::vector<ConvLayerWeights> layers;
    std::size_t channels = 3;
    for (std::uint32_t l = 0; l < count; ++l) {
        const std::string tag = "layer " + std::to_string(l);
        ConvLayerWeights w;
        w.spec.filters = detail::read_u32(in, tag + " filter count");
        w.spec.kernel = detail::read_u32(in, tag + " kernel size");
        if (!layout.empty()) {
            const auto& want = layout[l];
            if (want.filters != w.spec.filters || want.kernel != w.spec.kernel)
                throw InvalidArgument(tag + " shape in weights file disagrees with config");
            w.spec.stride = want.stride;
            w.spec.pool = want.pool;
        } else {
            w.spec.stride = 1;
            w.spec.pool = l + 1 < count;
        }
        w.in_channels = channels;
        const std::size_t n = w.spec.filters * channels * w.spec.kernel * w.spec.kernel;
        if (n == 0 || n > (std::size_t{1} << 28)) throw InvalidArgument(tag + " has an implausible weight count");
        w.weights.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t bits = detail::read_u32(in, tag + " weights");
            float f;
            std::memcpy(&f, &bits, sizeof f);
            w.weights[i] = f;
        }
        channels = w.spec.filters;
        layers.push_back(std::move(w));
    }
    if (in.peek() != std::char_traits<char>::eof()) throw InvalidArgument("trailing bytes after weights in " + path.string());
    return layers;
}

/// Writes weights rounded to f32; layer strides and pooling are not stored.
inline void write_weights(const std::filesystem::path& path, const std::vector<ConvLayerWeights>& layers) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write weights file " + path.string());
    out.write("TOPW", 4);
    detail::write_u32(out, kWeightsVersion);
    detail::write_u32(out, static_cast<std::uint32_t>(layers.size()));
    for (const auto& w : layers) {
        detail::write_u32(out, static_cast<std::uint32_t>(w.spec.filters));
        detail::write_u32(out, static_cast<std::uint32_t>(w.spec.kernel));
        for (double v : w.weights) {
            const auto f = static_cast<float>(v);
            std::uint32_t bits;
            std::memcpy(&bits, &f, sizeof bits);
            detail::write_u32(out, bits);
        }
    }
    if (!out) throw InvalidArgument("failed writing weights file " + path.string());
}

} // namespace top::style
