#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "top/error.hpp"
#include "top/style/types.hpp"

namespace top::style {

/// Symmetric N x N second-moment matrix of a layer's feature maps.
struct GramMatrix {
    std::size_t layer = 0;
    std::size_t n = 0;
    std::vector<double> entries; // row-major n x n

    double at(std::size_t i, std::size_t j) const { return entries[i * n + j]; }

    friend bool operator==(const GramMatrix&, const GramMatrix&) = default;
};

/// G = F F^T. The upper triangle is computed and mirrored so G is exactly symmetric.
inline GramMatrix gram(const FeatureMap& f) {
    const std::size_t n = f.maps;
    const std::size_t m = f.elements();
    if (f.values.size() != n * m) throw InvalidArgument("feature map value count does not match its shape");
    GramMatrix g{f.layer, n, std::vector<double>(n * n, 0.0)};
    for (std::size_t i = 0; i < n; ++i) {
        const double* fi = &f.values[i * m];
        for (std::size_t j = i; j < n; ++j) {
            const double* fj = &f.values[j * m];
            double acc = 0.0;
            for (std::size_t k = 0; k < m; ++k) acc += fi[k] * fj[k];
            g.entries[i * n + j] = acc;
            g.entries[j * n + i] = acc;
        }
    }
    return g;
}

/// (1 / 4 N^2 M^2) * sum_ij (G_ij - A_ij)^2
inline double style_loss_layer(const GramMatrix& g, const GramMatrix& a, std::size_t n_maps, std::size_t m_elems) {
    if (g.n != a.n || g.entries.size() != a.entries.size())
        throw InvalidArgument("gram dimension mismatch: " + std::to_string(g.n) + " vs " + std::to_string(a.n));
    if (n_maps == 0 || m_elems == 0) throw InvalidArgument("style loss needs N_l, M_l >= 1");
    double acc = 0.0;
    for (std::size_t i = 0; i < g.entries.size(); ++i) {
        const double d = g.entries[i] - a.entries[i];
        acc += d * d;
    }
    const double nn = static_cast<double>(n_maps);
    const double mm = static_cast<double>(m_elems);
    return acc / (4.0 * nn * nn * mm * mm);
}

inline double style_loss_total(std::span<const double> losses, std::span<const double> weights) {
    if (losses.size() != weights.size())
        throw InvalidArgument("style loss and weight lists differ in length");
    double acc = 0.0;
    for (std::size_t l = 0; l < losses.size(); ++l) acc += weights[l] * losses[l];
    return acc;
}

/// 1/2 * sum (F - Pc)^2 over two feature maps of identical shape.
inline double content_loss(const FeatureMap& f, const FeatureMap& pc) {
    if (f.maps != pc.maps || f.height != pc.height || f.width != pc.width || f.values.size() != pc.values.size())
        throw InvalidArgument("content loss needs feature maps of identical shape");
    double acc = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        const double d = f.values[i] - pc.values[i];
        acc += d * d;
    }
    return 0.5 * acc;
}

} // namespace top::style
