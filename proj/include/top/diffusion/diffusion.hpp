#pragma once

// Variance-preserving diffusion primitives: a beta schedule, the closed-form
// forward process x_t = alpha_t x_0 + sigma_t eps, the noise-prediction
// objective, and ancestral sampling with a pluggable denoiser.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "top/error.hpp"
#include "top/image.hpp"
#include "top/rng.hpp"

namespace top::diffusion {

using Tensor = std::vector<double>;

/// Index 0 holds the t = 0 convention (alpha_bar = 1, beta undefined and stored as 0).
class NoiseSchedule {
public:
    NoiseSchedule() = default;

    explicit NoiseSchedule(std::vector<double> betas) {
        if (betas.empty()) throw InvalidArgument("noise schedule needs T >= 1");
        beta_.reserve(betas.size() + 1);
        beta_.push_back(0.0);
        alpha_bar_.push_back(1.0);
        for (std::size_t i = 0; i < betas.size(); ++i) {
            const double b = betas[i];
            if (!(b > 0.0 && b < 1.0)) throw InvalidArgument("beta_" + std::to_string(i + 1) + " must lie in (0, 1)");
            beta_.push_back(b);
            alpha_bar_.push_back(alpha_bar_.back() * (1.0 - b));
        }
        alpha_.resize(alpha_bar_.size());
        sigma_.resize(alpha_bar_.size());
        for (std::size_t t = 0; t < alpha_bar_.size(); ++t) {
            alpha_[t] = std::sqrt(alpha_bar_[t]);
            sigma_[t] = std::sqrt(1.0 - alpha_bar_[t]);
        }
    }

    std::size_t steps() const noexcept { return beta_.empty() ? 0 : beta_.size() - 1; }
    double beta(std::size_t t) const { return beta_.at(t); }
    double alpha_bar(std::size_t t) const { return alpha_bar_.at(t); }
    double alpha(std::size_t t) const { return alpha_.at(t); }
    double sigma(std::size_t t) const { return sigma_.at(t); }

    nlohmann::json to_json() const {
        return nlohmann::json{{"T", steps()},
                              {"beta", std::vector<double>(beta_.begin() + 1, beta_.end())},
                              {"alpha_bar", std::vector<double>(alpha_bar_.begin() + 1, alpha_bar_.end())}};
    }

    static NoiseSchedule from_json(const nlohmann::json& j) {
        NoiseSchedule s(j.at("beta").get<std::vector<double>>());
        if (j.contains("T") && j.at("T").get<std::size_t>() != s.steps())
            throw InvalidArgument("schedule T disagrees with beta length");
        return s;
    }

private:
    std::vector<double> beta_;
    std::vector<double> alpha_bar_;
    std::vector<double> alpha_;
    std::vector<double> sigma_;
};

/// beta_t linearly spaced from beta_start (t = 1) to beta_end (t = T), inclusive.
inline NoiseSchedule linear_schedule(std::size_t steps, double beta_start, double beta_end) {
    if (steps < 1) throw InvalidArgument("T must be >= 1");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
        throw InvalidArgument("need 0 < beta_start <= beta_end < 1");
    std::vector<double> betas(steps);
    for (std::size_t i = 0; i < steps; ++i) {
        const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
        betas[i] = beta_start + frac * (beta_end - beta_start);
    }
    return NoiseSchedule(std::move(betas));
}

struct ConditionEmbedding {
    std::vector<double> values;
};

/// eps_hat = f(x_t, c, t); the output must have the shape of x_t.
using Denoiser = std::function<Tensor(std::span<const double> x_t, const ConditionEmbedding& c, std::size_t t)>;

inline Tensor forward_sample(std::span<const double> x0, std::size_t t, std::span<const double> eps,
                             const NoiseSchedule& s) {
    if (t > s.steps()) throw InvalidArgument("t = " + std::to_string(t) + " exceeds T = " + std::to_string(s.steps()));
    if (x0.size() != eps.size()) throw InvalidArgument("x0 and noise shapes differ");
    const double a = s.alpha(t);
    const double sg = s.sigma(t);
    Tensor out(x0.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + sg * eps[i];
    return out;
}

namespace detail {

inline Tensor call_denoiser(const Denoiser& d, std::span<const double> x, const ConditionEmbedding& c,
                            std::size_t t) {
    Tensor out = d(x, c, t);
    if (out.size() != x.size())
        throw InvalidArgument("denoiser returned " + std::to_string(out.size()) + " values for a " +
                              std::to_string(x.size()) + "-element input");
    return out;
}

} // namespace detail

/// ||eps - eps_theta(x_t, c, t)||^2 with x_t from forward_sample.
inline double simple_loss(const Denoiser& d, std::span<const double> x0, const ConditionEmbedding& c, std::size_t t,
                          std::span<const double> eps, const NoiseSchedule& s) {
    if (t < 1 || t > s.steps()) throw InvalidArgument("simple_loss needs 1 <= t <= T");
    const Tensor xt = forward_sample(x0, t, eps, s);
    const Tensor pred = detail::call_denoiser(d, xt, c, t);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double r = eps[i] - pred[i];
        acc += r * r;
    }
    return acc;
}

/// Ancestral sampling from x_T ~ N(0, I):
///   x_{t-1} = (x_t - beta_t / sigma_t * eps_hat) / sqrt(1 - beta_t) + sqrt(beta_t) z,  z = 0 at t = 1.
inline Tensor ddpm_sample(const Denoiser& d, const ConditionEmbedding& c, const NoiseSchedule& s,
                          std::span<const std::size_t> shape, std::uint64_t seed) {
    if (s.steps() < 1) throw InvalidArgument("empty noise schedule");
    const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    if (shape.empty() || n == 0) throw InvalidArgument("sample shape must be non-empty");
    Rng rng(seed);
    Tensor x(n);
    for (double& v : x) v = rng.normal();
    for (std::size_t t = s.steps(); t >= 1; --t) {
        const Tensor eps_hat = detail::call_denoiser(d, x, c, t);
        const double b = s.beta(t);
        const double coef = b / s.sigma(t);
        const double inv = 1.0 / std::sqrt(1.0 - b);
        const double noise = std::sqrt(b);
        for (std::size_t i = 0; i < n; ++i) {
            double next = inv * (x[i] - coef * eps_hat[i]);
            if (t > 1) next += noise * rng.normal();
            if (!std::isfinite(next))
                throw NonFiniteError("ddpm sample became non-finite at t = " + std::to_string(t));
            x[i] = next;
        }
    }
    return x;
}

/// Monte-Carlo estimate of E||eps - eps_theta(x_t, c, t)||^2 / dim for
/// standard-normal data. Stream k draws from seed + k; per-stream sums are
/// combined in stream order so results depend only on (seed, streams).
inline double estimate_simple_loss(const Denoiser& d, const ConditionEmbedding& c, std::size_t t,
                                   const NoiseSchedule& s, std::size_t dim, std::size_t samples,
                                   std::uint64_t seed, std::size_t streams = 1) {
    if (samples == 0 || dim == 0 || streams == 0) throw InvalidArgument("estimate needs samples, dim, streams >= 1");
    std::vector<double> sums(streams, 0.0);
    auto run = [&](std::size_t k) {
        Rng rng(seed + k);
        const std::size_t begin = samples * k / streams;
        const std::size_t end = samples * (k + 1) / streams;
        Tensor x0(dim), eps(dim);
        for (std::size_t i = begin; i < end; ++i) {
            for (double& v : x0) v = rng.normal();
            for (double& v : eps) v = rng.normal();
            sums[k] += simple_loss(d, x0, c, t, eps, s);
        }
    };
    if (streams == 1) {
        run(0);
    } else {
        std::vector<std::thread> workers;
        for (std::size_t k = 0; k < streams; ++k) workers.emplace_back(run, k);
        for (auto& w : workers) w.join();
    }
    double total = 0.0;
    for (double v : sums) total += v;
    return total / static_cast<double>(samples * dim);
}

/// Mean of one embedding per history image, scaled to unit length.
using EmbeddingProvider = std::function<std::vector<double>(const ImageTensor&)>;

inline ConditionEmbedding embed_condition(const std::vector<ImageTensor>& history, const EmbeddingProvider& provider) {
    if (history.empty()) throw InvalidArgument("condition history must contain at least one image");
    std::vector<double> mean;
    for (std::size_t i = 0; i < history.size(); ++i) {
        std::vector<double> e = provider(history[i]);
        if (e.empty()) throw InvalidArgument("embedding provider returned an empty vector for image " + std::to_string(i));
        if (mean.empty()) mean.assign(e.size(), 0.0);
        if (e.size() != mean.size())
            throw InvalidArgument("embedding dimension mismatch at image " + std::to_string(i) + ": " +
                                  std::to_string(e.size()) + " vs " + std::to_string(mean.size()));
        for (std::size_t k = 0; k < e.size(); ++k) {
            if (!std::isfinite(e[k])) throw InvalidArgument("non-finite embedding for image " + std::to_string(i));
            mean[k] += e[k];
        }
    }
    double norm = 0.0;
    for (double& v : mean) {
        v /= static_cast<double>(history.size());
        norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) throw InvalidArgument("mean condition embedding has zero norm");
    for (double& v : mean) v /= norm;
    return ConditionEmbedding{std::move(mean)};
}

} // namespace top::diffusion
