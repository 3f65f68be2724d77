#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "csregions/quadrature.hpp"
#include "csregions/rng.hpp"

namespace csregions::prior {

/// Bernoulli-Gaussian signal law: an entry is N(0,1) with probability p and
/// exactly zero otherwise. Second moment (= prior variance) equals p.
struct SparseGaussianPrior {
    double p;

    explicit SparseGaussianPrior(double p_) : p(p_) {
        if (!(p > 0.0) || !(p <= 1.0) || !std::isfinite(p))
            throw std::domain_error("SparseGaussianPrior: p must lie in (0, 1]");
    }

    double second_moment() const { return p; }
};

/// Scalar observation model u = sqrt(snr_eff) * x + z with z ~ N(0,1).
struct ScalarChannel {
    double snr_eff;

    explicit ScalarChannel(double s) : snr_eff(s) {
        if (!(s >= 0.0) || !std::isfinite(s))
            throw std::domain_error("ScalarChannel: snr_eff must be finite and nonnegative");
    }
};

struct PosteriorStats {
    double mean;
    double var;
};

namespace detail {

constexpr double kLogTwoPi = 1.8378770664093454836;  // ln(2*pi)

inline double log_sum_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(-std::abs(a - b)));
}

inline void check_snr(double s) {
    if (!std::isfinite(s) || s < 0.0)
        throw std::domain_error("snr_eff must be finite and nonnegative");
}

}  // namespace detail

/// Exact conditional mean and variance of x given u = x + w, w ~ N(0, noise_var),
/// under the two-component mixture prior. The mixture responsibility is formed
/// in the log domain, so the shrinkage stays stable far into the tails
/// (|u| of 40+ standard deviations).
inline PosteriorStats posterior_mean_var(const SparseGaussianPrior& prior, double u, double noise_var) {
    if (!(noise_var > 0.0) || !std::isfinite(noise_var))
        throw std::domain_error("posterior_mean_var: noise_var must be positive");
    if (!std::isfinite(u)) throw std::domain_error("posterior_mean_var: u must be finite");

    const double v = noise_var;
    // log odds of the zero component against the Gaussian component, with the
    // u^2 coefficient factored out so huge observations saturate cleanly
    // instead of producing inf - inf
    double resp;  // P(x nonzero | u)
    if (prior.p == 1.0) {
        resp = 1.0;
    } else {
        const double base = std::log1p(-prior.p) - std::log(prior.p) + 0.5 * (std::log1p(v) - std::log(v));
        const double d = base - u * u * 0.5 / (v * (1.0 + v));
        if (d > 0.0) {
            const double e = std::exp(-d);
            resp = e / (1.0 + e);
        } else {
            resp = 1.0 / (1.0 + std::exp(d));
        }
    }

    const double shrink = u / (1.0 + v);       // Gaussian-channel posterior mean
    const double gauss_var = v / (1.0 + v);    // Gaussian-channel posterior variance
    const double mix = resp * (1.0 - resp);    // zero exactly when the responsibility saturates
    PosteriorStats stats;
    stats.mean = resp * shrink;
    stats.var = resp * gauss_var + (mix > 0.0 ? mix * shrink * shrink : 0.0);
    return stats;
}

/// MMSE of estimating x from sqrt(s)*x + z, z ~ N(0,1). Evaluated by adaptive
/// quadrature of the Bernoulli-Gaussian mixture integral, rescaled to
/// t = y / sqrt(s+1):
///
///   MMSE = p - p^2 s / (sqrt(2 pi) (s+1)) * Int t^2 / D(t) dt,
///   D(t) = p e^{t^2/2} + (1-p) sqrt(s+1) e^{(1-s) t^2 / 2},
///
/// with the denominator kept in the log domain (it overflows in naive form
/// once s exceeds a few hundred). Truncation at |t| <= 40 leaves a tail
/// below 1e-300. Certified absolute error on the result is <= 1e-10.
inline double scalar_mmse(const SparseGaussianPrior& prior, double s) {
    detail::check_snr(s);
    if (s == 0.0) return prior.p;

    const double p = prior.p;
    const double log_p = std::log(p);
    const double log_q_scaled = (p == 1.0) ? -std::numeric_limits<double>::infinity()
                                           : std::log1p(-p) + 0.5 * std::log1p(s);
    const double decay = 0.5 * (1.0 - s);

    auto integrand = [&](double t) {
        const double t2 = t * t;
        const double log_den = detail::log_sum_exp(log_p + 0.5 * t2, log_q_scaled + decay * t2);
        return t2 * std::exp(-log_den);
    };

    const double prefactor = p * p * s / (std::sqrt(2.0 * std::numbers::pi) * (s + 1.0));
    quad::Options opt;
    opt.abs_tol = 0.5e-10 / prefactor;
    opt.rel_tol = 1e-13;
    const double inner_scale = std::min(1.0, 4.0 / std::sqrt(s + 1.0));
    const auto res = quad::integrate_adaptive(integrand, quad::geometric_breakpoints(inner_scale, 40.0), opt);

    const double mmse = p - prefactor * 2.0 * res.value;  // integrand is even in t
    // Guard against quadrature round-off pushing past the closed-form bounds.
    return std::min(std::max(mmse, std::numeric_limits<double>::min()), p);
}

inline double scalar_mmse(const SparseGaussianPrior& prior, const ScalarChannel& channel) {
    return scalar_mmse(prior, channel.snr_eff);
}

struct OracleEstimate {
    double value;
    double std_err;
};

/// Monte-Carlo estimate of the same quantity as scalar_mmse: sample (x, u)
/// pairs, apply the posterior-mean denoiser, average the squared error.
/// Deterministic for a fixed seed; the returned standard error is the
/// sample standard deviation of the squared errors divided by sqrt(n).
inline OracleEstimate scalar_mmse_oracle(const SparseGaussianPrior& prior, double s, std::uint64_t samples,
                                         std::uint64_t seed) {
    detail::check_snr(s);
    if (samples < 100000) throw std::domain_error("scalar_mmse_oracle: need at least 1e5 samples");

    rng::Stream stream(rng::splitmix64(seed));
    const double sqrt_s = std::sqrt(s);
    double mean = 0.0;
    double m2 = 0.0;
    for (std::uint64_t i = 0; i < samples; ++i) {
        const double x = (stream.uniform() < prior.p) ? stream.normal() : 0.0;
        const double z = stream.normal();
        double err;
        if (s > 0.0) {
            const double u = sqrt_s * x + z;
            err = x - posterior_mean_var(prior, u / sqrt_s, 1.0 / s).mean;
        } else {
            err = x;  // posterior mean is the prior mean, zero
        }
        const double sq = err * err;
        const double delta = sq - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (sq - mean);
    }
    const double n = static_cast<double>(samples);
    OracleEstimate est;
    est.value = mean;
    est.std_err = std::sqrt(m2 / (n - 1.0) / n);
    return est;
}

/// I(x; sqrt(s) x + z) in nats, computed as h(Y) - h(Z). The output density is
/// the two-Gaussian mixture p N(0, s+1) + (1-p) N(0, 1); its differential
/// entropy is integrated adaptively and h(Z) = (1/2) ln(2 pi e) subtracted.
inline double mutual_information(const SparseGaussianPrior& prior, double s) {
    detail::check_snr(s);

    const double p = prior.p;
    const double log_p = std::log(p);
    const double log_q = (p == 1.0) ? -std::numeric_limits<double>::infinity() : std::log1p(-p);
    const double var_wide = s + 1.0;
    const double log_norm_wide = -0.5 * (detail::kLogTwoPi + std::log(var_wide));
    const double log_norm_unit = -0.5 * detail::kLogTwoPi;

    auto integrand = [&](double y) {
        const double y2 = y * y;
        const double lf = detail::log_sum_exp(log_p + log_norm_wide - y2 / (2.0 * var_wide),
                                              log_q + log_norm_unit - 0.5 * y2);
        return -std::exp(lf) * lf;
    };

    quad::Options opt;
    opt.abs_tol = 5e-12;
    opt.rel_tol = 1e-12;
    const double hi = 40.0 * std::sqrt(var_wide);
    const auto res = quad::integrate_adaptive(integrand, quad::geometric_breakpoints(0.5, hi), opt);

    const double h_out = 2.0 * res.value;                          // output entropy, even integrand
    const double h_noise = 0.5 * (detail::kLogTwoPi + 1.0);        // (1/2) ln(2 pi e)
    return std::max(h_out - h_noise, 0.0);
}

inline double mutual_information(const SparseGaussianPrior& prior, const ScalarChannel& channel) {
    return mutual_information(prior, channel.snr_eff);
}

/// Leading low-noise term p/s of the MMSE; asymptotic cross-checks only.
inline double mmse_low_noise_approx(const SparseGaussianPrior& prior, double s) {
    if (!(s > 0.0) || !std::isfinite(s)) throw std::domain_error("mmse_low_noise_approx: s must be positive");
    return prior.p / s;
}

}  // namespace csregions::prior
