#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "csregions/prior.hpp"
#include "csregions/tanaka.hpp"

namespace csregions::amp {

struct AmpConfig {
    int max_iters = 200;
    double tol = 1e-6;      // relative change of the estimate
    double damping = 0.0;   // 0 = vanilla recursion

    void validate() const {
        if (max_iters < 1) throw std::domain_error("AmpConfig: max_iters must be >= 1");
        if (!(tol > 0.0)) throw std::domain_error("AmpConfig: tol must be positive");
        if (!(damping >= 0.0) || !(damping <= 1.0)) throw std::domain_error("AmpConfig: damping must lie in [0, 1]");
    }
};

struct AmpTrace {
    std::vector<double> effective_noise_var;  // variance fed to the denoiser at each iteration
    std::vector<double> empirical_mse;        // against ground truth; empty when truth not supplied
};

struct AmpResult {
    Eigen::VectorXd estimate;
    AmpTrace trace;
    int iterations = 0;
    bool converged = false;
};

/// AMP reconstruction for y = sqrt(gamma) * A x + z with z ~ N(0, I) and A
/// having i.i.d. N(0, 1/N) entries (unit-norm rows in expectation, so the
/// per-measurement SNR is gamma * p). The measurement is rescaled once to
/// y/sqrt(gamma) = A x + w, w ~ N(0, 1/gamma), and the recursion iterates a
/// matched-filter step with Onsager correction, the Bayes-optimal scalar
/// denoiser at the current effective noise level, and the variance update
/// nu^2 = (mean posterior variance + 1/gamma) / R, whose fixed point is the
/// fixed-point equation of the tanaka module.
inline AmpResult amp_reconstruct(const Eigen::VectorXd& y, const Eigen::MatrixXd& A, double gamma,
                                 const prior::SparseGaussianPrior& signal_prior, const AmpConfig& cfg = {},
                                 const Eigen::VectorXd* truth = nullptr) {
    cfg.validate();
    if (A.rows() != y.size()) throw std::domain_error("amp_reconstruct: y length must equal rows of A");
    if (A.rows() < 1 || A.cols() < 1) throw std::domain_error("amp_reconstruct: A must be nonempty");
    if (truth != nullptr && truth->size() != A.cols())
        throw std::domain_error("amp_reconstruct: truth length must equal cols of A");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::domain_error("amp_reconstruct: gamma must be positive");

    const auto m = A.rows();
    const auto n = A.cols();
    const double rate = static_cast<double>(m) / static_cast<double>(n);
    const double p = signal_prior.p;
    const double inv_gamma = 1.0 / gamma;

    const Eigen::VectorXd y_scaled = y / std::sqrt(gamma);

    Eigen::VectorXd estimate = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd residual = y_scaled;
    Eigen::VectorXd pseudo(n), denoised(n);
    double avg_var = p;
    double noise_var = (p + inv_gamma) / rate;

    AmpResult result;
    result.estimate = estimate;

    // runaway-norm cutoff: healthy estimates stay near the signal norm sqrt(n*p)
    const double norm_cutoff = 1e6 * std::sqrt(static_cast<double>(n) * p + 1.0);

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        pseudo.noalias() = A.transpose() * residual;
        pseudo = estimate + pseudo / rate;

        double var_sum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto stats = prior::posterior_mean_var(signal_prior, pseudo[i], noise_var);
            denoised[i] = stats.mean;
            var_sum += stats.var;
        }
        double new_avg_var = var_sum / static_cast<double>(n);

        if (cfg.damping > 0.0) {
            denoised = (1.0 - cfg.damping) * denoised + cfg.damping * estimate;
            new_avg_var = (1.0 - cfg.damping) * new_avg_var + cfg.damping * avg_var;
        }

        const double diff_norm = (denoised - estimate).norm();
        const double scale = std::max(denoised.norm(), 1e-12);

        // divergence guards run before the state commits, so the caller gets
        // the last sane estimate back
        if (!std::isfinite(scale) || !std::isfinite(new_avg_var) || new_avg_var > 10.0 * p ||
            scale > norm_cutoff) {
            result.converged = false;
            break;
        }

        const double onsager = new_avg_var / (rate * noise_var);
        residual = y_scaled - A * denoised + onsager * residual;

        result.trace.effective_noise_var.push_back(noise_var);
        estimate.swap(denoised);
        avg_var = new_avg_var;
        noise_var = (avg_var + inv_gamma) / rate;
        result.iterations = iter + 1;

        if (truth != nullptr) result.trace.empirical_mse.push_back((estimate - *truth).squaredNorm() / n);

        if (diff_norm < cfg.tol * scale) {
            result.converged = true;
            break;
        }
    }

    result.estimate = estimate;
    return result;
}

struct StateEvolutionResult {
    std::vector<double> trajectory;  // eta_0, eta_1, ... including the limit
    tanaka::FixedPoint limit;        // nearest fixed point to the final eta
    double limit_eta = 0.0;          // final iterate of the recursion itself
    bool matched = false;            // |limit_eta - limit.eta| <= 1e-6
};

/// Deterministic scalar recursion tracking AMP's large-system behavior:
/// eta_{t+1} = 1 / (1 + gamma * MMSE(p, eta_t * gamma * R)) from the
/// zero-knowledge start eta_0 = 1 / (1 + gamma * p). The sequence is monotone
/// nondecreasing and converges to the smallest fixed point at or above eta_0;
/// the returned FixedPoint is the nearest member of find_fixed_points, with
/// a mismatch beyond 1e-6 reported via the matched flag.
inline StateEvolutionResult state_evolution(const tanaka::ChannelSpec& spec, const AmpConfig& cfg = {}) {
    cfg.validate();
    const auto signal_prior = spec.signal_prior();
    const int max_steps = cfg.max_iters * 10;

    StateEvolutionResult result;
    double eta = 1.0 / (1.0 + spec.gamma * spec.p);
    result.trajectory.push_back(eta);
    for (int t = 0; t < max_steps; ++t) {
        const double mmse = prior::scalar_mmse(signal_prior, eta * spec.gamma * spec.rate);
        const double next = 1.0 / (1.0 + spec.gamma * mmse);
        result.trajectory.push_back(next);
        const bool done = std::abs(next - eta) < 1e-12;
        eta = next;
        if (done) break;
    }
    result.limit_eta = eta;

    const auto fps = tanaka::find_fixed_points(spec);
    std::size_t nearest = 0;
    for (std::size_t i = 1; i < fps.size(); ++i)
        if (std::abs(fps[i].eta - eta) < std::abs(fps[nearest].eta - eta)) nearest = i;
    result.limit = fps[nearest];
    result.matched = std::abs(result.limit.eta - eta) <= 1e-6;
    return result;
}

}  // namespace csregions::amp
