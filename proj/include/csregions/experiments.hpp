#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "csregions/amp.hpp"
#include "csregions/par.hpp"
#include "csregions/regions.hpp"
#include "csregions/rng.hpp"
#include "csregions/tanaka.hpp"

namespace csregions::experiments {

inline double db_to_gamma(double db) { return std::pow(10.0, db / 10.0); }

struct ExperimentConfig {
    double p = 0.1;
    int n = 10000;
    std::vector<double> rates;
    std::vector<double> gammas_db;
    int trials = 100;
    std::uint64_t seed = 0;
    amp::AmpConfig amp_cfg;
    bool normalize_rows = false;  // exact unit-norm rows instead of in-expectation
    int threads = 0;              // 0 = hardware concurrency

    void validate() const {
        if (!(p > 0.0) || !(p <= 1.0)) throw std::domain_error("ExperimentConfig: p must lie in (0, 1]");
        if (n < 100) throw std::domain_error("ExperimentConfig: n must be >= 100");
        if (trials < 1) throw std::domain_error("ExperimentConfig: trials must be >= 1");
        if (rates.empty() || gammas_db.empty())
            throw std::domain_error("ExperimentConfig: rates and gammas_db must be nonempty");
        for (double r : rates)
            if (!(r > 0.0) || !(r < 1.0)) throw std::domain_error("ExperimentConfig: rates must lie in (0, 1)");
        amp_cfg.validate();
    }
};

struct TrialResult {
    double empirical_mse = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct ComparisonRow {
    double rate;
    double gamma_db;
    double mean_mse;
    double std_err;
    double tanaka_mmse;        // free-energy-selected fixed point
    double smallest_fp_mmse;   // MMSE of the smallest-eta fixed point
    regions::RegionLabel region;
    int nonconverged_trials;
};

/// One reconstruction trial: draw the signal, the N(0, 1/N) measurement
/// matrix and unit-variance noise from a stream keyed on
/// (seed, rate index, gamma index, trial index), run AMP, report the
/// empirical MSE. Bit-reproducible for a fixed config.
inline TrialResult run_trial(const ExperimentConfig& cfg, std::size_t rate_idx, std::size_t gamma_idx,
                             int trial_idx) {
    cfg.validate();
    if (rate_idx >= cfg.rates.size() || gamma_idx >= cfg.gammas_db.size() || trial_idx < 0 ||
        trial_idx >= cfg.trials)
        throw std::domain_error("run_trial: index out of range");

    const double rate = cfg.rates[rate_idx];
    const double gamma = db_to_gamma(cfg.gammas_db[gamma_idx]);
    const auto n = static_cast<Eigen::Index>(cfg.n);
    const auto m = static_cast<Eigen::Index>(std::llround(rate * cfg.n));
    if (m < 1) throw std::domain_error("run_trial: rate * n rounds to zero measurements");

    rng::Stream stream(rng::derive_seed(cfg.seed, rate_idx, gamma_idx, static_cast<std::uint64_t>(trial_idx)));
    const prior::SparseGaussianPrior signal_prior(cfg.p);

    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = (stream.uniform() < cfg.p) ? stream.normal() : 0.0;

    const double entry_scale = 1.0 / std::sqrt(static_cast<double>(n));
    Eigen::MatrixXd A(m, n);
    for (Eigen::Index r = 0; r < m; ++r)
        for (Eigen::Index c = 0; c < n; ++c) A(r, c) = entry_scale * stream.normal();
    if (cfg.normalize_rows)
        for (Eigen::Index r = 0; r < m; ++r) A.row(r) /= A.row(r).norm();

    Eigen::VectorXd y(m);
    y.noalias() = std::sqrt(gamma) * (A * x);
    for (Eigen::Index r = 0; r < m; ++r) y[r] += stream.normal();

    const auto res = amp::amp_reconstruct(y, A, gamma, signal_prior, cfg.amp_cfg, &x);
    TrialResult trial;
    trial.empirical_mse = (res.estimate - x).squaredNorm() / static_cast<double>(n);
    trial.iterations = res.iterations;
    trial.converged = res.converged;
    return trial;
}

/// Full grid: every (rate, gamma) cell runs cfg.trials independent trials,
/// aggregated into mean and standard error and paired with the fixed-point
/// predictions and region label. Rows ordered by (rate, gamma_db) following
/// the config lists; trials execute in parallel but land in indexed slots,
/// so the output is a pure function of the config.
inline std::vector<ComparisonRow> run_grid(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::size_t n_cells = cfg.rates.size() * cfg.gammas_db.size();
    const std::size_t n_tasks = n_cells * static_cast<std::size_t>(cfg.trials);

    std::vector<TrialResult> results(n_tasks);
    par::parallel_for_index(n_tasks, [&](std::size_t task) {
        const std::size_t cell = task / cfg.trials;
        const int trial = static_cast<int>(task % cfg.trials);
        const std::size_t rate_idx = cell / cfg.gammas_db.size();
        const std::size_t gamma_idx = cell % cfg.gammas_db.size();
        results[task] = run_trial(cfg, rate_idx, gamma_idx, trial);
    }, cfg.threads);

    const regions::RegionClassifier classifier(cfg.p, cfg.threads);

    std::vector<ComparisonRow> rows;
    rows.reserve(n_cells);
    for (std::size_t rate_idx = 0; rate_idx < cfg.rates.size(); ++rate_idx) {
        for (std::size_t gamma_idx = 0; gamma_idx < cfg.gammas_db.size(); ++gamma_idx) {
            const std::size_t cell = rate_idx * cfg.gammas_db.size() + gamma_idx;
            double mean = 0.0;
            int nonconverged = 0;
            for (int t = 0; t < cfg.trials; ++t) {
                const auto& trial = results[cell * cfg.trials + t];
                mean += trial.empirical_mse;
                if (!trial.converged) ++nonconverged;
            }
            mean /= cfg.trials;
            double sq_dev = 0.0;
            for (int t = 0; t < cfg.trials; ++t) {
                const double d = results[cell * cfg.trials + t].empirical_mse - mean;
                sq_dev += d * d;
            }
            const double std_err =
                cfg.trials > 1 ? std::sqrt(sq_dev / (cfg.trials - 1)) / std::sqrt(static_cast<double>(cfg.trials))
                               : 0.0;

            const double gamma = db_to_gamma(cfg.gammas_db[gamma_idx]);
            const tanaka::ChannelSpec spec(cfg.p, gamma, cfg.rates[rate_idx]);
            const auto sol = tanaka::solve(spec);

            ComparisonRow row;
            row.rate = cfg.rates[rate_idx];
            row.gamma_db = cfg.gammas_db[gamma_idx];
            row.mean_mse = mean;
            row.std_err = std_err;
            row.tanaka_mmse = sol.selected.mmse;
            row.smallest_fp_mmse = sol.all.front().mmse;
            row.region = classifier.classify(cfg.rates[rate_idx], gamma);
            row.nonconverged_trials = nonconverged;
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace csregions::experiments
