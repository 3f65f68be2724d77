#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "csregions/par.hpp"
#include "csregions/prior.hpp"

namespace csregions::tanaka {

/// Vector-channel problem instance in the large system limit: sparsity rate p,
/// inverse noise level gamma (linear, not dB), measurement rate R = M/N.
struct ChannelSpec {
    double p;
    double gamma;
    double rate;

    ChannelSpec(double p_, double gamma_, double rate_) : p(p_), gamma(gamma_), rate(rate_) {
        if (!(p > 0.0) || !(p <= 1.0) || !std::isfinite(p))
            throw std::domain_error("ChannelSpec: p must lie in (0, 1]");
        if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::domain_error("ChannelSpec: gamma must be positive");
        if (!(rate > 0.0) || !(rate < 1.0)) throw std::domain_error("ChannelSpec: rate must lie in (0, 1)");
    }

    prior::SparseGaussianPrior signal_prior() const { return prior::SparseGaussianPrior(p); }

    /// Equivalent scalar channel at degradation eta: SNR coefficient eta*gamma*R.
    prior::ScalarChannel scalar_channel(double eta) const { return prior::ScalarChannel(eta * gamma * rate); }
};

enum class Branch { smallest, middle, largest };

inline const char* to_string(Branch b) {
    switch (b) {
        case Branch::smallest: return "smallest";
        case Branch::middle: return "middle";
        case Branch::largest: return "largest";
    }
    return "?";
}

/// Base convention for the free energy. The literature's form mixes natural
/// logs in the mutual information with a base-2 log in the eta bracket; an
/// argmin over a mixed-base objective depends on units, so the default here
/// is the unit-consistent nats form. `mixed` reproduces the literal formula
/// for comparison.
enum class EnergyBase { nats, mixed };

inline const char* to_string(EnergyBase b) { return b == EnergyBase::nats ? "nats" : "mixed"; }

/// One solution eta of the fixed-point equation 1/eta = 1 + gamma * MMSE(p, eta*gamma*R).
struct FixedPoint {
    double eta;
    double a;            // eta * gamma
    double mmse;         // scalar MMSE at snr_eff = eta * gamma * R
    double free_energy;  // E(eta), nats by default
    Branch branch;       // position among coexisting fixed points, ascending eta
    bool degenerate = false;  // tangency double root at a threshold
};

/// Root form of the fixed-point equation: g(eta) = 1 - eta - eta*gamma*MMSE(p, eta*gamma*R).
/// g(eta*) = 0 exactly at the fixed points; g -> 1 as eta -> 0+ and g(1) < 0.
inline double tanaka_residual(const ChannelSpec& spec, double eta) {
    if (!(eta > 0.0) || !(eta <= 1.0)) throw std::domain_error("tanaka_residual: eta must lie in (0, 1]");
    const double mmse = prior::scalar_mmse(spec.signal_prior(), eta * spec.gamma * spec.rate);
    return 1.0 - eta - eta * spec.gamma * mmse;
}

/// Free energy E(eta) = I(x; sqrt(eta*gamma*R) x + z) + (R/2)(eta - 1 - ln eta),
/// in nats. EnergyBase::mixed swaps ln eta for log2 eta to match the literal
/// mixed-base formula.
inline double free_energy(const ChannelSpec& spec, double eta, EnergyBase base = EnergyBase::nats) {
    if (!(eta > 0.0) || !(eta <= 1.0)) throw std::domain_error("free_energy: eta must lie in (0, 1]");
    const double info = prior::mutual_information(spec.signal_prior(), spec.scalar_channel(eta));
    const double log_eta = (base == EnergyBase::nats) ? std::log(eta) : std::log2(eta);
    return info + 0.5 * spec.rate * (eta - 1.0 - log_eta);
}

namespace detail {

// Scan grid in eta: logarithmic over (1e-9, 1e-2], linear over (1e-2, 1].
// The log half resolves small-eta fixed points of the form a/gamma, which sit
// near 1e-8 at 70 dB; a pure linear grid misses them.
inline const std::vector<double>& eta_scan_grid() {
    static const std::vector<double> grid = [] {
        std::vector<double> g;
        const int n_log = 2000, n_lin = 2000;
        g.reserve(n_log + n_lin);
        const double lo = 1e-9, mid = 1e-2;
        for (int i = 0; i < n_log; ++i) g.push_back(lo * std::pow(mid / lo, static_cast<double>(i) / (n_log - 1)));
        for (int i = 1; i <= n_lin; ++i) g.push_back(mid + (1.0 - mid) * static_cast<double>(i) / n_lin);
        return g;
    }();
    return grid;
}

constexpr double kEtaBisectTol = 1e-12;
constexpr double kTangencyTol = 1e-9;

struct RawRoot {
    double eta;
    bool degenerate;
};

template <class G>
double bisect_root(G&& g, double lo, double hi, double g_lo) {
    // invariant: sign change inside [lo, hi]. The absolute width target is
    // 1e-12; small roots additionally need width proportional to eta, since
    // the residual in the 1/eta form scales like width / eta^2.
    while (hi - lo > std::min(kEtaBisectTol, 1e-9 * lo)) {
        const double mid = 0.5 * (lo + hi);
        if (!(lo < mid && mid < hi)) break;
        const double g_mid = g(mid);
        if (g_mid == 0.0) return mid;
        if ((g_lo > 0.0) == (g_mid > 0.0)) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

template <class G>
double ternary_min_abs(G&& g, double lo, double hi) {
    while (hi - lo > kEtaBisectTol) {
        const double m1 = lo + (hi - lo) / 3.0;
        const double m2 = hi - (hi - lo) / 3.0;
        if (!(lo < m1 && m1 < m2 && m2 < hi)) break;
        if (std::abs(g(m1)) <= std::abs(g(m2)))
            hi = m2;
        else
            lo = m1;
    }
    return 0.5 * (lo + hi);
}

/// Root locations only; the public find_fixed_points enriches them.
inline std::vector<RawRoot> scan_fixed_points(const ChannelSpec& spec) {
    const auto& grid = eta_scan_grid();
    const auto sig_prior = spec.signal_prior();
    auto g = [&](double eta) {
        return 1.0 - eta - eta * spec.gamma * prior::scalar_mmse(sig_prior, eta * spec.gamma * spec.rate);
    };

    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) values[i] = g(grid[i]);

    std::vector<RawRoot> roots;
    std::vector<std::size_t> crossing_idx;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        if (values[i] == 0.0) {
            roots.push_back({grid[i], false});
            crossing_idx.push_back(i);
        } else if ((values[i] > 0.0) != (values[i + 1] > 0.0)) {
            roots.push_back({bisect_root(g, grid[i], grid[i + 1], values[i]), false});
            crossing_idx.push_back(i);
        }
    }
    if (values.back() == 0.0) {
        roots.push_back({grid.back(), false});
        crossing_idx.push_back(grid.size() - 1);
    }

    // Tangency: |g| dips below the threshold at a local minimum without a sign
    // change nearby; report the minimizer once, flagged degenerate.
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        if (std::abs(values[i]) >= kTangencyTol) continue;
        if (std::abs(values[i - 1]) < std::abs(values[i]) || std::abs(values[i + 1]) < std::abs(values[i])) continue;
        bool near_crossing = false;
        for (std::size_t c : crossing_idx)
            if (i <= c + 2 && c <= i + 2) near_crossing = true;
        if (near_crossing) continue;
        roots.push_back({ternary_min_abs(g, grid[i - 1], grid[i + 1]), true});
    }

    std::sort(roots.begin(), roots.end(), [](const RawRoot& x, const RawRoot& y) { return x.eta < y.eta; });
    // merge numerically coincident roots
    std::vector<RawRoot> merged;
    for (const auto& r : roots) {
        if (!merged.empty() && r.eta - merged.back().eta < 1e-9 * (1.0 + r.eta))
            merged.back().degenerate = merged.back().degenerate || r.degenerate;
        else
            merged.push_back(r);
    }
    if (merged.empty())
        throw std::logic_error("find_fixed_points: no fixed point found; g(0+) > 0 and g(1) < 0 guarantee one");
    return merged;
}

inline Branch branch_of(std::size_t index, std::size_t count) {
    if (count == 1) return Branch::largest;
    if (index == 0) return Branch::smallest;
    if (index + 1 == count) return Branch::largest;
    return Branch::middle;
}

}  // namespace detail

/// All fixed points of the spec, ascending in eta, found by a sign-change scan
/// over a 4000-point grid (log over (1e-9, 1e-2], linear over (1e-2, 1]) with
/// each bracket bisected to |d eta| <= 1e-12. Tangencies are reported as a
/// single fixed point flagged degenerate.
inline std::vector<FixedPoint> find_fixed_points(const ChannelSpec& spec, EnergyBase base = EnergyBase::nats) {
    const auto raw = detail::scan_fixed_points(spec);
    const auto sig_prior = spec.signal_prior();
    std::vector<FixedPoint> out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        FixedPoint fp;
        fp.eta = raw[i].eta;
        fp.a = raw[i].eta * spec.gamma;
        fp.mmse = prior::scalar_mmse(sig_prior, fp.eta * spec.gamma * spec.rate);
        fp.free_energy = free_energy(spec, fp.eta, base);
        fp.branch = detail::branch_of(i, raw.size());
        fp.degenerate = raw[i].degenerate;
        out.push_back(fp);
    }
    return out;
}

/// Large-gamma free-energy approximation for a labelled fixed point, converted
/// consistently to nats (the literature's mixed-base constants R/ln2 and
/// log2(gamma) become R and ln(gamma)). Cross-checks only; never used for
/// fixed-point selection.
inline double free_energy_asymptotic(const ChannelSpec& spec, const FixedPoint& fp) {
    const double p = spec.p, r = spec.rate, gamma = spec.gamma;
    if (fp.branch == Branch::largest) {
        if (!(r > p)) throw std::domain_error("free_energy_asymptotic: largest branch requires rate > p");
        return 0.5 * (p - r) * std::log1p(-p / r) + 0.5 * p * std::log(r / std::numbers::e) +
               0.5 * p * std::log(gamma);
    }
    const double a = fp.a;
    return 0.5 * (p - r) * std::log(a) + 0.5 * p * std::log(r) + 0.5 * r * a / gamma - 0.5 * r +
           0.5 * r * std::log(gamma);
}

struct SolveResult {
    FixedPoint selected;
    std::vector<FixedPoint> all;
    bool tie = false;  // free energies within 1e-9 nats; resolved toward larger eta
};

/// Finds every fixed point and selects the free-energy minimizer. Ties within
/// 1e-9 nats resolve toward the larger eta and set the tie flag.
inline SolveResult solve(const ChannelSpec& spec, EnergyBase base = EnergyBase::nats) {
    SolveResult res;
    res.all = find_fixed_points(spec, base);
    std::size_t best = 0;
    for (std::size_t i = 1; i < res.all.size(); ++i) {
        const double diff = res.all[i].free_energy - res.all[best].free_energy;
        if (std::abs(diff) < 1e-9) {
            res.tie = true;
            best = (res.all[i].eta > res.all[best].eta) ? i : best;
        } else if (diff < 0.0) {
            best = i;
        }
    }
    res.selected = res.all[best];
    return res;
}

struct SurfaceRow {
    double rate;
    double gamma;
    double mmse;
    int fixed_point_count;
    double eta;
};

/// Selected-MMSE surface over a (rate, gamma) grid, row-major with rate as the
/// outer loop. Cells are independent and evaluated in parallel; row order does
/// not depend on the execution schedule.
inline std::vector<SurfaceRow> mmse_surface(double p, const std::vector<double>& rate_grid,
                                            const std::vector<double>& gamma_grid,
                                            EnergyBase base = EnergyBase::nats, int threads = 0) {
    if (rate_grid.empty() || gamma_grid.empty()) throw std::domain_error("mmse_surface: grids must be nonempty");
    std::vector<SurfaceRow> rows(rate_grid.size() * gamma_grid.size());
    par::parallel_for_index(rows.size(), [&](std::size_t idx) {
        const std::size_t ri = idx / gamma_grid.size();
        const std::size_t gi = idx % gamma_grid.size();
        const ChannelSpec spec(p, gamma_grid[gi], rate_grid[ri]);
        const auto sol = solve(spec, base);
        rows[idx] = SurfaceRow{spec.rate, spec.gamma, sol.selected.mmse, static_cast<int>(sol.all.size()),
                               sol.selected.eta};
    }, threads);
    return rows;
}

}  // namespace csregions::tanaka
