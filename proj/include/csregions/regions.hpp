#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "csregions/par.hpp"
#include "csregions/tanaka.hpp"

namespace csregions::regions {

/// Minimal measurement rate for finite noise sensitivity. For the sparse
/// Gaussian prior with sparsity rate p this is exactly p.
inline double robust_threshold(double p) {
    if (!(p > 0.0) || !(p <= 1.0)) throw std::domain_error("robust_threshold: p must lie in (0, 1]");
    return p;
}

struct ThresholdSet {
    double gamma;
    double r_robust;
    std::optional<double> r_consistency;  // R_c: lower edge of the three-fixed-point band
    std::optional<double> r_low_noise;    // R_l: free-energy branch switch inside the band
    std::optional<double> r_bp;           // R_bp: upper edge of the band
};

enum class Region { unrobust, region1, region2, region3, region4, region5 };

inline const char* to_string(Region r) {
    switch (r) {
        case Region::unrobust: return "unrobust";
        case Region::region1: return "region1";
        case Region::region2: return "region2";
        case Region::region3: return "region3";
        case Region::region4: return "region4";
        case Region::region5: return "region5";
    }
    return "?";
}

struct RegionLabel {
    Region region;
    int fixed_point_count;
    tanaka::Branch selected_branch;
};

namespace detail {

constexpr double kRateScanStep = 1e-3;
constexpr double kRateBisectTol = 1e-5;

inline int fixed_point_count(double p, double gamma, double rate) {
    return static_cast<int>(tanaka::detail::scan_fixed_points(tanaka::ChannelSpec(p, gamma, rate)).size());
}

// Bisection on a boolean predicate over R; pred(lo) != pred(hi) on entry.
template <class Pred>
double bisect_predicate(Pred&& pred, double lo, double hi, bool value_lo) {
    while (hi - lo > kRateBisectTol) {
        const double mid = 0.5 * (lo + hi);
        if (!(lo < mid && mid < hi)) break;
        if (pred(mid) == value_lo)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Maximal R-interval in (p, 1) with three fixed points at this gamma, i.e.
/// (R_c(gamma), R_bp(gamma)). Located by a 1e-3 scan over R with both edges
/// refined by bisection on the fixed-point-count predicate to 1e-5. Absent
/// when no rate yields three fixed points.
inline std::optional<std::pair<double, double>> three_fp_band(double p, double gamma, int threads = 0) {
    if (!(p > 0.0) || !(p <= 1.0)) throw std::domain_error("three_fp_band: p must lie in (0, 1]");
    if (!(gamma > 0.0)) throw std::domain_error("three_fp_band: gamma must be positive");

    std::vector<double> rates;
    for (double r = p + detail::kRateScanStep; r < 1.0 - 1e-12; r += detail::kRateScanStep) rates.push_back(r);
    if (rates.empty()) return std::nullopt;

    std::vector<char> has_three(rates.size(), 0);
    par::parallel_for_index(rates.size(), [&](std::size_t i) {
        has_three[i] = detail::fixed_point_count(p, gamma, rates[i]) == 3 ? 1 : 0;
    }, threads);

    std::size_t first = rates.size(), last = rates.size();
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (has_three[i]) {
            if (first == rates.size()) first = i;
            last = i;
        }
    }
    if (first == rates.size()) return std::nullopt;

    auto pred = [&](double r) { return detail::fixed_point_count(p, gamma, r) == 3; };
    double lo = rates[first];
    if (first > 0)
        lo = detail::bisect_predicate(pred, rates[first - 1], rates[first], false);
    else if (rates[first] - detail::kRateScanStep > p)
        lo = detail::bisect_predicate(pred, rates[first] - detail::kRateScanStep, rates[first], false);

    double hi = rates[last];
    if (last + 1 < rates.size())
        hi = detail::bisect_predicate(pred, rates[last], rates[last + 1], true);
    else if (rates[last] + detail::kRateScanStep < 1.0)
        hi = detail::bisect_predicate(pred, rates[last], rates[last] + detail::kRateScanStep, true);

    return std::make_pair(lo, hi);
}

/// Rate inside the band at which the free-energy minimizer switches from the
/// smallest branch (below) to the largest (above); bisected to 1e-5. Returns
/// the nearest band edge when the switch sits at (or beyond) an edge, and
/// nothing when the band itself is absent.
inline std::optional<double> low_noise_threshold(double p, double gamma, int threads = 0,
                                                 std::optional<std::pair<double, double>> band = std::nullopt,
                                                 tanaka::EnergyBase base = tanaka::EnergyBase::nats) {
    if (!band.has_value()) band = three_fp_band(p, gamma, threads);
    if (!band.has_value()) return std::nullopt;

    auto selects_largest = [&](double r) {
        return tanaka::solve(tanaka::ChannelSpec(p, gamma, r), base).selected.branch == tanaka::Branch::largest;
    };
    const double lo = band->first + detail::kRateBisectTol;
    const double hi = band->second - detail::kRateBisectTol;
    if (!(lo < hi)) return band->first;  // degenerate sliver of a band
    if (selects_largest(lo)) return lo;
    if (!selects_largest(hi)) return hi;
    return detail::bisect_predicate(selects_largest, lo, hi, false);
}

/// All four thresholds at one gamma.
inline ThresholdSet thresholds(double p, double gamma, int threads = 0,
                               tanaka::EnergyBase base = tanaka::EnergyBase::nats) {
    ThresholdSet set;
    set.gamma = gamma;
    set.r_robust = robust_threshold(p);
    const auto band = three_fp_band(p, gamma, threads);
    if (band.has_value()) {
        set.r_consistency = band->first;
        set.r_bp = band->second;
        set.r_low_noise = low_noise_threshold(p, gamma, threads, band, base);
    }
    return set;
}

namespace detail {

// Fixed points in s = eta*gamma*R space satisfy T(s) + s/gamma = R with
// T(s) = s * MMSE(p, s), which is independent of gamma and R. Three fixed
// points exist exactly when R lies between the local minimum and local
// maximum of F(s) = T(s) + s/gamma, so band edges are the two extremal
// values of F. This route backs the classifier's reference grid; the
// scan-based three_fp_band above stays the authoritative per-query path and
// the two are cross-checked in the tests.
class SnrCurve {
public:
    explicit SnrCurve(double p) : prior_(p) {
        double s = 1e-2;
        while (s < 1e7) {
            grid_.push_back(s);
            s *= 1.01;
        }
        values_.resize(grid_.size());
        for (std::size_t i = 0; i < grid_.size(); ++i) values_[i] = grid_[i] * prior::scalar_mmse(prior_, grid_[i]);
    }

    double operator()(double s) const { return s * prior::scalar_mmse(prior_, s); }

    /// Band edges (R_c, R_bp) at gamma, or nothing when F is monotone.
    std::optional<std::pair<double, double>> band(double gamma) const {
        const double inv_gamma = 1.0 / gamma;
        auto f_grid = [&](std::size_t i) { return values_[i] + grid_[i] * inv_gamma; };
        auto f = [&](double s) { return (*this)(s) + s * inv_gamma; };

        std::optional<double> peak, dip;
        for (std::size_t i = 1; i + 1 < grid_.size(); ++i) {
            const double fm = f_grid(i - 1), fc = f_grid(i), fp = f_grid(i + 1);
            if (fc > fm && fc > fp) {
                const double v = refine_extremum(f, grid_[i - 1], grid_[i + 1], true);
                peak = peak ? std::max(*peak, v) : v;
            } else if (fc < fm && fc < fp && peak.has_value()) {
                const double v = refine_extremum(f, grid_[i - 1], grid_[i + 1], false);
                dip = dip ? std::min(*dip, v) : v;
            }
        }
        if (!peak || !dip || !(*dip < *peak)) return std::nullopt;
        return std::make_pair(*dip, *peak);
    }

private:
    template <class F>
    static double refine_extremum(F&& f, double lo, double hi, bool maximize) {
        const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
        double a = lo, b = hi;
        double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
        double f1 = f(x1), f2 = f(x2);
        while ((b - a) > 1e-9 * (1.0 + b)) {
            const bool keep_left = maximize ? (f1 > f2) : (f1 < f2);
            if (keep_left) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = f(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = f(x2);
            }
        }
        return maximize ? std::max(f1, f2) : std::min(f1, f2);
    }

    prior::SparseGaussianPrior prior_;
    std::vector<double> grid_;
    std::vector<double> values_;
};

}  // namespace detail

/// Classifies (rate, gamma) points against a fixed sparsity rate. The
/// reference grid of band edges (10-80 dB in 1 dB steps by default) is built
/// once at construction and read-only afterwards, so classify() is safe to
/// call concurrently.
class RegionClassifier {
public:
    explicit RegionClassifier(double p, int threads = 0, std::vector<double> ref_gammas_db = default_ref_grid())
        : p_(robust_threshold(p)), ref_gammas_db_(std::move(ref_gammas_db)), curve_(p) {
        ref_bands_.resize(ref_gammas_db_.size());
        par::parallel_for_index(ref_gammas_db_.size(), [&](std::size_t i) {
            ref_bands_[i] = curve_.band(std::pow(10.0, ref_gammas_db_[i] / 10.0));
        }, threads);
        for (const auto& band : ref_bands_)
            if (band.has_value()) sup_r_bp_ = std::max(sup_r_bp_.value_or(0.0), band->second);
    }

    static std::vector<double> default_ref_grid() {
        std::vector<double> db;
        for (int v = 10; v <= 80; ++v) db.push_back(static_cast<double>(v));
        return db;
    }

    double sparsity() const { return p_; }
    std::optional<double> sup_r_bp() const { return sup_r_bp_; }

    /// Band edges at an arbitrary gamma via the reference curve (not the
    /// scan-based operation); exposed for cross-checks.
    std::optional<std::pair<double, double>> band_edges(double gamma) const { return curve_.band(gamma); }

    RegionLabel classify(double rate, double gamma) const {
        return classify(rate, gamma, tanaka::solve(tanaka::ChannelSpec(p_, gamma, rate)));
    }

    /// Classification reusing an already-computed solve of the same point.
    RegionLabel classify(double rate, double gamma, const tanaka::SolveResult& sol) const {
        RegionLabel label;
        label.fixed_point_count = static_cast<int>(sol.all.size());
        label.selected_branch = sol.selected.branch;
        label.region = region_of(rate, gamma, sol, 0);
        return label;
    }

private:
    Region region_of(double rate, double gamma, const tanaka::SolveResult& sol, int depth) const {
        if (rate <= p_) return Region::unrobust;
        const int count = static_cast<int>(sol.all.size());
        if (count >= 3)
            return sol.selected.branch == tanaka::Branch::largest ? Region::region3 : Region::region2;
        if (count == 2) {
            // degenerate threshold point: adopt the nearest interior label
            if (depth >= 2) return Region::region4;
            for (double nudged : {rate + 2 * detail::kRateBisectTol, rate - 2 * detail::kRateBisectTol}) {
                if (!(nudged > p_ && nudged < 1.0)) continue;
                const auto s = tanaka::solve(tanaka::ChannelSpec(p_, gamma, nudged));
                if (s.all.size() != 2) return region_of(nudged, gamma, s, depth + 1);
            }
            const auto s = tanaka::solve(tanaka::ChannelSpec(p_, gamma * 1.01, rate));
            return region_of(rate, gamma * 1.01, s, depth + 1);
        }

        // single fixed point: high-measurement regime sits above every
        // reference R_bp; otherwise split Regions 4 and 5 by where gamma sits
        // relative to the gamma-interval in which this rate has three fixed
        // points.
        if (!sup_r_bp_.has_value() || rate >= *sup_r_bp_ - 1e-12) return Region::region1;
        double gamma_lo = -1.0, gamma_hi = -1.0;
        for (std::size_t i = 0; i < ref_bands_.size(); ++i) {
            const auto& band = ref_bands_[i];
            if (!band.has_value()) continue;
            if (rate > band->first && rate < band->second) {
                const double g = std::pow(10.0, ref_gammas_db_[i] / 10.0);
                if (gamma_lo < 0.0) gamma_lo = g;
                gamma_hi = g;
            }
        }
        if (gamma_lo < 0.0) return Region::region4;  // band never reaches this rate
        if (gamma < gamma_lo) return Region::region4;
        if (gamma > gamma_hi) return Region::region5;
        // inside the reference interval yet a single fixed point: resolve by
        // the nearer end
        return (std::log(gamma) - std::log(gamma_lo) < std::log(gamma_hi) - std::log(gamma))
                   ? Region::region4
                   : Region::region5;
    }

    double p_;
    std::vector<double> ref_gammas_db_;
    detail::SnrCurve curve_;
    std::vector<std::optional<std::pair<double, double>>> ref_bands_;
    std::optional<double> sup_r_bp_;
};

/// One-off classification; builds a fresh classifier. Sweeps should construct
/// a RegionClassifier once and reuse it.
inline RegionLabel classify(double p, double rate, double gamma, int threads = 0) {
    return RegionClassifier(p, threads).classify(rate, gamma);
}

struct RbpRow {
    double p;
    std::optional<double> r_bp;
};

/// Upper band edge as a function of sparsity rate at a fixed reference gamma
/// (the band converges as gamma grows; a large finite gamma approximates the
/// limit). Rows sorted by p; absent band leaves the row's r_bp empty.
inline std::vector<RbpRow> rbp_vs_sparsity(std::vector<double> p_list, double gamma_ref = 1e7, int threads = 0) {
    if (p_list.empty()) throw std::domain_error("rbp_vs_sparsity: p_list must be nonempty");
    if (!(gamma_ref > 0.0)) throw std::domain_error("rbp_vs_sparsity: gamma_ref must be positive");
    std::sort(p_list.begin(), p_list.end());
    std::vector<RbpRow> rows;
    rows.reserve(p_list.size());
    for (double p : p_list) {
        const auto band = three_fp_band(p, gamma_ref, threads);
        rows.push_back(RbpRow{p, band.has_value() ? std::optional<double>(band->second) : std::nullopt});
    }
    return rows;
}

}  // namespace csregions::regions
