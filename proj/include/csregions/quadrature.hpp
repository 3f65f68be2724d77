#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace csregions {

/// Thrown when an iterative numeric procedure cannot certify the requested
/// tolerance within its budget. Carries the tolerance actually achieved.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double requested, double achieved)
        : std::runtime_error(what + " (requested tolerance " + std::to_string(requested) +
                             ", achieved " + std::to_string(achieved) + ")"),
          requested_tolerance(requested),
          achieved_tolerance(achieved) {}

    double requested_tolerance;
    double achieved_tolerance;
};

namespace quad {

struct Options {
    double abs_tol = 1e-12;
    double rel_tol = 1e-13;
    int max_intervals = 2000;
};

struct Result {
    double value = 0.0;
    double error = 0.0;  // certified bound: sum of per-interval Kronrod-Gauss gaps
    int intervals = 0;
};

namespace detail {

// 15-point Kronrod nodes on [-1,1] (positive half) with weights, and the
// embedded 7-point Gauss weights. Standard QUADPACK dqk15 constants.
inline constexpr double kXgk[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691, 0.7415311855993944,
    0.5860872354676911, 0.4058451513773972, 0.2077849550078985, 0.0};
inline constexpr double kWgk[8] = {
    0.02293532201052922, 0.06309209262997855, 0.1047900103222502, 0.1406532597155259,
    0.1690047266392679,  0.1903505780647854,  0.2044329400752989, 0.2094821410847278};
inline constexpr double kWg[4] = {
    0.1294849661688697, 0.2797053914892767, 0.3818300505051189, 0.4179591836734694};

struct Segment {
    double a, b;
    double value;
    double error;
};

template <class F>
Segment gauss_kronrod_15(F&& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double result_kronrod = kWgk[7] * fc;
    double result_gauss = kWg[3] * fc;
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        const double fsum = f(center - dx) + f(center + dx);
        result_kronrod += kWgk[j] * fsum;
        if (j % 2 == 1) result_gauss += kWg[j / 2] * fsum;
    }
    return Segment{a, b, result_kronrod * half, std::abs(result_kronrod - result_gauss) * half};
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integration over the union of [breakpoints[i], breakpoints[i+1]].
/// Breakpoints must be finite and strictly increasing; callers seed them at the
/// integrand's known scales so the first pass already resolves every feature.
/// The worst segment is bisected until the summed error bound satisfies
/// max(abs_tol, rel_tol*|value|); failure to converge within max_intervals
/// raises NumericalError carrying the achieved bound.
template <class F>
Result integrate_adaptive(F&& f, const std::vector<double>& breakpoints, const Options& opt = {}) {
    if (breakpoints.size() < 2) throw std::invalid_argument("integrate_adaptive: need at least 2 breakpoints");
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        if (!(breakpoints[i] < breakpoints[i + 1]) || !std::isfinite(breakpoints[i + 1]) ||
            !std::isfinite(breakpoints[i]))
            throw std::invalid_argument("integrate_adaptive: breakpoints must be finite and increasing");
    }

    std::vector<detail::Segment> segs;
    segs.reserve(static_cast<std::size_t>(opt.max_intervals));
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
        segs.push_back(detail::gauss_kronrod_15(f, breakpoints[i], breakpoints[i + 1]));

    auto totals = [&segs]() {
        double v = 0.0, e = 0.0;
        for (const auto& s : segs) {
            v += s.value;
            e += s.error;
        }
        return std::pair<double, double>(v, e);
    };

    auto [value, error] = totals();
    while (true) {
        const double goal = std::max(opt.abs_tol, opt.rel_tol * std::abs(value));
        if (error <= goal) break;
        if (static_cast<int>(segs.size()) >= opt.max_intervals)
            throw NumericalError("quadrature failed to converge", goal, error);

        std::size_t worst = 0;
        for (std::size_t i = 1; i < segs.size(); ++i)
            if (segs[i].error > segs[worst].error) worst = i;

        const detail::Segment s = segs[worst];
        const double mid = 0.5 * (s.a + s.b);
        if (!(s.a < mid && mid < s.b))  // interval at floating-point resolution
            throw NumericalError("quadrature interval exhausted", goal, error);
        segs[worst] = detail::gauss_kronrod_15(f, s.a, mid);
        segs.push_back(detail::gauss_kronrod_15(f, mid, s.b));
        std::tie(value, error) = totals();
    }

    Result res;
    res.value = value;
    res.error = error;
    res.intervals = static_cast<int>(segs.size());
    return res;
}

/// Geometric ladder of breakpoints {0, lo, 2*lo, 4*lo, ..., hi} used to seed
/// integrands that mix a narrow inner scale with a wide Gaussian envelope.
inline std::vector<double> geometric_breakpoints(double lo, double hi) {
    if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("geometric_breakpoints: need 0 < lo < hi");
    std::vector<double> bps;
    bps.push_back(0.0);
    for (double t = lo; t < hi; t *= 2.0) bps.push_back(t);
    bps.push_back(hi);
    return bps;
}

}  // namespace quad
}  // namespace csregions
