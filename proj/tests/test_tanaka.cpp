#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "csregions/tanaka.hpp"

using namespace csregions;
using tanaka::Branch;
using tanaka::ChannelSpec;

TEST_CASE("ChannelSpec validation", "[tanaka]") {
    CHECK_THROWS_AS(ChannelSpec(0.0, 1.0, 0.5), std::domain_error);
    CHECK_THROWS_AS(ChannelSpec(0.1, 0.0, 0.5), std::domain_error);
    CHECK_THROWS_AS(ChannelSpec(0.1, 1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(ChannelSpec(0.1, 1.0, 0.0), std::domain_error);
}

TEST_CASE("Residual limits and root consistency", "[tanaka]") {
    const ChannelSpec gauss(1.0, 1.0, 0.5);
    const auto root = tanaka::solve(gauss).selected;
    CHECK(std::abs(tanaka::tanaka_residual(gauss, root.eta)) < 1e-11);

    // eta -> 0+ gives g -> 1 because eta*gamma*MMSE is bounded by eta*gamma*p
    CHECK(tanaka::tanaka_residual(ChannelSpec(0.1, 100.0, 0.3), 1e-9) == Catch::Approx(1.0).margin(1e-5));

    // the large-gamma fixed point sits near 1 - p/R; at 60 dB the residual
    // there is small but carries a visible finite-gamma correction
    CHECK(std::abs(tanaka::tanaka_residual(ChannelSpec(0.1, 1e6, 0.2), 0.5)) < 0.05);
    CHECK(std::abs(tanaka::tanaka_residual(ChannelSpec(0.1, 1e10, 0.2), 0.5)) < 0.005);

    CHECK_THROWS_AS(tanaka::tanaka_residual(gauss, 0.0), std::domain_error);
    CHECK_THROWS_AS(tanaka::tanaka_residual(gauss, 1.1), std::domain_error);
}

TEST_CASE("Fixed-point counts at known operating points", "[tanaka]") {
    CHECK(tanaka::find_fixed_points(ChannelSpec(0.1, 1e6, 0.22)).size() == 1);
    CHECK(tanaka::find_fixed_points(ChannelSpec(0.1, 1e3, 0.18)).size() == 1);

    const auto three = tanaka::find_fixed_points(ChannelSpec(0.1, 1e6, 0.18));
    REQUIRE(three.size() == 3);
    CHECK(three[0].branch == Branch::smallest);
    CHECK(three[1].branch == Branch::middle);
    CHECK(three[2].branch == Branch::largest);
    CHECK(three[2].eta == Catch::Approx(1.0 - 0.1 / 0.18).epsilon(0.10));
}

TEST_CASE("Every returned fixed point satisfies the residual invariant", "[tanaka]") {
    for (double p : {0.05, 0.1, 0.2}) {
        for (double rate : {p + 0.01, p + 0.05, 0.3, 0.5}) {
            for (double gamma : {1.0, 100.0, 1e4, 1e6, 1e7}) {
                const ChannelSpec spec(p, gamma, rate);
                const auto fps = tanaka::find_fixed_points(spec);
                CHECK(fps.size() >= 1);
                CHECK(fps.size() <= 3);
                double prev = 0.0;
                for (const auto& fp : fps) {
                    CHECK(fp.eta > prev);
                    prev = fp.eta;
                    const double gm = gamma * fp.mmse;
                    CHECK(std::abs(1.0 / fp.eta - 1.0 - gm) <= 1e-8 * (1.0 + gm));
                    CHECK(fp.a == Catch::Approx(fp.eta * gamma));
                }
                // the middle branch never has lower energy than the smallest
                if (fps.size() == 3) CHECK(fps[0].free_energy < fps[1].free_energy);
            }
        }
    }
}

TEST_CASE("Free energy anchors and base switch", "[tanaka]") {
    // at eta = 1 the bracket vanishes, leaving the Gaussian mutual information
    const ChannelSpec spec(1.0, 1.0, 0.5);
    CHECK(tanaka::free_energy(spec, 1.0) == Catch::Approx(0.5 * std::log(1.5)).margin(1e-9));
    CHECK(tanaka::free_energy(spec, 1.0, tanaka::EnergyBase::mixed) ==
          Catch::Approx(0.5 * std::log(1.5)).margin(1e-9));
    // away from eta = 1 the conventions differ
    CHECK(tanaka::free_energy(spec, 0.5) != tanaka::free_energy(spec, 0.5, tanaka::EnergyBase::mixed));
    CHECK_THROWS_AS(tanaka::free_energy(spec, 0.0), std::domain_error);
}

TEST_CASE("Exact free-energy ordering across the three branches", "[tanaka]") {
    const ChannelSpec spec(0.1, 1e8, 0.2);
    const auto fps = tanaka::find_fixed_points(spec);
    REQUIRE(fps.size() == 3);
    CHECK(fps[2].free_energy < fps[0].free_energy);  // largest beats smallest
    CHECK(fps[0].free_energy < fps[1].free_energy);  // smallest beats middle
}

TEST_CASE("Asymptotic free energy captures the leading gamma dependence", "[tanaka]") {
    const ChannelSpec lo(0.1, 1e8, 0.2);
    const ChannelSpec hi(0.1, 1e10, 0.2);
    const auto fps_lo = tanaka::find_fixed_points(lo);
    const auto fps_hi = tanaka::find_fixed_points(hi);
    REQUIRE(fps_lo.size() == 3);
    REQUIRE(fps_hi.size() == 3);

    const double dlog = std::log(1e10) - std::log(1e8);
    // largest branch: slope (p/2) ln gamma
    const double slope_largest = (fps_hi[2].free_energy - fps_lo[2].free_energy) / dlog;
    CHECK(slope_largest == Catch::Approx(0.05).epsilon(0.02));
    // smallest branch: slope (R/2) ln gamma after base conversion
    const double slope_smallest = (fps_hi[0].free_energy - fps_lo[0].free_energy) / dlog;
    CHECK(slope_smallest == Catch::Approx(0.10).epsilon(0.02));

    // the asymptotic formulas reproduce those slopes by construction and put
    // the largest branch strictly below both small-eta branches
    for (const auto* fps : {&fps_lo, &fps_hi}) {
        const auto& spec = (fps == &fps_lo) ? lo : hi;
        const double e1 = tanaka::free_energy_asymptotic(spec, (*fps)[0]);
        const double e2 = tanaka::free_energy_asymptotic(spec, (*fps)[1]);
        const double e3 = tanaka::free_energy_asymptotic(spec, (*fps)[2]);
        CHECK(e3 < e1);
        CHECK(e3 < e2);
    }

    // exact energies track the asymptotic largest-branch value to the o(ln g) level
    CHECK(fps_hi[2].free_energy ==
          Catch::Approx(tanaka::free_energy_asymptotic(hi, fps_hi[2])).epsilon(0.35));
}

TEST_CASE("Solve selects the minimizer and obeys the low-noise law", "[tanaka]") {
    const ChannelSpec spec(0.1, 1e8, 0.2);
    const auto sol = tanaka::solve(spec);
    for (const auto& fp : sol.all) CHECK(sol.selected.free_energy <= fp.free_energy + 1e-9);

    CHECK(sol.selected.eta == Catch::Approx(0.5).epsilon(0.02));
    CHECK(sol.selected.mmse * 1e8 * (0.2 - 0.1) / 0.1 == Catch::Approx(1.0).epsilon(0.05));
    CHECK_FALSE(sol.tie);
}

TEST_CASE("Selected MMSE is nonincreasing in gamma", "[tanaka]") {
    for (double rate : {0.15, 0.23}) {
        double prev = 1e9;
        for (double db = 10.0; db <= 70.0; db += 2.0) {
            const auto sol = tanaka::solve(ChannelSpec(0.1, std::pow(10.0, db / 10.0), rate));
            CHECK(sol.selected.mmse <= prev * (1.0 + 1e-12));
            prev = sol.selected.mmse;
        }
    }
}

TEST_CASE("Surface rows are row-major and match the Gaussian closed form", "[tanaka]") {
    const std::vector<double> rates{0.3, 0.5};
    const std::vector<double> gammas{1.0, 10.0, 100.0};
    const auto rows = tanaka::mmse_surface(1.0, rates, gammas);
    REQUIRE(rows.size() == 6);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].rate == rates[i / 3]);
        CHECK(rows[i].gamma == gammas[i % 3]);
        CHECK(rows[i].fixed_point_count == 1);
        // Gaussian case: MMSE = 1 / (1 + eta*gamma*R) at the unique root
        CHECK(rows[i].mmse ==
              Catch::Approx(1.0 / (1.0 + rows[i].eta * rows[i].gamma * rows[i].rate)).epsilon(1e-8));
    }

    // no-information limit: MMSE -> p everywhere as gamma -> 0
    const auto tiny = tanaka::mmse_surface(0.1, {0.2, 0.5}, {1e-6});
    for (const auto& row : tiny) CHECK(row.mmse == Catch::Approx(0.1).margin(1e-6));

    CHECK_THROWS_AS(tanaka::mmse_surface(0.1, {}, {1.0}), std::domain_error);
}
