#include <doctest.h>

#include <chrono>
#include <cmath>

#include <nlohmann/json.hpp>

#include "loggas/equilibrium.hpp"
#include "oracles.hpp"

using namespace loggas;

TEST_SUITE_BEGIN("equilibrium");

namespace {
Potential two_cut_quartic() { return Potential::polynomial({0, 0, -1.5, 0, 0.25}, 2.0); }
}

TEST_CASE("semicircle reference measure") {
    auto mu = EquilibriumMeasure::semicircle(2.0);
    double total = 0;
    for (const auto& q : mu.quad()) total += q.w;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(mu.mass(0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(mu.density(0.0) == doctest::Approx(1.0 / kPi).epsilon(1e-12));

    // log potential against the closed-form oracle, inside and outside
    for (double x : {-1.5, 0.0, 0.3, 1.99, 2.5, -3.4}) {
        CHECK(mu.log_potential(x) ==
              doctest::Approx(oracles::semicircle_log_potential(x)).epsilon(1e-9));
    }
}

TEST_CASE("stieltjes transform of the semicircle") {
    auto mu = EquilibriumMeasure::semicircle(2.0);
    // z = 3: direct quadrature oracle at 1e4 nodes, and the closed value
    double oracle = oracles::semicircle_stieltjes_quadrature(3.0);
    cplx g = mu.stieltjes(cplx(3.0, 0.0));
    CHECK(g.real() == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(g.real() == doctest::Approx(0.3819660112501051).epsilon(1e-10));
    CHECK(std::abs(g.imag()) < 1e-12);

    // normalization asymptotics
    cplx far = mu.stieltjes(cplx(1e6, 0.0));
    CHECK(std::abs(far - cplx(1e-6, 0.0)) < 1e-10);

    // boundary values recover the density
    for (double x : {-1.2, 0.0, 0.7, 1.8}) {
        CHECK(mu.boundary_density(x) == doctest::Approx(mu.density(x)).epsilon(1e-6));
    }
    CHECK_THROWS_AS(mu.stieltjes(cplx(0.5, 1e-9)), DomainError);
}

TEST_CASE("classical locations of the semicircle") {
    auto mu = EquilibriumMeasure::semicircle(2.0);
    CHECK(mu.classical_location(1, 2) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(mu.classical_location(10, 10) == doctest::Approx(2.0));
    // i/N = 1/4 against the quadrature-CDF oracle
    double lo = -2, hi = 2;
    for (int it = 0; it < 48; ++it) {
        double mid = 0.5 * (lo + hi);
        (oracles::semicircle_cdf_quadrature(mid, 20000) < 0.25 ? lo : hi) = mid;
    }
    CHECK(mu.classical_location(1, 4) == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-6));
    CHECK_THROWS_AS(mu.classical_location(0, 4), ArgumentError);
}

TEST_CASE("effective potential of the semicircle") {
    auto mu = EquilibriumMeasure::semicircle(2.0);
    for (double x : {-1.9, -0.4, 0.0, 1.3})
        CHECK(std::abs(mu.effective_potential(x)) < 1e-6);
    // Gaussian beta=2 at x=2.5: closed-form oracle 2*ln 2 - 15/8
    double expect = 2.0 * std::log(2.0) - 15.0 / 8.0;
    CHECK(mu.effective_potential(2.5) == doctest::Approx(expect).epsilon(1e-8));
    CHECK(mu.effective_potential(2.5) < 0.0);
    CHECK_THROWS_AS(mu.effective_potential(8.0), DomainError);
}

TEST_CASE("gaussian solve finds the semicircle") {
    auto t0 = std::chrono::steady_clock::now();
    auto mu = solve_equilibrium(Potential::gaussian(2.0), std::nullopt, 1);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 5.0);
    CHECK(mu.geometry.cuts[0].a == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK(mu.geometry.cuts[0].b == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(mu.eps[0] == doctest::Approx(1.0).epsilon(1e-8));
    for (double s : mu.S[0]) CHECK(s == doctest::Approx(1.0 / (2 * kPi)).epsilon(1e-8));
    CHECK(mu.constants[0] == doctest::Approx(-1.5).epsilon(1e-8));
    auto rep = mu.verify_characterization();
    CHECK(rep.max_on_support_violation <= 1e-6);
    CHECK(rep.max_off_support_violation <= 1e-6);

    // eps forced to (1) is identical to unconstrained
    auto muc = solve_equilibrium(Potential::gaussian(2.0), std::vector<double>{1.0}, 1);
    CHECK(muc.geometry.cuts[0].a == doctest::Approx(mu.geometry.cuts[0].a).epsilon(1e-12));
    CHECK(muc.geometry.cuts[0].b == doctest::Approx(mu.geometry.cuts[0].b).epsilon(1e-12));
}

TEST_CASE("two-cut quartic solve against the energy-minimization oracle") {
    auto mu = solve_equilibrium(two_cut_quartic(), std::nullopt, 2);
    // oracle: 2000-particle discretized energy minimization
    auto V = [](double x) { return 0.25 * x * x * x * x - 1.5 * x * x; };
    auto Vp = [](double x) { return x * x * x - 3.0 * x; };
    auto Vpp = [](double x) { return 3.0 * x * x - 3.0; };
    auto cfg = oracles::minimize_discrete_energy(V, Vp, Vpp, 2.0, 2000, -2.6, 2.6);
    auto clusters = oracles::cluster_edges(cfg, 0.5);
    REQUIRE(clusters.size() == 2);
    CHECK(std::abs(mu.geometry.cuts[0].a - clusters[0].first) < 2e-2);
    CHECK(std::abs(mu.geometry.cuts[0].b - clusters[0].second) < 2e-2);
    CHECK(std::abs(mu.geometry.cuts[1].a - clusters[1].first) < 2e-2);
    CHECK(std::abs(mu.geometry.cuts[1].b - clusters[1].second) < 2e-2);
    // oracle-confirmed closed values (sqrt(5), 1)
    CHECK(mu.geometry.cuts[0].a == doctest::Approx(-std::sqrt(5.0)).epsilon(1e-9));
    CHECK(mu.geometry.cuts[0].b == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(mu.geometry.cuts[1].a == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(mu.geometry.cuts[1].b == doctest::Approx(std::sqrt(5.0)).epsilon(1e-9));
    // symmetry forces equal masses
    CHECK(mu.eps[0] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(mu.eps[1] == doctest::Approx(0.5).epsilon(1e-8));
    // per-cut mass and total mass invariants
    CHECK(mu.mass(0) + mu.mass(1) == doctest::Approx(1.0).epsilon(1e-8));
    auto rep = mu.verify_characterization();
    CHECK(rep.max_on_support_violation <= 1e-6);
    CHECK(rep.max_off_support_violation <= 1e-6);
    // off-support strict negativity outside B^delta
    double probe = mu.geometry.B[0].a + 0.5 * mu.geometry.delta;
    CHECK(mu.effective_potential(probe) < 0.0);

    // symmetry of edges under x -> -x
    CHECK(mu.geometry.cuts[0].a == doctest::Approx(-mu.geometry.cuts[1].b).epsilon(1e-8));
    CHECK(mu.geometry.cuts[0].b == doctest::Approx(-mu.geometry.cuts[1].a).epsilon(1e-8));

    // dual-route density consistency on both cuts
    for (double x : {-2.0, -1.4, 1.2, 2.1})
        CHECK(mu.boundary_density(x) == doctest::Approx(mu.density(x)).epsilon(1e-6));
}

TEST_CASE("quantiles at mass boundaries take the smallest solution") {
    auto mu = solve_equilibrium(two_cut_quartic(), std::nullopt, 2);
    // exactly half the mass sits in the left cut; the smallest location
    // reaching it is the right edge of that cut
    CHECK(mu.quantile(0.5) == doctest::Approx(mu.geometry.cuts[0].b).epsilon(1e-12));
    CHECK(mu.classical_location(64, 128) == doctest::Approx(mu.geometry.cuts[0].b));
    CHECK(mu.quantile(1.0) == doctest::Approx(mu.geometry.cuts[1].b));
}

TEST_CASE("constrained two-cut solve hits requested filling fractions") {
    std::vector<double> eps{0.4, 0.6};
    auto mu = solve_equilibrium(two_cut_quartic(), eps, 2);
    CHECK(mu.mass(0) == doctest::Approx(0.4).epsilon(1e-8));
    CHECK(mu.mass(1) == doctest::Approx(0.6).epsilon(1e-8));
    auto rep = mu.verify_characterization();
    CHECK(rep.max_on_support_violation <= 1e-6);
    CHECK(rep.max_off_support_violation <= 1e-6);
}

TEST_CASE("smooth dependence on eps") {
    auto edges_at = [&](double e0) {
        auto mu = solve_equilibrium(two_cut_quartic(), std::vector<double>{e0, 1.0 - e0}, 2);
        return mu.edges();
    };
    const double h1 = 1e-4, h2 = 2e-4;
    auto base = edges_at(0.5);
    auto p1 = edges_at(0.5 + h1), m1 = edges_at(0.5 - h1);
    auto p2 = edges_at(0.5 + h2), m2 = edges_at(0.5 - h2);
    for (int k = 0; k < 4; ++k) {
        double d1 = (p1[k] - m1[k]) / (2 * h1);
        double d2 = (p2[k] - m2[k]) / (2 * h2);
        CHECK(std::abs(d1 - d2) <= 1e-3 * std::max(1.0, std::abs(d1)));
    }
    (void)base;
}

TEST_CASE("constructed violations are detected") {
    // density rescaled by 1.01: normalization fails before characterization
    auto mu = EquilibriumMeasure::semicircle(2.0);
    EquilibriumMeasure bad = mu;
    for (auto& s : bad.S[0]) s *= 1.01;
    bad.finalize();
    CHECK(bad.mass(0) == doctest::Approx(1.01).epsilon(1e-10));
    CHECK(std::abs(bad.mass(0) - 1.0) > 1e-8);

    // semicircle shifted by 0.1 under the Gaussian potential
    EquilibriumMeasure shifted;
    shifted.geometry = make_geometry({Cut{-1.9, 2.1}});
    shifted.potential = Potential::gaussian(2.0);
    shifted.eps = {1.0};
    shifted.constants = {-1.5};
    shifted.grids = {cheb::Grid(-1.9, 2.1, 64)};
    shifted.S = {std::vector<double>(64, 1.0 / (2 * kPi))};
    shifted.finalize();
    auto rep = shifted.verify_characterization();
    CHECK(rep.max_on_support_violation > 1e-3);
}

TEST_CASE("solver rejects invalid inputs") {
    CHECK_THROWS_AS(solve_equilibrium(Potential::gaussian(2.0), std::vector<double>{0.5}, 1),
                    ArgumentError);
    CHECK_THROWS_AS(solve_equilibrium(Potential::gaussian(2.0), std::vector<double>{0.4, 0.7}, 2),
                    ArgumentError);
    auto lg = Potential::sum({Potential::Term{Potential::Term::Type::Log1pX2, 1.0, 0}}, 2.0);
    CHECK_THROWS_AS(solve_equilibrium(lg, std::nullopt, 1), ArgumentError);
}

TEST_CASE("measure json round trip") {
    auto mu = solve_equilibrium(Potential::gaussian(2.0), std::nullopt, 1);
    auto j = mu.to_json();
    auto back = EquilibriumMeasure::from_json(j);
    CHECK(back.density(0.7) == doctest::Approx(mu.density(0.7)).epsilon(1e-14));
    CHECK(back.to_json().dump() == j.dump());
}

TEST_SUITE_END();
