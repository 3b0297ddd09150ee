#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "loggas/potential.hpp"

using namespace loggas;

TEST_SUITE_BEGIN("potentials");

TEST_CASE("gaussian potential values") {
    auto g2 = Potential::gaussian(2.0);
    CHECK(g2.coefficients() == std::vector<double>{0.0, 0.0, 0.5});
    CHECK(g2.evaluate(1.0, 0) == doctest::Approx(0.5));
    CHECK(g2.evaluate(0.0, 1) == doctest::Approx(0.0));
    auto g1 = Potential::gaussian(1.0);
    CHECK(g1.evaluate(2.0, 0) == doctest::Approx(1.0));
    auto g4 = Potential::gaussian(4.0);
    CHECK(g4.evaluate(0.37, 2) == doctest::Approx(2.0));
    CHECK(g4.evaluate(-5.1, 2) == doctest::Approx(2.0));
    CHECK_THROWS_AS(Potential::gaussian(0.0), ArgumentError);
    CHECK_THROWS_AS(Potential::gaussian(-1.0), ArgumentError);
}

TEST_CASE("quartic evaluation and errors") {
    auto q = Potential::polynomial({0, 0, -1, 0, 0.25}, 2.0);
    CHECK(q.evaluate(2.0, 0) == doctest::Approx(0.0));
    CHECK(q.evaluate(1.0, 1) == doctest::Approx(-1.0));  // x^3 - 2x at 1
    // bounded-domain potential rejects outside points
    auto b = Potential::polynomial({0, 1}, 2.0, {Interval{-1.0, 1.0}});
    CHECK_THROWS_AS(b.evaluate(2.0, 0), DomainError);
    CHECK_THROWS_AS(b.evaluate(0.5, -1), ArgumentError);
    // closed-form families carry a derivative-order cap
    auto lg = Potential::sum({Potential::Term{Potential::Term::Type::Log1pX2, 1.0, 0}}, 2.0);
    CHECK(lg.evaluate(0.5, 2) == doctest::Approx(2.0 * (1 - 0.25) / (1.25 * 1.25)));
    CHECK_THROWS_AS(lg.evaluate(0.5, 3), CapabilityError);
}

TEST_CASE("complex evaluation matches real restriction") {
    auto q = Potential::polynomial({0.3, -1.0, 0.0, 0.25}, 2.0);
    cplx z(0.7, 0.0);
    CHECK(std::abs(q.evaluate_c(z, 0) - cplx(q.evaluate(0.7, 0))) < 1e-15);
    cplx w(0.5, 0.8);
    cplx expect = 0.3 - 1.0 * w + 0.25 * w * w * w;
    CHECK(std::abs(q.evaluate_c(w, 0) - expect) < 1e-14);
}

TEST_CASE("confinement check") {
    CHECK(Potential::gaussian(2.0).confinement_check());
    // log-growth potential: ratio tends to 1, fails the strict inequality
    auto lg = Potential::sum({Potential::Term{Potential::Term::Type::Log1pX2, 1.0, 0}}, 2.0);
    CHECK_FALSE(lg.confinement_check());
    // bounded domain: vacuously true
    auto b = Potential::polynomial({0, -5}, 2.0, {Interval{-1.0, 1.0}});
    CHECK(b.confinement_check());
    // downward quartic fails
    CHECK_FALSE(Potential::polynomial({0, 0, 0, 0, -1}, 2.0).confinement_check());
    // odd leading term fails on the left
    CHECK_FALSE(Potential::polynomial({0, 0, 0, 1}, 2.0).confinement_check());
}

TEST_CASE("property: monotone in leading degree") {
    // adding a positive even leading term never flips true -> false
    std::vector<std::vector<double>> bases = {
        {0, 0, 0.5}, {0, 1, 2}, {1, -3, 0, 0, 0.25}, {0, 0, 0.1, 0, 0.3}};
    for (const auto& c : bases) {
        auto p = Potential::polynomial(c, 2.0);
        if (!p.confinement_check()) continue;
        for (int extra : {2, 4, 6}) {
            auto cc = c;
            cc.resize(c.size() + extra, 0.0);
            if ((cc.size() - 1) % 2 == 1) cc.push_back(0.0);
            cc.back() = 0.7;
            CHECK(Potential::polynomial(cc, 2.0).confinement_check());
        }
    }
}

TEST_CASE("property: first derivative matches centered differences") {
    auto q = Potential::polynomial({0.1, -0.4, 0.9, -0.2, 0.05}, 3.0);
    const double step = 1e-5;
    for (double x : {-1.7, -0.3, 0.0, 0.8, 2.1}) {
        double fd = (q.evaluate(x + step, 0) - q.evaluate(x - step, 0)) / (2 * step);
        double ex = q.evaluate(x, 1);
        CHECK(std::abs(fd - ex) <= 1e-8 * std::max(1.0, std::abs(ex)));
    }
}

TEST_CASE("json round trip matches schema") {
    auto g = Potential::gaussian(2.0);
    auto j = g.to_json();
    CHECK(j["kind"] == "polynomial");
    CHECK(j["beta"] == 2.0);
    CHECK(j["coefficients"][2] == 0.5);
    CHECK(j["domain"][0][0] == "-inf");
    auto back = Potential::from_json(j);
    CHECK(back.evaluate(1.3, 0) == doctest::Approx(g.evaluate(1.3, 0)));

    auto parsed = Potential::from_json(nlohmann::json::parse(
        R"({"kind":"polynomial","beta":2.0,"coefficients":[0,0,0.5],"domain":[["-inf","inf"]]})"));
    CHECK(parsed.evaluate(1.0, 0) == doctest::Approx(0.5));
}

TEST_SUITE_END();
