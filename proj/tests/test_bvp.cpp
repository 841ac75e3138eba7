#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "qlab/bvp.hpp"
#include "qlab/ko.hpp"
#include "qlab/numerics.hpp"

using namespace qlab;

namespace {

Triple power_triple(double p, double chi, double omega) {
    return {Phi::power_law(p), GradientTerm::phi_quotient(Phi::power_law(p), chi), Nonlinearity::power(omega)};
}

BvpProblem linear(BoundaryKind kind, double T, double eta) {
    BvpProblem pb;
    pb.triple = {Phi::power_law(2), GradientTerm::constant(1), Nonlinearity::power(1)};
    pb.kind = kind;
    pb.T = T;
    pb.eta = eta;
    return pb;
}

double max_abs(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

}  // namespace

TEST_CASE("f = 0 gives the straight line") {
    BvpProblem pb;
    pb.triple = {Phi::power_law(3), GradientTerm::constant(1), Nonlinearity::custom([](double) { return 0.0; })};
    pb.T = 2;
    pb.eta = 0.5;
    auto s = solve_dirichlet(pb);
    for (std::size_t i = 0; i < s.w.size(); ++i) {
        CHECK(s.w.w[i] == doctest::Approx(0.25 * s.w.r[i]).epsilon(1e-12).scale(1));
        CHECK(s.w.wp[i] == doctest::Approx(0.25).epsilon(1e-10));
    }
    CHECK(classify_origin_slope(pb).cls == SlopeClass::Positive);
}

TEST_CASE("linear calibration: sinh for Dirichlet, cosh for mixed") {
    for (double T : {0.5, 1.0, 2.0}) {
        auto s = solve_dirichlet(linear(BoundaryKind::Dirichlet, T, 1));
        double e = 0, ep = 0;
        for (std::size_t i = 0; i < s.w.size(); ++i) {
            double t = s.w.r[i];
            e = std::max(e, std::fabs(s.w.w[i] - std::sinh(t) / std::sinh(T)));
            ep = std::max(ep, std::fabs(s.w.wp[i] - std::cosh(t) / std::sinh(T)));
        }
        CHECK(e <= 1e-7);
        CHECK(ep <= 1e-7);
        CHECK(s.origin.cls == SlopeClass::Positive);
        auto m = solve_mixed(linear(BoundaryKind::Mixed, T, 1));
        e = 0;
        for (std::size_t i = 0; i < m.w.size(); ++i)
            e = std::max(e, std::fabs(m.w.w[i] - std::cosh(m.w.r[i]) / std::cosh(T)));
        CHECK(e <= 1e-7);
        CHECK(m.plateau == 0);
    }
}

TEST_CASE("mixed problem with a pole: radial Helmholtz in three dimensions") {
    // (t^2 w')' = t^2 w has the regular solution sinh(t)/t
    BvpProblem pb = linear(BoundaryKind::Mixed, 1.5, 1);
    pb.volume = [](double t) { return t * t; };
    auto s = solve_mixed(pb);
    auto u = [](double t) { return t < 1e-8 ? 1.0 : std::sinh(t) / t; };
    double e = 0;
    for (std::size_t i = 0; i < s.w.size(); ++i) e = std::max(e, std::fabs(s.w.w[i] - u(s.w.r[i]) / u(1.5)));
    CHECK(e <= 1e-7);
    CHECK(s.w.wp[0] == 0);
    // a vanishing volume factor is refused for Dirichlet data
    CHECK_THROWS_AS(solve_dirichlet(pb), Error);
}

TEST_CASE("square-root nonlinearity has a dead core") {
    // w'' = sqrt(w) with w(0) = 0: w = (t - t0)^4 / 144 beyond t0 = T - (144 eta)^{1/4}
    BvpProblem pb;
    pb.triple = {Phi::power_law(2), GradientTerm::constant(1), Nonlinearity::power(0.5)};
    pb.T = 1;
    pb.eta = 1e-3;
    double t0 = 1 - std::pow(144 * pb.eta, 0.25);
    auto s = solve_dirichlet(pb);
    double h = 2.0 / 512;  // largest grid spacing
    CHECK(std::fabs(s.plateau - t0) <= h);
    double e = 0;
    for (std::size_t i = 0; i < s.w.size(); ++i) {
        double t = s.w.r[i];
        double ref = t > t0 ? std::pow(t - t0, 4) / 144 : 0.0;
        e = std::max(e, std::fabs(s.w.w[i] - ref));
    }
    CHECK(e <= 1e-3 * pb.eta);
    auto c = classify_origin_slope(pb);
    CHECK(c.cls == SlopeClass::Zero);
    CHECK(std::fabs(c.value) < 1e-3);

    SUBCASE("mixed data gives the same profile and a plateau") {
        auto m = solve_mixed(pb);
        CHECK(std::fabs(m.plateau - t0) <= h);
        for (std::size_t i = 0; i < m.w.size() && m.w.r[i] <= m.plateau; ++i)
            CHECK(std::fabs(m.w.w[i] - m.w.w[0]) <= 1e-9);
    }
}

TEST_CASE("origin slope follows the Keller-Osserman dichotomy at zero") {
    // two representative corners of the sweep on a coarser grid; the full sweep runs in acceptance
    BvpOptions o;
    o.N = 256;
    for (auto [p, chi, omega] : {std::array<double, 3>{2, 1, 0.5}, std::array<double, 3>{3, 0.5, 1}}) {
        BvpProblem pb;
        pb.triple = power_triple(p, chi, omega);
        pb.T = 12;
        pb.eta = 1;
        auto c = classify_origin_slope(pb, 3, o);
        auto ko = ko_verdict(pb.triple, Endpoint::Zero);
        CHECK((c.cls == SlopeClass::Zero) == (ko.outcome == Verdict::Holds));
        CHECK(c.cls != SlopeClass::Undetermined);
    }
}

TEST_CASE("property: invariants on random smooth problems") {
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> up(1.5, 3.0), uw(0.3, 2.5), uT(0.5, 2.0), ue(0.1, 1.0), u01(0, 1);
    for (int k = 0; k < 12; ++k) {
        double p = up(rng);
        double chi = 0.3 + u01(rng) * (std::min(1.0, p - 1) - 0.3);
        double omega = uw(rng);
        BvpProblem pb;
        pb.triple = power_triple(p, chi, omega);
        pb.T = uT(rng);
        pb.eta = ue(rng);
        pb.a = [](double t) { return 1 + 0.5 * std::sin(t); };
        pb.volume = [](double t) { return 1 + t; };
        pb.kind = k % 2 ? BoundaryKind::Mixed : BoundaryKind::Dirichlet;
        INFO("p=" << p << " chi=" << chi << " omega=" << omega << " T=" << pb.T << " eta=" << pb.eta
                  << " kind=" << to_string(pb.kind));
        BvpSolution s;
        try {
            s = solve_bvp(pb);
        } catch (const Error& e) {
            // the a priori restriction may legitimately fail; it must say so
            CHECK(e.kind() == ErrorKind::RestrictionViolated);
            continue;
        }
        for (std::size_t i = 0; i < s.w.size(); ++i) {
            CHECK(s.w.w[i] >= -1e-12);
            CHECK(s.w.w[i] <= pb.eta * (1 + 1e-9));
            CHECK(s.w.wp[i] >= 0);
            CHECK(s.w.wp[i] < s.xi);
            CHECK(s.w.wp[i] <= s.gradient_bound * (1 + 1e-9));
        }
        CHECK(max_abs(s.residual) <= 1e-7 * s.residual_scale);
        CHECK(std::fabs(s.w.w.back() - pb.eta) <= 1e-9);
    }
}

TEST_CASE("restriction is checked before solving") {
    BvpProblem pb = linear(BoundaryKind::Dirichlet, 1, 1);
    pb.xi = 1.5;  // needs phi(1) + 2 * 1 * 1 * 1 < xi
    try {
        solve_dirichlet(pb);
        FAIL("expected RestrictionViolated");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::RestrictionViolated);
    }
    pb.xi = 3.5;
    CHECK_NOTHROW(solve_dirichlet(pb));
    // mixed data only needs Theta f_eta l_xi < phi(xi)
    pb.xi = 1.5;
    CHECK_NOTHROW(solve_mixed(pb));
}

TEST_CASE("reruns are deterministic") {
    BvpProblem pb;
    pb.triple = power_triple(3, 1, 0.5);
    pb.T = 12;
    auto a = solve_dirichlet(pb), b = solve_dirichlet(pb);
    CHECK(a.w.w == b.w.w);
    CHECK(a.sigma_path == b.sigma_path);
    CHECK(a.sigma_path.back() == 1);
}

TEST_CASE("maximal extension: blow-up against the energy quadrature") {
    // w'' = w^3 conserves w'^2 - w^4/2 = E, so R = T + int_eta^inf dw / sqrt(w^4/2 + E)
    BvpProblem pb = linear(BoundaryKind::Mixed, 1, 0.5);
    pb.triple.f = Nonlinearity::power(3);
    for (double eta : {0.2, 0.5, 1.0}) {
        pb.eta = eta;
        auto s = solve_mixed(pb);
        double wp = s.w.wp.back();
        double E = wp * wp - std::pow(eta, 4) / 2;
        double R = 1 + num::integrate_tail([&](double w) { return 1 / std::sqrt(w * w * w * w / 2 + E); }, eta);
        auto ext = extend_maximal(s, pb, 50);
        CHECK_FALSE(ext.infinite);
        CHECK(ext.R_max == doctest::Approx(R).epsilon(1e-2));
        CHECK(std::fabs(ext.R_levels[0] - ext.R_levels[1]) <= 0.01 * R);
    }
}

TEST_CASE("maximal extension: linear growth reaches the end") {
    BvpProblem pb = linear(BoundaryKind::Mixed, 1, 0.5);
    auto s = solve_mixed(pb);
    auto ext = extend_maximal(s, pb, 50);
    CHECK(ext.infinite);
    CHECK(ext.r_reached >= 50);
    // w = eta cosh(r)/cosh(1) along the march
    for (std::size_t i = 0; i < ext.w.size(); i += 7) {
        double ref = 0.5 * std::cosh(ext.w.r[i]) / std::cosh(1.0);
        CHECK(ext.w.w[i] == doctest::Approx(ref).epsilon(1e-6));
    }
}

TEST_CASE("property: no Keller-Osserman at infinity means no blow-up") {
    for (double p : {1.5, 2.0, 3.0})
        for (double chi : {0.5, 1.0}) {
            if (chi > p - 1) continue;  // keeps l finite at 0
            for (double omega : {chi / 4, chi / 2, chi}) {
                BvpProblem pb;
                pb.triple = power_triple(p, chi, omega);
                pb.kind = BoundaryKind::Mixed;
                pb.T = 1;
                pb.eta = 0.5;
                auto s = solve_mixed(pb);
                auto ext = extend_maximal(s, pb, 50);
                auto ko = ko_verdict(pb.triple, Endpoint::Infinity);
                INFO("p=" << p << " chi=" << chi << " omega=" << omega << " R=" << ext.R_max);
                if (ko.outcome == Verdict::Fails) CHECK(ext.infinite);
            }
        }
}
