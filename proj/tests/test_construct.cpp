#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "qlab/construct.hpp"
#include "qlab/numerics.hpp"

using namespace qlab;

namespace {

std::string joined(const std::vector<std::string>& lines) {
    std::string s;
    for (const auto& l : lines) s += l + "\n";
    return s;
}

std::string failed(const CertifiedProfile& P) {
    std::string s;
    for (const auto& c : P.certificates)
        if (!c.passed) s += c.name + " (" + std::to_string(c.value) + " vs " + std::to_string(c.tolerance) + ") ";
    return s;
}

SupersolutionSpec csp_spec(SupersolutionKind kind) {
    SupersolutionSpec s;
    s.kind = kind;
    s.triple = {Phi::power_law(2), GradientTerm::constant(1), Nonlinearity::power(0.5)};
    s.model = ModelManifold::euclidean(3);
    s.beta = WeightProfile::power_decay(2);
    s.beta_bar = WeightProfile::power_decay(2);
    s.R = 1;
    s.lambda = 0.5;
    return s;
}

SupersolutionSpec sl_spec() {
    SupersolutionSpec s;
    s.kind = SupersolutionKind::SlBlowup;
    s.triple = {Phi::power_law(2), GradientTerm::constant(1), Nonlinearity::power(2)};
    s.model = ModelManifold::euclidean(3);
    s.beta = WeightProfile::power_decay(2);
    s.beta_bar = WeightProfile::power_decay(1);
    s.r0 = 1;
    s.r1 = 2;
    s.delta = 0.1;
    s.lambda = 0.5;
    return s;
}

template <class F>
ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::Config;
}

}  // namespace

TEST_CASE("first CSP strategy on the square-root power family") {
    auto P = build_csp_supersolution(csp_spec(SupersolutionKind::CspA));
    INFO(joined(P.trace));
    INFO(failed(P));
    CHECK(P.all_passed());
    CHECK(P.w.w.front() == P.parameters.at("lambda"));
    double R1 = P.support_end;
    for (std::size_t i = 0; i < P.w.size(); ++i) {
        if (P.w.r[i] < R1) {
            CHECK(P.w.wp[i] < 0);
        } else {
            CHECK(P.w.w[i] == 0);
        }
        CHECK(P.residual[i] <= 1e-8 * (1 + std::fabs(P.rhs[i])));
    }
}

TEST_CASE("second CSP strategy: support is [R, 2R]") {
    auto P = build_csp_supersolution(csp_spec(SupersolutionKind::CspB));
    INFO(joined(P.trace));
    INFO(failed(P));
    CHECK(P.all_passed());
    double R = P.parameters.at("R");
    CHECK(P.support_end == 2 * R);
    CHECK(P.w.r.front() == R);
    for (std::size_t i = 0; i < P.w.size(); ++i) CHECK((P.w.w[i] > 0) == (P.w.r[i] < 2 * R));
}

TEST_CASE("CSP needs the Keller-Osserman condition at zero") {
    for (double omega : {1.0, 1.5}) {
        auto s = csp_spec(SupersolutionKind::CspA);
        s.triple.f = Nonlinearity::power(omega);
        CHECK(kind_of([&] { build_csp_supersolution(s); }) == ErrorKind::KellerOssermanViolated);
        s.kind = SupersolutionKind::CspB;
        CHECK(kind_of([&] { build_csp_supersolution(s); }) == ErrorKind::KellerOssermanViolated);
    }
}

TEST_CASE("blow-up supersolution, p-Laplacian data") {
    auto P = build_sl_supersolution(sl_spec(), false);
    INFO(joined(P.trace));
    INFO(failed(P));
    CHECK(P.all_passed());
    CHECK(P.blowup > 2);
    CHECK(P.w.value_at(2) <= 0.5);
    CHECK(P.w.w.front() == doctest::Approx(0.1));
    CHECK(*std::max_element(P.w.w.begin(), P.w.w.end()) >= 1e10);
}

TEST_CASE("blow-up supersolution, mean curvature data") {
    auto s = sl_spec();
    s.kind = SupersolutionKind::SlBlowupMC;
    auto mc = Phi::mean_curvature();
    s.triple = {mc, GradientTerm::phi_quotient(mc, 0.5), Nonlinearity::power(2, 1.0)};
    // the drift at r0 forces sigma near 1e-4; a decaying beta_bar would push R1 past e^1000
    s.beta = WeightProfile::power_decay(0);
    s.beta_bar = WeightProfile::power_decay(0);
    auto P = build_sl_supersolution(s, true);
    INFO(joined(P.trace));
    INFO(failed(P));
    CHECK(P.all_passed());
    CHECK(P.w.w.front() == doctest::Approx(1.1));
    CHECK(P.w.value_at(2) <= 1.5);
}

TEST_CASE("blow-up needs the Keller-Osserman condition at infinity") {
    auto s = sl_spec();
    for (double omega : {0.5, 1.0}) {
        s.triple.f = Nonlinearity::power(omega);
        CHECK(kind_of([&] { build_sl_supersolution(s, false); }) == ErrorKind::KellerOssermanViolated);
    }
}

TEST_CASE("Khasminskii potential from the explicit formula") {
    SupersolutionSpec s;
    s.kind = SupersolutionKind::Khasminskii;
    s.triple = {Phi::power_law(2), GradientTerm::constant(1), Nonlinearity::power(1)};
    s.model = ModelManifold::euclidean(3);
    s.beta = WeightProfile::power_decay(2);
    s.eps = 0.1;
    s.eta = 0.1;
    s.r0 = 1;
    s.r1 = 2;
    auto P = build_khasminskii(s);
    INFO(joined(P.trace));
    INFO(failed(P));
    CHECK(P.all_passed());
    // inner integral in closed form: w' = σ (1/r²) ∫_{r0/2}^r s²(1+s)^{-2} ds
    double sigma = P.parameters.at("sigma");
    auto J = [](double r) { return r - 2 * std::log(1 + r) - 1 / (1 + r); };
    for (std::size_t i = 0; i < P.w.size(); i += 25) {
        double r = P.w.r[i];
        CHECK(P.w.wp[i] == doctest::Approx(sigma * (J(r) - J(0.5)) / (r * r)).epsilon(1e-9));
    }
    // w' ~ σ/r, so w grows like σ log r
    double rn = P.w.r.back();
    CHECK(P.w.wp.back() * rn == doctest::Approx(sigma).epsilon(0.01));
}

TEST_CASE("Khasminskii potential needs a compatible weight") {
    SupersolutionSpec s;
    s.kind = SupersolutionKind::Khasminskii;
    s.triple = {Phi::power_law(2), GradientTerm::constant(1), Nonlinearity::power(1)};
    s.model = ModelManifold::euclidean(3);
    s.beta = WeightProfile::power_decay(0);
    CHECK(kind_of([&] { build_khasminskii(s); }) == ErrorKind::WeightIncompatible);
}

TEST_CASE("Khasminskii potential through the Dirichlet seed") {
    // l(0) = 0 rules out the explicit formula
    SupersolutionSpec s;
    s.kind = SupersolutionKind::Khasminskii;
    s.triple = {Phi::power_law(2), GradientTerm::power(1), Nonlinearity::power(1)};
    s.chi = 0;
    s.model = ModelManifold::euclidean(2);
    s.beta = WeightProfile::power_decay(1);
    s.eps = 0.1;
    s.eta = 0.1;
    s.xi = 0.5;
    s.r_max = 1e3;
    auto P = build_khasminskii(s);
    INFO(joined(P.trace));
    INFO(failed(P));
    CHECK(P.parameters.at("explicit_route") == 0);
    CHECK(P.all_passed());
}

TEST_CASE("exterior Dirichlet problem: harmonic profile") {
    SupersolutionSpec s;
    s.kind = SupersolutionKind::ExteriorDirichlet;
    s.triple = {Phi::power_law(2), GradientTerm::constant(1),
                Nonlinearity::custom([](double) { return 0.0; }, [](double) { return 0.0; })};
    s.model = ModelManifold::euclidean(3);
    s.r0 = 1;
    s.R = 1;
    s.eta = 0.1;
    s.xi = 0.5;
    auto P = solve_exterior_dirichlet(s);
    INFO(joined(P.trace));
    INFO(failed(P));
    CHECK(P.all_passed());
    CHECK(P.find("decay") != nullptr);
    double e = 0;
    for (std::size_t i = 0; i < P.w.size(); ++i) e = std::max(e, std::fabs(P.w.w[i] - 0.1 / P.w.r[i]));
    CHECK(e <= 1e-7);
}

TEST_CASE("exterior problem checks the uniform bound first") {
    SupersolutionSpec s;
    s.kind = SupersolutionKind::ExteriorDirichlet;
    s.triple = {Phi::power_law(2), GradientTerm::constant(1), Nonlinearity::power(1)};
    s.model = ModelManifold::euclidean(3);
    s.eta = 0.5;
    s.xi = 0.5;
    CHECK(kind_of([&] { solve_exterior_dirichlet(s); }) == ErrorKind::RestrictionViolated);
}

TEST_CASE("property: monotone tables round-trip") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(0.1, 0.9), ua(0.05, 2.0);
    for (int k = 0; k < 20; ++k) {
        double omega = u(rng), lambda = ua(rng);
        Fn g = [omega](double s) { return std::pow(s, -(omega + 1) / 2); };
        std::vector<double> nodes{0.0};
        for (double a : num::log_grid(lambda * 1e-12, lambda, 8)) nodes.push_back(a);
        num::MonotoneIntegral Phi(g, nodes, num::MonotoneIntegral::Anchor::Left, -(omega + 1) / 2);
        double c = 2 / (1 - omega);
        CHECK(Phi.total() == doctest::Approx(c * std::pow(nodes.back(), (1 - omega) / 2)).epsilon(1e-10));
        for (int j = 0; j < 10; ++j) {
            double a = nodes.back() * std::pow(10.0, -9 * ua(rng) / 2);
            CHECK(std::fabs(Phi.inverse(Phi(a)) - a) <= 1e-9 * a);
        }
    }
}
