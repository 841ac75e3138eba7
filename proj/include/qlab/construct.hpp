#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qlab/common.hpp"
#include "qlab/model.hpp"
#include "qlab/nonlinearity.hpp"

namespace qlab {

enum class SupersolutionKind { CspA, CspB, SlBlowup, SlBlowupMC, Khasminskii, ExteriorDirichlet };

const char* to_string(SupersolutionKind k);
SupersolutionKind parse_supersolution_kind(const std::string& s);  // cspA, cspB, sl, sl-mc, khasminskii, exterior

struct SupersolutionSpec {
    SupersolutionKind kind = SupersolutionKind::CspA;
    Triple triple;
    // The model supplies v and the drift; without one, volume = 1 and theta = 0 unless given.
    std::optional<ModelManifold> model;
    Fn theta;  // nonnegative drift bound; empty: max(0, -Δr) for CSP, max(0, Δr) for SL, 0 without a model
    WeightProfile beta = WeightProfile::power_decay(2);
    WeightProfile beta_bar = WeightProfile::power_decay(2);
    double chi = std::numeric_limits<double>::quiet_NaN();  // gradient exponent; NaN: inferred from φ and l
    double eps = 1;
    double delta = 0.1, lambda = 0.5;  // SL band above the threshold; CSP starting height
    double R = 1, r0 = 1, r1 = 2;
    double eta = 0.1;  // Khasminskii ceiling on [r0, r1]; exterior boundary value
    double xi = 0.5;   // exterior gradient ceiling
    double K = 1;      // Khasminskii constant
    double B2 = 1;     // CspB bound on K(1/(R K^{-1}(β(2R)))) R θ(R)
    double r_max = 1e4;  // Khasminskii march end
    int nodes = 1200;
    bool explicit_route = false;  // Khasminskii: force the double-integral formula
    int max_search = 60;
};

struct Certificate {
    std::string name;
    bool passed = false;
    double value = 0;
    double tolerance = 0;
    std::string detail;
};

// The target inequality is (φ(w'))' + d(r) φ(w') [rel] rhs(r, w, w'), rel one of <=, ==.
struct CertifiedProfile {
    SupersolutionKind kind = SupersolutionKind::CspA;
    RadialFunction w;  // r, w, w', w'' (w'' from the defining identity)
    double support_end = kInf;  // CSP: R1 (w = 0 beyond)
    double blowup = kInf;       // SL: R1 (w -> inf)
    std::vector<double> lhs, rhs, residual;  // residual = lhs - rhs at each node
    Fn drift;  // d(r)
    std::function<double(double, double, double)> rhs_fn;
    bool equality = false;
    double tolerance = 0;  // residual band used by the inequality certificate
    std::vector<Certificate> certificates;
    std::map<std::string, double> parameters;
    std::vector<std::string> trace;

    bool all_passed() const;
    const Certificate* find(const std::string& name) const;
};

CertifiedProfile build_csp_supersolution(const SupersolutionSpec& spec);
CertifiedProfile build_sl_supersolution(const SupersolutionSpec& spec, bool mean_curvature);
CertifiedProfile build_khasminskii(const SupersolutionSpec& spec);
CertifiedProfile solve_exterior_dirichlet(const SupersolutionSpec& spec);
CertifiedProfile build_supersolution(const SupersolutionSpec& spec);

}  // namespace qlab
