#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qlab/bvp.hpp"
#include "qlab/common.hpp"
#include "qlab/construct.hpp"
#include "qlab/model.hpp"
#include "qlab/nonlinearity.hpp"

namespace qlab {

using RhsFn = std::function<double(double r, double u, double up)>;

// φ'(|w'|) w'' + φ(w') Δr, with φ extended oddly to negative slopes
double phi_laplacian_radial(const ModelManifold& M, const Phi& phi, const AnalyticProfile& w, double r);
// same at node i of a sampled profile: 5-point stencil of φ(w') that stays between consecutive breaks
double phi_laplacian_radial(const ModelManifold& M, const Phi& phi, const RadialFunction& w, std::size_t i,
                            const std::vector<double>& breaks = {});

enum class SignVerdict { NonNegative, NonPositive, Zero, Mixed };

const char* to_string(SignVerdict s);

struct ResidualReport {
    std::vector<double> r, u, up, lhs, rhs, residual;
    std::vector<double> relative;  // residual / (|lhs| + |rhs|), 0 where both vanish
    std::vector<double> stencil_error;  // sampled profiles: |5-point - 7-point| derivative of φ(u')
    double min = 0, max = 0;
    double argmin = 0, argmax = 0;
    double band = 0;                   // 1e-8 (1 + max|rhs|)
    double relative_min = 0, relative_max = 0;
    SignVerdict sign = SignVerdict::Zero;  // from the absolute band

    bool nonnegative() const { return sign == SignVerdict::NonNegative || sign == SignVerdict::Zero; }
    bool nonpositive() const { return sign == SignVerdict::NonPositive || sign == SignVerdict::Zero; }
};

// Δ_φ u - b f(u) l(|u'|) with the model's Δr
ResidualReport residual_report(const ModelManifold& M, const Triple& tr, const WeightProfile& b,
                               const AnalyticProfile& u, const std::vector<double>& grid);
ResidualReport residual_report(const ModelManifold& M, const Triple& tr, const WeightProfile& b,
                               const RadialFunction& u, const std::vector<double>& breaks = {});

// (φ(u'))' + d(r) φ(u') - rhs(r, u, u')
ResidualReport residual_report(const Phi& phi, const Fn& drift, const RhsFn& rhs, const AnalyticProfile& u,
                               const std::vector<double>& grid);
ResidualReport residual_report(const Phi& phi, const Fn& drift, const RhsFn& rhs, const RadialFunction& u,
                               const std::vector<double>& breaks = {});

// Recomputes a construct profile's residual from its samples of w' only (never from its w'').
ResidualReport residual_report(const CertifiedProfile& P, const Phi& phi);
// Every node satisfies the profile's relation (<= 0, or = 0 within its tolerance) within the band.
bool agrees_with(const CertifiedProfile& P, const ResidualReport& rep, std::string* where = nullptr);

// [℘ φ(w')]'/℘ - a f(w) l(|w'|), differencing the solver's flux
ResidualReport residual_report(const BvpSolution& s, const BvpProblem& problem);

// ---------------------------------------------------------------------------------------------- gallery

enum class CounterexampleFamily { CspIntro, CspSharp, WmpPower, WmpLog, SlSharp };

const char* to_string(CounterexampleFamily f);
CounterexampleFamily parse_counterexample_family(const std::string& s);

// One bag for all families; each family reads the fields it needs.
//   CspIntro  u = r^{-sigma} on g = exp(-r^alpha): m, alpha > 2, omega in (0,1), sigma
//   CspSharp  v = (1+r)^{-sigma} on g = exp(-t^delta), delta = 1 + alpha/2: m, alpha, mu, chi, omega, sigma, p
//   WmpPower  u = r^sigma, φ = t^{p-1}/(1+t)^{q-1}, K_rad = -kappa^2 (1+r^2)^{alpha/2}: m, kappa, alpha, p, q, chi, mu, sigma
//   WmpLog    u = r^sigma / log r, φ = t^{p-1}, same models: m, kappa, alpha, p, chi, mu, sigma
//   SlSharp   u = (1+r^2)^sigma, mean curvature φ, same models: m, kappa, alpha, chi, mu, omega, sigma
struct CounterexampleParams {
    int m = 3;
    double alpha = 3, kappa = 1;
    double p = 2, q = 1;
    double chi = 1, mu = 0, omega = 0.5;
    double sigma = 1;
};

enum class RangeVerdict { InRange, OutOfRange, Unsupported };

const char* to_string(RangeVerdict v);

struct RangeCheck {
    RangeVerdict verdict = RangeVerdict::OutOfRange;
    std::string clause;  // the satisfied case, or the first failing inequality
};

RangeCheck admissible_range(CounterexampleFamily family, const CounterexampleParams& params);

enum class GalleryVerdict { Consistent, Inconsistent, Unsupported };

const char* to_string(GalleryVerdict v);

struct CounterexampleResult {
    RangeCheck range;
    double K = 0;             // constant in front of the right-hand side
    double R_start = 0;
    double R = 0;             // left end of the last window
    bool stabilized = false;
    bool eventually_nonnegative = false;
    bool negative_found = false;
    GalleryVerdict verdict = GalleryVerdict::Inconsistent;
    ResidualReport report;    // last window
    std::vector<std::string> trace;
};

struct GalleryOptions {
    int max_doublings = 40;
    int per_decade = 40;
    double relative_band = 1e-8;
};

CounterexampleResult counterexample_check(CounterexampleFamily family, const CounterexampleParams& params,
                                          const GalleryOptions& opt = {});

// ---------------------------------------------------------------------------------------------- theorems

struct TheoremParams {
    int m = 3;
    double p = 2, p_bar = 2;
    double kappa = 0, alpha = -2;
    double mu = 0, chi = 1;
    double chi1 = std::numeric_limits<double>::quiet_NaN();  // NaN: chi
    double chi2 = std::numeric_limits<double>::quiet_NaN();
    double omega = std::numeric_limits<double>::quiet_NaN();  // NaN: KO clauses are not evaluated
    double V_inf = std::numeric_limits<double>::quiet_NaN();  // NaN: unknown
};

struct TheoremVerdict {
    std::string theorem;  // SMP, WMP, CSP, SL
    bool applicable = false;
    std::string failed_clause;
};

std::vector<TheoremVerdict> theorem_applicability(const TheoremParams& params);

}  // namespace qlab
