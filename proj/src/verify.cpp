#include "qlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "qlab/ko.hpp"
#include "qlab/numerics.hpp"

namespace qlab {

namespace {

constexpr double kBand = 1e-8;
constexpr double kEq = 1e-12;  // equality in the parameter ranges

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

double phi_odd(const Phi& phi, double s) { return s < 0 ? -phi(-s) : phi(s); }

// a * b with 0 * inf = 0 (φ'(0) can be infinite when w'' vanishes)
double times(double a, double b) { return b == 0 || a == 0 ? 0.0 : a * b; }

// derivative at x[i] of the polynomial through the nodes idx
double lagrange_deriv(const std::vector<double>& x, const std::vector<double>& y, std::size_t i,
                      const std::vector<std::size_t>& idx) {
    double xi = x[i], d = 0;
    for (std::size_t j : idx) {
        double wj;
        if (j == i) {
            wj = 0;
            for (std::size_t k : idx)
                if (k != i) wj += 1 / (xi - x[k]);
        } else {
            double num = 1, den = 1;
            for (std::size_t k : idx) {
                if (k == j) continue;
                den *= x[j] - x[k];
                if (k != i) num *= xi - x[k];
            }
            wj = num / den;
        }
        d += wj * y[j];
    }
    return d;
}

std::size_t segment(const std::vector<double>& breaks, double r) {
    return static_cast<std::size_t>(std::upper_bound(breaks.begin(), breaks.end(), r) - breaks.begin());
}

// d/dr of y at node i from up to `width` nodes of the same segment
double stencil(const std::vector<double>& r, const std::vector<double>& y, std::size_t i,
               const std::vector<double>& breaks, std::size_t width = 5) {
    std::size_t seg = segment(breaks, r[i]);
    std::size_t lo = i, hi = i;
    while (lo > 0 && segment(breaks, r[lo - 1]) == seg && i - lo < width - 1) --lo;
    while (hi + 1 < r.size() && segment(breaks, r[hi + 1]) == seg && hi - i < width - 1) ++hi;
    // centre the window inside [lo, hi]
    std::size_t half = (width - 1) / 2;
    std::size_t a = i >= lo + half ? i - half : lo;
    std::size_t b = std::min(hi, a + width - 1);
    if (b - a < width - 1) a = b >= lo + width - 1 ? b - (width - 1) : lo;
    if (b == a) return 0;
    std::vector<std::size_t> idx;
    for (std::size_t k = a; k <= b; ++k) idx.push_back(k);
    return lagrange_deriv(r, y, i, idx);
}

void summarize(ResidualReport& rep) {
    std::size_t n = rep.r.size();
    rep.residual.resize(n);
    rep.relative.resize(n);
    double rhs_max = 0;
    rep.min = kInf;
    rep.max = -kInf;
    rep.relative_min = kInf;
    rep.relative_max = -kInf;
    for (std::size_t i = 0; i < n; ++i) {
        double res = rep.lhs[i] - rep.rhs[i];
        double scale = std::fabs(rep.lhs[i]) + std::fabs(rep.rhs[i]);
        rep.residual[i] = res;
        rep.relative[i] = scale > 0 ? res / scale : 0.0;
        rhs_max = std::max(rhs_max, std::fabs(rep.rhs[i]));
        if (res < rep.min) {
            rep.min = res;
            rep.argmin = rep.r[i];
        }
        if (res > rep.max) {
            rep.max = res;
            rep.argmax = rep.r[i];
        }
        rep.relative_min = std::min(rep.relative_min, rep.relative[i]);
        rep.relative_max = std::max(rep.relative_max, rep.relative[i]);
    }
    if (n == 0) rep.min = rep.max = rep.relative_min = rep.relative_max = 0;
    rep.band = kBand * (1 + rhs_max);
    bool nonneg = rep.min >= -rep.band, nonpos = rep.max <= rep.band;
    rep.sign = nonneg && nonpos ? SignVerdict::Zero
               : nonneg         ? SignVerdict::NonNegative
               : nonpos         ? SignVerdict::NonPositive
                                : SignVerdict::Mixed;
}

RhsFn model_rhs(const Triple& tr, const WeightProfile& b) {
    return [tr, b](double r, double u, double up) {
        double fu = tr.f(u);
        return fu == 0 ? 0.0 : b(r) * fu * tr.l(std::fabs(up));
    };
}

}  // namespace

const char* to_string(SignVerdict s) {
    switch (s) {
        case SignVerdict::NonNegative: return ">=0";
        case SignVerdict::NonPositive: return "<=0";
        case SignVerdict::Zero: return "=0";
        case SignVerdict::Mixed: return "mixed";
    }
    return "?";
}

double phi_laplacian_radial(const ModelManifold& M, const Phi& phi, const AnalyticProfile& w, double r) {
    double up = w.up(r);
    return times(phi.deriv(std::fabs(up)), w.upp(r)) + times(phi_odd(phi, up), M.laplacian(r));
}

double phi_laplacian_radial(const ModelManifold& M, const Phi& phi, const RadialFunction& w, std::size_t i,
                            const std::vector<double>& breaks) {
    std::vector<double> fl(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) fl[k] = phi_odd(phi, w.wp[k]);
    return stencil(w.r, fl, i, breaks) + times(fl[i], M.laplacian(w.r[i]));
}

ResidualReport residual_report(const Phi& phi, const Fn& drift, const RhsFn& rhs, const AnalyticProfile& u,
                               const std::vector<double>& grid) {
    ResidualReport rep;
    for (double r : grid) {
        double up = u.up(r), w = u.u(r);
        double d = drift ? drift(r) : 0.0;
        rep.r.push_back(r);
        rep.u.push_back(w);
        rep.up.push_back(up);
        rep.lhs.push_back(times(phi.deriv(std::fabs(up)), u.upp(r)) + times(phi_odd(phi, up), d));
        rep.rhs.push_back(rhs(r, w, up));
    }
    summarize(rep);
    return rep;
}

ResidualReport residual_report(const Phi& phi, const Fn& drift, const RhsFn& rhs, const RadialFunction& u,
                               const std::vector<double>& breaks) {
    ResidualReport rep;
    std::vector<double> br = breaks;
    std::sort(br.begin(), br.end());
    std::size_t n = u.size();
    std::vector<double> fl(n);
    for (std::size_t k = 0; k < n; ++k) fl[k] = phi_odd(phi, u.wp[k]);
    rep.r = u.r;
    rep.u = u.w;
    rep.up = u.wp;
    rep.lhs.resize(n);
    rep.rhs.resize(n);
    rep.stencil_error.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double d = drift ? drift(u.r[i]) : 0.0;
        double d5 = stencil(u.r, fl, i, br);
        rep.lhs[i] = d5 + times(fl[i], d);
        rep.stencil_error[i] = std::fabs(d5 - stencil(u.r, fl, i, br, 7));
        rep.rhs[i] = rhs(u.r[i], u.w[i], u.wp[i]);
    }
    summarize(rep);
    return rep;
}

ResidualReport residual_report(const ModelManifold& M, const Triple& tr, const WeightProfile& b,
                               const AnalyticProfile& u, const std::vector<double>& grid) {
    return residual_report(tr.phi, [&M](double r) { return M.laplacian(r); }, model_rhs(tr, b), u, grid);
}

ResidualReport residual_report(const ModelManifold& M, const Triple& tr, const WeightProfile& b,
                               const RadialFunction& u, const std::vector<double>& breaks) {
    return residual_report(tr.phi, [&M](double r) { return M.laplacian(r); }, model_rhs(tr, b), u, breaks);
}

ResidualReport residual_report(const CertifiedProfile& P, const Phi& phi) {
    std::vector<double> breaks;
    if (std::isfinite(P.support_end)) breaks.push_back(P.support_end);
    return residual_report(phi, P.drift, P.rhs_fn, P.w, breaks);
}

bool agrees_with(const CertifiedProfile& P, const ResidualReport& rep, std::string* where) {
    double tol = std::max(rep.band, P.tolerance);
    for (std::size_t i = 0; i < rep.r.size(); ++i) {
        double v = rep.residual[i];
        double band = tol + (i < rep.stencil_error.size() ? rep.stencil_error[i] : 0.0);
        bool ok = P.equality ? std::fabs(v) <= band : v <= band;
        if (!ok) {
            if (where)
                *where = "r = " + fmt(rep.r[i]) + ": residual " + fmt(v) + " against band " + fmt(band) +
                         " (profile residual " + fmt(i < P.residual.size() ? P.residual[i] : NAN) + ")";
            return false;
        }
    }
    return true;
}

ResidualReport residual_report(const BvpSolution& s, const BvpProblem& problem) {
    // [℘ φ(w')]' - ℘ a f(w) l(|w'|), differentiating the flux itself
    ResidualReport rep;
    const auto& t = s.w.r;
    std::size_t n = t.size();
    rep.r = t;
    rep.u = s.w.w;
    rep.up = s.w.wp;
    rep.lhs.resize(n);
    rep.rhs.resize(n);
    const Triple& tr = problem.triple;
    for (std::size_t i = 0; i < n; ++i) {
        rep.lhs[i] = stencil(t, s.flux, i, {});
        double fw = tr.f(s.w.w[i]);
        rep.rhs[i] = fw == 0 ? 0.0 : problem.volume(t[i]) * problem.a(t[i]) * fw * tr.l(std::fabs(s.w.wp[i]));
    }
    summarize(rep);
    return rep;
}

// ---------------------------------------------------------------------------------------------- gallery

const char* to_string(CounterexampleFamily f) {
    switch (f) {
        case CounterexampleFamily::CspIntro: return "csp-intro";
        case CounterexampleFamily::CspSharp: return "csp-sharp";
        case CounterexampleFamily::WmpPower: return "wmp-power";
        case CounterexampleFamily::WmpLog: return "wmp-log";
        case CounterexampleFamily::SlSharp: return "sl-sharp";
    }
    return "?";
}

CounterexampleFamily parse_counterexample_family(const std::string& s) {
    for (auto f : {CounterexampleFamily::CspIntro, CounterexampleFamily::CspSharp, CounterexampleFamily::WmpPower,
                   CounterexampleFamily::WmpLog, CounterexampleFamily::SlSharp})
        if (s == to_string(f)) return f;
    throw Error(ErrorKind::Config, "unknown counterexample family '" + s + "'");
}

const char* to_string(RangeVerdict v) {
    switch (v) {
        case RangeVerdict::InRange: return "in-range";
        case RangeVerdict::OutOfRange: return "out-of-range";
        case RangeVerdict::Unsupported: return "unsupported";
    }
    return "?";
}

const char* to_string(GalleryVerdict v) {
    switch (v) {
        case GalleryVerdict::Consistent: return "Consistent";
        case GalleryVerdict::Inconsistent: return "Inconsistent";
        case GalleryVerdict::Unsupported: return "Unsupported";
    }
    return "?";
}

namespace {

RangeCheck in(const std::string& c) { return {RangeVerdict::InRange, c}; }
RangeCheck out(const std::string& c) { return {RangeVerdict::OutOfRange, c}; }

bool eq(double a, double b) { return std::fabs(a - b) <= kEq * std::max(1.0, std::fabs(a) + std::fabs(b)); }
bool le(double a, double b) { return a <= b || eq(a, b); }
bool lt(double a, double b) { return a < b && !eq(a, b); }

// Δr = zeta_inf r^{alpha/2} (1 + o(1)) on the curvature models
double zeta_inf(const CounterexampleParams& P) {
    return P.alpha > -2 ? (P.m - 1) * P.kappa : (P.m - 1) * kappa_bar(P.kappa);
}

RangeCheck range_csp_intro(const CounterexampleParams& P) {
    if (!(P.alpha > 2)) return out("α > 2");
    if (!(P.omega > 0 && P.omega < 1)) return out("ω ∈ (0,1)");
    if (!(P.sigma > 0 && le(P.sigma, (P.alpha - 2) / (1 - P.omega)))) return out("β ∈ (0, (α−2)/(1−ω)]");
    return in("β ∈ (0, (α−2)/(1−ω)]");
}

RangeCheck range_csp_sharp(const CounterexampleParams& P) {
    double a2 = P.alpha / 2;
    if (!(P.alpha >= -2) || !(P.p > 1)) return out("α ≥ −2, p > 1");
    if (!lt(P.chi - a2, P.mu)) return out("μ > χ − α/2");
    if (!(P.omega < P.chi)) return out("ω < χ");
    if (!(P.sigma > 0 && le(P.sigma, (P.mu - P.chi + a2) / (P.chi - P.omega))))
        return out("σ ∈ (0, (μ−χ+α/2)/(χ−ω)]");
    return in("σ ∈ (0, (μ−χ+α/2)/(χ−ω)]");
}

RangeCheck range_wmp_power(const CounterexampleParams& P) {
    if (!(P.alpha >= -2) || !(P.p > 1) || !(P.q >= 1 && P.q <= P.p) || !(P.kappa > 0))
        return out("α ≥ −2, p > 1, 1 ≤ q ≤ p, κ > 0");
    if (!(P.chi >= 0 && P.chi <= P.p - 1)) return out("0 ≤ χ ≤ p − 1");
    if (!(P.sigma > 0)) return out("σ > 0");
    double e0 = P.chi + 1 - P.mu - P.chi * P.sigma;
    double vol = (P.m - 1) * kappa_bar(P.kappa) + 1;  // lim log vol B_r / log r for alpha = -2
    bool growth3 = vol > P.p - P.sigma * (P.p - 1);
    bool euclid = P.alpha == -2;
    if (lt(0, -e0)) {
        // the profile needs the growth of 3) too when sigma < 1 and alpha = -2
        if (euclid && P.sigma < 1 && !growth3) return out("(m−1)κ̄ + 1 > p − σ(p−1)");
        return in("1) χσ > χ+1−μ");
    }
    if (eq(e0, 0)) {
        if (!euclid) return in("2) χσ = χ+1−μ, α > −2");
        if (P.sigma <= 1) {
            if (growth3) return in("3) χσ = χ+1−μ, α = −2, σ ∈ (0,1], (m−1)κ̄ + 1 > p − σ(p−1)");
            return out("(m−1)κ̄ + 1 > p − σ(p−1)");
        }
        double pb = P.p - P.q;
        if (vol > pb - P.sigma * (pb - 1))
            return {RangeVerdict::Unsupported, "3′) χσ = χ+1−μ, α = −2, σ > 1: not covered by the counterexamples"};
        return out("(m−1)κ̄ + 1 > p̄ − σ(p̄−1)");
    }
    if (euclid) return out("χσ < χ+1−μ needs α > −2");
    if (!le(e0, P.alpha / 2 + 1)) return out("α/2 + 1 ≥ χ+1−μ−χσ");
    return in("4) χσ < χ+1−μ, α > −2, α/2 + 1 ≥ χ+1−μ−χσ");
}

RangeCheck range_wmp_log(const CounterexampleParams& P) {
    if (!(P.alpha >= -2) || !(P.p > 1) || !(P.kappa > 0)) return out("α ≥ −2, p > 1, κ > 0");
    if (!(P.chi >= 0 && P.chi <= P.p - 1)) return out("0 ≤ χ ≤ p − 1");
    if (!(P.sigma > 0)) return out("σ > 0");
    double e0 = P.chi + 1 - P.mu - P.chi * P.sigma;
    if (!lt(0, e0)) return out("χσ < χ+1−μ");
    // log vol B_r ~ r^{1+alpha/2}; for alpha = -2 the ratio to r^{e0} tends to 0
    if (!(P.alpha > -2)) return out("α > −2");
    double g = P.alpha / 2 + 1;
    if (P.chi > 0) {
        if (lt(e0, g)) return in("5) χσ < χ+1−μ, χ > 0, 1 + α/2 > χ+1−μ−χσ");
        return out("1 + α/2 > χ+1−μ−χσ");
    }
    if (eq(e0, g)) return in("6) χσ < χ+1−μ, χ = 0, 1 + α/2 = χ+1−μ−χσ");
    return out("1 + α/2 = χ+1−μ−χσ");
}

RangeCheck range_sl_sharp(const CounterexampleParams& P) {
    if (!(P.alpha >= -2) || !(P.kappa > 0) || !(P.chi >= 0) || !(P.omega >= 0))
        return out("α ≥ −2, κ > 0, χ ≥ 0, ω ≥ 0");
    if (!(P.sigma > 1)) return out("σ > 1");
    if (!le(2 * P.sigma * (P.omega - P.chi), P.alpha / 2 + P.mu - P.chi)) return out("2σ(ω−χ) ≤ α/2 + μ − χ");
    return in("2σ(ω−χ) ≤ α/2 + μ − χ");
}

struct Setup {
    ModelManifold model = ModelManifold::euclidean(2);
    Triple triple;
    WeightProfile b = WeightProfile::power_decay(0);
    AnalyticProfile u;
    double K = 1;
    double R_start = 2;
};

Nonlinearity power_f(double omega) {
    return Nonlinearity::custom([omega](double t) { return std::pow(t, omega); });
}

Setup setup(CounterexampleFamily family, const CounterexampleParams& P) {
    Setup S;
    double s = P.sigma;
    switch (family) {
        case CounterexampleFamily::CspIntro: {
            // Δu = s(s+1) r^{-s-2} + (m-1) α s r^{α-s-2} against K u^ω
            S.model = ModelManifold::example_pinch(P.m, P.alpha);
            S.K = 0.5 * (P.m - 1) * P.alpha * s;
            S.triple = {Phi::power_law(2), GradientTerm::constant(1), power_f(P.omega), {}};
            S.b = WeightProfile::power_decay(0, S.K);
            S.u = {[s](double r) { return std::pow(r, -s); }, [s](double r) { return -s * std::pow(r, -s - 1); },
                   [s](double r) { return s * (s + 1) * std::pow(r, -s - 2); }};
            break;
        }
        case CounterexampleFamily::CspSharp: {
            // coordinates t = 1 + r on g = exp(-t^delta); v = t^{-s}, weight t^{-mu}
            double delta = 1 + P.alpha / 2;
            S.model = ModelManifold::example_pinch(P.m, delta);
            double lead = delta > 0 ? (P.m - 1) * delta : (P.p - 1) * (s + 1);
            S.K = 0.5 * lead * std::pow(s, P.chi);
            double e = P.p - 1 - P.chi, mu = P.mu, K = S.K;
            S.triple = {Phi::power_law(P.p), GradientTerm::custom([e](double t) { return std::pow(t, e); }),
                        power_f(P.omega), {}};
            S.b = WeightProfile::custom([K, mu](double t) { return K * std::pow(t, -mu); });
            S.u = {[s](double t) { return std::pow(t, -s); }, [s](double t) { return -s * std::pow(t, -s - 1); },
                   [s](double t) { return s * (s + 1) * std::pow(t, -s - 2); }};
            break;
        }
        case CounterexampleFamily::WmpPower: {
            S.model = ModelManifold::jacobi_power(P.m, P.kappa, P.alpha);
            double A = s < 1 ? P.p - 1 : P.p - P.q;
            double lead = zeta_inf(P) + (P.alpha > -2 ? 0.0 : A * (s - 1));
            if (!(lead > 0)) lead = zeta_inf(P);
            S.K = 0.5 * lead * std::pow(s, P.chi);
            Phi phi = Phi::rational_power(P.p, P.q);
            S.triple = {phi, GradientTerm::phi_quotient(phi, P.chi), Nonlinearity::power(0), {}};
            S.b = WeightProfile::power_decay(P.mu, S.K);
            S.u = {[s](double r) { return std::pow(r, s); }, [s](double r) { return s * std::pow(r, s - 1); },
                   [s](double r) { return s * (s - 1) * std::pow(r, s - 2); }};
            break;
        }
        case CounterexampleFamily::WmpLog: {
            S.model = ModelManifold::jacobi_power(P.m, P.kappa, P.alpha);
            S.K = 0.5 * zeta_inf(P) * std::pow(s, P.chi);
            Phi phi = Phi::power_law(P.p);
            S.triple = {phi, GradientTerm::phi_quotient(phi, P.chi), Nonlinearity::power(0), {}};
            S.b = WeightProfile::power_decay(P.mu, S.K);
            S.u = {[s](double r) { return std::pow(r, s) / std::log(r); },
                   [s](double r) {
                       double L = std::log(r);
                       return std::pow(r, s - 1) * (s * L - 1) / (L * L);
                   },
                   [s](double r) {
                       double L = std::log(r);
                       return std::pow(r, s - 2) * (s * (s - 1) / L - (2 * s - 1) / (L * L) + 2 / (L * L * L));
                   }};
            // u' > 0 needs log r > 1/s
            S.R_start = std::max(2.0, std::exp(2 / s));
            break;
        }
        case CounterexampleFamily::SlSharp: {
            S.model = ModelManifold::jacobi_power(P.m, P.kappa, P.alpha);
            S.K = 0.5 * zeta_inf(P) * std::pow(2 * s, P.chi);
            Phi phi = Phi::mean_curvature();
            S.triple = {phi, GradientTerm::phi_quotient(phi, P.chi), power_f(P.omega), {}};
            S.b = WeightProfile::power_decay(P.mu, S.K);
            S.u = {[s](double r) { return std::pow(1 + r * r, s); },
                   [s](double r) { return 2 * s * r * std::pow(1 + r * r, s - 1); },
                   [s](double r) {
                       double q = 1 + r * r;
                       return 2 * s * std::pow(q, s - 2) * (1 + (2 * s - 1) * r * r);
                   }};
            break;
        }
    }
    return S;
}

bool finite_report(const ResidualReport& rep) {
    for (std::size_t i = 0; i < rep.r.size(); ++i)
        if (!std::isfinite(rep.lhs[i]) || !std::isfinite(rep.rhs[i])) return false;
    return true;
}

}  // namespace

RangeCheck admissible_range(CounterexampleFamily family, const CounterexampleParams& P) {
    if (P.m < 2) return out("m ≥ 2");
    switch (family) {
        case CounterexampleFamily::CspIntro: return range_csp_intro(P);
        case CounterexampleFamily::CspSharp: return range_csp_sharp(P);
        case CounterexampleFamily::WmpPower: return range_wmp_power(P);
        case CounterexampleFamily::WmpLog: return range_wmp_log(P);
        case CounterexampleFamily::SlSharp: return range_sl_sharp(P);
    }
    return out("unknown family");
}

CounterexampleResult counterexample_check(CounterexampleFamily family, const CounterexampleParams& P,
                                          const GalleryOptions& opt) {
    CounterexampleResult res;
    res.range = admissible_range(family, P);
    res.trace.push_back(std::string(to_string(family)) + ": " + to_string(res.range.verdict) + " (" +
                        res.range.clause + ")");
    if (res.range.verdict == RangeVerdict::Unsupported) {
        res.verdict = GalleryVerdict::Unsupported;
        return res;
    }
    Setup S = setup(family, P);
    res.K = S.K;
    res.R_start = S.R_start;
    double R = S.R_start, prev_min = 0;
    int prev_cls = -1, cls = -1;
    for (int k = 0; k <= opt.max_doublings; ++k) {
        auto grid = num::log_grid(R, 100 * R, opt.per_decade);
        auto rep = residual_report(S.model, S.triple, S.b, S.u, grid);
        if (!finite_report(rep)) {
            res.trace.push_back("R = " + fmt(R) + ": values leave double range, scan stopped");
            break;
        }
        cls = rep.relative_min >= -opt.relative_band ? 1 : 0;
        if (cls == 0) res.negative_found = true;
        res.trace.push_back("R = " + fmt(R) + ": min relative residual " + fmt(rep.relative_min) + " at r = " +
                            fmt(rep.r[std::min_element(rep.relative.begin(), rep.relative.end()) -
                                      rep.relative.begin()]));
        res.report = std::move(rep);
        res.R = R;
        // a negative window settles when it keeps getting worse; a nonnegative one when its decline
        // would need more than 20 further doublings to reach zero
        double drop = prev_min - res.report.relative_min;
        bool settled = cls == 1 ? drop <= 0 || res.report.relative_min >= 20 * drop : drop > 0;
        if (k > 0 && cls == prev_cls && settled) {
            res.stabilized = true;
            break;
        }
        prev_cls = cls;
        prev_min = res.report.relative_min;
        R *= 2;
    }
    // without a settled pair the last window decides
    res.eventually_nonnegative = cls == 1;
    bool in_range = res.range.verdict == RangeVerdict::InRange;
    res.verdict = !in_range || res.eventually_nonnegative ? GalleryVerdict::Consistent
                                                          : GalleryVerdict::Inconsistent;
    res.trace.push_back(std::string(res.stabilized ? "stabilized" : "not stabilized") + " at R = " + fmt(res.R) +
                        ", verdict " + to_string(res.verdict));
    return res;
}

// ---------------------------------------------------------------------------------------------- theorems

namespace {

TheoremVerdict yes(const std::string& id) { return {id, true, ""}; }
TheoremVerdict no(const std::string& id, const std::string& clause) { return {id, false, clause}; }

Verdict ko_power(const TheoremParams& P, Endpoint e) {
    Phi phi = Phi::power_law(P.p);
    Triple tr{phi, GradientTerm::phi_quotient(phi, P.chi), Nonlinearity::power(P.omega), {}};
    return ko_verdict(tr, e).outcome;
}

TheoremVerdict smp(const TheoremParams& P) {
    const char* id = "SMP";
    if (!le(P.mu, P.chi - P.alpha / 2)) return no(id, "μ ≤ χ − α/2");
    if (P.chi > 0) return yes(id);
    if (!(P.alpha == -2 && P.chi == 0 && kappa_bar(P.kappa) <= (P.p - 1) / (P.m - 1)))
        return no(id, "α = −2, χ = 0 and κ̄ ≤ (p−1)/(m−1)");
    return yes(id);
}

TheoremVerdict wmp(const TheoremParams& P) {
    const char* id = "WMP";
    double a2 = P.alpha / 2;
    if (!le(P.mu, P.chi - a2)) return no(id, "μ ≤ χ − α/2");
    if (P.chi > 0) return yes(id);
    if (lt(P.mu, -a2)) return yes(id);
    // chi = 0 and mu = -alpha/2: the volume clauses decide
    if (P.alpha > -2) {
        if (P.V_inf == 0) return yes(id);
        return no(id, "α > −2, χ = 0, μ = −α/2, V∞ = 0");
    }
    if (P.V_inf <= P.p) return yes(id);
    return no(id, "α = −2, χ = 0, μ = −α/2, V∞ ≤ p");
}

TheoremVerdict csp(const TheoremParams& P) {
    const char* id = "CSP";
    if (!(P.chi > 0)) return no(id, "χ > 0");
    if (!le(P.mu, P.chi - P.alpha / 2)) return no(id, "μ ≤ χ − α/2");
    if (!std::isnan(P.omega) && ko_power(P, Endpoint::Zero) != Verdict::Holds) return no(id, "(KO₀) ⇔ ω < χ");
    return yes(id);
}

TheoremVerdict sl(const TheoremParams& P) {
    const char* id = "SL";
    double c1 = std::isnan(P.chi1) ? P.chi : P.chi1;
    double c2 = std::isnan(P.chi2) ? P.chi : P.chi2;
    if (!(c1 > 0 && c2 > 0)) return no(id, "χ₁ > 0, χ₂ > 0");
    if (!le(P.mu, c1 + 1)) return no(id, "μ ≤ χ₁ + 1");
    if (!le(P.mu, c2 - P.alpha / 2)) return no(id, "μ ≤ χ₂ − α/2");
    if (!std::isnan(P.omega) && ko_power(P, Endpoint::Infinity) != Verdict::Holds) return no(id, "(KO) ⇔ ω > χ");
    return yes(id);
}

}  // namespace

std::vector<TheoremVerdict> theorem_applicability(const TheoremParams& P) {
    if (!(P.alpha >= -2) || !(P.p > 1) || !(P.chi >= 0) || P.m < 2) {
        std::vector<TheoremVerdict> all;
        for (const char* id : {"SMP", "WMP", "CSP", "SL"}) all.push_back(no(id, "α ≥ −2, p > 1, χ ≥ 0, m ≥ 2"));
        return all;
    }
    return {smp(P), wmp(P), csp(P), sl(P)};
}

}  // namespace qlab
