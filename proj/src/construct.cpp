#include "qlab/construct.hpp"

#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <map>
#include <memory>
#include <sstream>

#include "qlab/bvp.hpp"
#include "qlab/ko.hpp"
#include "qlab/numerics.hpp"

namespace qlab {

namespace odeint = boost::numeric::odeint;

const char* to_string(SupersolutionKind k) {
    switch (k) {
        case SupersolutionKind::CspA: return "cspA";
        case SupersolutionKind::CspB: return "cspB";
        case SupersolutionKind::SlBlowup: return "sl";
        case SupersolutionKind::SlBlowupMC: return "sl-mc";
        case SupersolutionKind::Khasminskii: return "khasminskii";
        case SupersolutionKind::ExteriorDirichlet: return "exterior";
    }
    return "?";
}

SupersolutionKind parse_supersolution_kind(const std::string& s) {
    for (auto k : {SupersolutionKind::CspA, SupersolutionKind::CspB, SupersolutionKind::SlBlowup,
                   SupersolutionKind::SlBlowupMC, SupersolutionKind::Khasminskii, SupersolutionKind::ExteriorDirichlet})
        if (s == to_string(k)) return k;
    throw Error(ErrorKind::Config, "unknown construction kind '" + s + "'");
}

bool CertifiedProfile::all_passed() const {
    for (const auto& c : certificates)
        if (!c.passed) return false;
    return !certificates.empty();
}

const Certificate* CertifiedProfile::find(const std::string& name) const {
    for (const auto& c : certificates)
        if (c.name == name) return &c;
    return nullptr;
}

namespace {

// search headroom: a candidate is accepted only with lhs <= (1 - kMargin) rhs at every node
constexpr double kMargin = 1e-3;
constexpr double kBand = 1e-8;
constexpr double kDiverged = 1e10;

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

double infer_chi(const SupersolutionSpec& spec) {
    if (std::isfinite(spec.chi)) return spec.chi;
    const auto& l = spec.triple.l;
    if (l.kind() == GradientTerm::Kind::PhiQuotient) return l.chi();
    auto pz = spec.triple.phi.zero_exponent();
    auto lz = l.zero_exponent();
    if (pz && lz) return *pz - *lz;
    throw Error(ErrorKind::ConditionFailed, "gradient exponent chi unknown for " + l.name() + "; set chi");
}

Fn zero_fn() {
    return [](double) { return 0.0; };
}

// CSP strategies use θ >= max(0, -Δr), SL uses θ >= max(0, Δr)
Fn drift_bound(const SupersolutionSpec& spec, bool csp) {
    if (spec.theta) return spec.theta;
    if (!spec.model) return zero_fn();
    ModelManifold M = *spec.model;
    if (csp) return [M](double r) { return std::max(0.0, -M.laplacian(r)); };
    return [M](double r) { return std::max(0.0, M.laplacian(r)); };
}

Fn volume(const SupersolutionSpec& spec) {
    if (!spec.model) return [](double) { return 1.0; };
    ModelManifold M = *spec.model;
    return [M](double r) { return M.v(r); };
}

Fn log_volume_slope(const SupersolutionSpec& spec) {
    if (!spec.model) return zero_fn();
    ModelManifold M = *spec.model;
    return [M](double r) { return M.laplacian(r); };
}

void require(ConditionId id, const Triple& tr, const WeightProfile* w, std::vector<std::string>& trace,
             ConditionOptions opt = {}) {
    if (opt.per_decade == ConditionOptions{}.per_decade) opt.per_decade = 200;
    auto rep = check_condition(id, tr, w, opt);
    trace.push_back(std::string("condition ") + to_string(id) + ": " + to_string(rep.verdict) + " (" + rep.detail +
                    " = " + fmt(rep.constant) + ")");
    if (rep.verdict == Verdict::Fails) throw Error(ErrorKind::ConditionFailed, to_string(id));
}

// sup of h over [lo, hi] by decades; Fails when the decade sups keep growing
double require_bounded(const std::string& id, const Fn& h, double lo, double hi, std::vector<std::string>& trace,
                       ErrorKind kind = ErrorKind::ConditionFailed) {
    std::vector<double> sups;
    double m = 0;
    for (double a = lo; a < hi * (1 - 1e-12); a *= 10) {
        for (double t : num::log_grid(a, std::min(10 * a, hi), 40)) {
            double v = h(t);
            if (std::isnan(v)) v = kInf;
            m = std::max(m, v);
        }
        sups.push_back(m);
    }
    Verdict v = sups.size() >= 4 ? sup_verdict(sups) : (std::isfinite(m) ? Verdict::Holds : Verdict::Fails);
    trace.push_back(id + ": sup = " + fmt(m) + ", " + to_string(v));
    if (v == Verdict::Fails || !std::isfinite(m)) throw Error(kind, id);
    return m;
}

// K^{-1} and its derivative
struct InvK {
    Fn value, deriv;
};

InvK standard_inverse(const Triple& tr, KernelKind kind = KernelKind::Standard) {
    auto K = std::make_shared<Kernel>(tr, kind);
    return {[K](double y) { return y <= 0 ? 0.0 : (std::isinf(y) ? kInf : K->inverse(y)); },
            [K](double y) { return 1 / K->deriv(K->inverse(y)); }};
}

InvK power_inverse(double chi) {
    double e = 1 / (chi + 1);
    return {[e](double y) { return y <= 0 ? 0.0 : std::pow(y, e); },
            [e](double y) { return y <= 0 ? kInf : e * std::pow(y, e - 1); }};
}

// x >= a with ∫_a^x g = target, marching outward by doubling
double reach(const Fn& g, double a, double target, double step) {
    double acc = 0, lo = a, len = step;
    for (int k = 0; k < 200; ++k) {
        double hi = lo + len;
        double piece = num::integrate(g, lo, hi);
        if (acc + piece >= target) {
            double need = target - acc;
            return num::root([&](double x) { return num::integrate(g, lo, x) - need; }, lo, hi);
        }
        acc += piece;
        lo = hi;
        len *= 2;
    }
    throw Error(ErrorKind::SearchExhausted, "integral does not reach " + fmt(target));
}

std::vector<double> merged(std::vector<double> a) {
    std::sort(a.begin(), a.end());
    std::vector<double> out;
    for (double x : a)
        if (std::isfinite(x) && (out.empty() || x > out.back() + 1e-13 * std::max(1.0, std::fabs(x)))) out.push_back(x);
    return out;
}

Certificate cert(const std::string& name, bool ok, double value, double tol, const std::string& detail = "") {
    return {name, ok, value, tol, detail};
}

void fill_residual(CertifiedProfile& P) {
    P.residual.resize(P.lhs.size());
    for (std::size_t i = 0; i < P.lhs.size(); ++i) P.residual[i] = P.lhs[i] - P.rhs[i];
}

Certificate inequality_cert(const CertifiedProfile& P) {
    double scale = 1, worst = -kInf;
    for (double v : P.rhs) scale = std::max(scale, 1 + std::fabs(v));
    for (double v : P.residual) worst = std::max(worst, P.equality ? std::fabs(v) : v);
    double tol = P.tolerance > 0 ? P.tolerance : kBand * scale;
    return cert(P.equality ? "equation" : "inequality", worst <= tol, worst, tol,
                P.equality ? "max |lhs - rhs|" : "max (lhs - rhs)");
}

double roundtrip_error(const num::MonotoneIntegral& T, double a, double b) {
    double e = 0;
    for (double x : num::log_grid(a, b, 3)) e = std::max(e, std::fabs(T.inverse(T(x)) - x) / x);
    return e;
}

std::function<double(double, double, double)> make_rhs(const SupersolutionSpec& spec, double factor) {
    Triple tr = spec.triple;
    WeightProfile b = spec.beta;
    return [tr, b, factor](double r, double w, double wp) { return factor * b(r) * tr.f(w) * tr.l(std::fabs(wp)); };
}

GradientTerm clamped_l(const GradientTerm& l, double xi) {
    return GradientTerm::custom([l, xi](double t) { return l(std::min(std::fabs(t), xi)); }, l.zero_exponent(), 0.0);
}

// φ continued linearly beyond h; an unbounded φ is kept as it is, since profiles stay below h
Phi continued(const Phi& phi, double h) {
    if (!std::isfinite(phi.sup())) return phi;
    double ph = phi(h);
    double slope = std::max(phi.deriv(h), 1.0);
    return Phi::custom([phi, h, ph, slope](double t) { return t <= h ? phi(t) : ph + slope * (t - h); },
                       [phi, h, slope](double t) { return std::fabs(t) <= h ? phi.deriv(t) : slope; },
                       phi.zero_exponent(), 1.0, kInf);
}

// ---------------------------------------------------------------------------------------------- CSP

// Φ(a) = ∫_0^a ds / K^{-1}(F(s)), the profile side of both CSP strategies
struct CspProfileSide {
    const Triple& tr;
    InvK Kinv;
    double gamma0 = 0;

    explicit CspProfileSide(const Triple& t) : tr(t), Kinv(standard_inverse(t)) {
        gamma0 = num::local_exponent([this](double s) { return g(s); }, 1e-14, 1e-12);
        if (!(gamma0 > -1)) throw Error(ErrorKind::KellerOssermanViolated, "1/K^{-1}(F) is not integrable at 0");
    }
    double F(double s) const { return tr.f.primitive(s); }
    double g(double s) const { return 1 / Kinv.value(F(s)); }
    double rho(double w) const { return Kinv.value(F(w)); }

    num::MonotoneIntegral table(double lambda) const {
        std::vector<double> nodes{0.0};
        for (double a : num::log_grid(lambda * 1e-14, lambda, 8)) nodes.push_back(a);
        nodes.back() = lambda;
        return num::MonotoneIntegral([this](double s) { return g(s); }, nodes, num::MonotoneIntegral::Anchor::Left,
                                     gamma0);
    }

    // from Φ(w) = A(r): w' = ρ A', w'' = ρ A'' + A' (K^{-1})'(F) f w'
    void derivatives(double w, double Ap, double App, double& wp, double& wpp) const {
        double r = rho(w);
        wp = Ap * r;
        wpp = r * App + Ap * Kinv.deriv(F(w)) * tr.f(w) * wp;
    }
};

std::vector<double> levels_below(double top, double decades, int per_decade) {
    std::vector<double> out;
    int n = int(decades * per_decade);
    for (int k = 1; k <= n; ++k) out.push_back(top * std::pow(10.0, -double(k) / per_decade));
    return out;
}

struct CspCandidate {
    RadialFunction W;
    std::vector<double> lhs, rhs;
    bool ineq_ok = true;
    double gmax = 0;
};

// profile on [a, tail_end] from Φ(w(r)) = A(r), A decreasing to 0 at b, w = 0 beyond b
template <class AFn, class ApFn, class AppFn, class AinvFn>
CspCandidate csp_profile(const SupersolutionSpec& spec, const CspProfileSide& S, const num::MonotoneIntegral& Phi,
                         double lambda, double a, double b, double tail_end, const Fn& theta, AFn A, ApFn Ap,
                         AppFn App, AinvFn Ainv) {
    const Triple& tr = spec.triple;
    const WeightProfile& beta = spec.beta;
    std::vector<double> rs = num::lin_grid(a, b, std::max(50, spec.nodes / 2));
    std::map<double, double> at_level;
    for (double wk : levels_below(lambda, 12, 20)) {
        double r = Ainv(Phi(wk));
        if (r > a && r < b) {
            rs.push_back(r);
            at_level[r] = wk;
        }
    }
    for (int i = 1; i <= 20; ++i) rs.push_back(b + (tail_end - b) * i / 20.0);
    rs = merged(rs);

    CspCandidate c;
    std::size_t n = rs.size();
    c.W.r = rs;
    c.W.w.assign(n, 0);
    c.W.wp.assign(n, 0);
    c.W.wpp.assign(n, 0);
    c.lhs.assign(n, 0);
    c.rhs.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        double r = rs[i];
        if (r >= b) continue;
        auto it = at_level.find(r);
        double w = i == 0 ? lambda : (it != at_level.end() ? it->second : Phi.inverse(A(r)));
        if (!(w > 0)) continue;
        double wp, wpp;
        S.derivatives(w, Ap(r), App(r), wp, wpp);
        c.W.w[i] = w;
        c.W.wp[i] = wp;
        c.W.wpp[i] = wpp;
        c.lhs[i] = tr.phi.deriv(wp) * wpp - theta(r) * tr.phi(wp);
        c.rhs[i] = spec.eps * beta(r) * tr.f(w) * tr.l(std::fabs(wp));
        if (!(c.lhs[i] <= (1 - kMargin) * c.rhs[i])) c.ineq_ok = false;
        c.gmax = std::max(c.gmax, std::fabs(wp));
    }
    return c;
}

void csp_certificates(CertifiedProfile& P, const SupersolutionSpec& spec, double lambda, double a, double b,
                      double glue_gap, double roundtrip) {
    const auto& r = P.w.r;
    const auto& w = P.w.w;
    const auto& wp = P.w.wp;
    bool mono = true, bounds = true, support = true;
    double gmax = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] < b) {
            if (!(w[i] > 0)) support = false;
            if (!(wp[i] < 0)) mono = false;
        } else if (w[i] != 0 || wp[i] != 0) {
            support = false;
        }
        if (w[i] < 0 || w[i] > lambda * (1 + 1e-12)) bounds = false;
        gmax = std::max(gmax, std::fabs(wp[i]));
    }
    double cell = 0;
    for (std::size_t i = 1; i < r.size(); ++i) cell = std::max(cell, r[i] - r[i - 1]);
    P.certificates.push_back(
        cert("boundary", std::fabs(w[0] - lambda) <= 1e-12 * lambda && r[0] == a, w[0], lambda, "w(R) = lambda"));
    P.certificates.push_back(cert("bounds", bounds, lambda, 0, "0 <= w <= lambda"));
    P.certificates.push_back(cert("support", support, b, cell, "w > 0 on [R, R1), w = 0 on [R1, inf)"));
    P.certificates.push_back(cert("monotone", mono, 0, 0, "w' < 0 on [R, R1)"));
    P.certificates.push_back(cert("gradient", gmax <= spec.eps, gmax, spec.eps, "|w'| <= eps"));
    P.certificates.push_back(cert("c1_glue", glue_gap <= 1e-6, glue_gap, 1e-6, "one-sided slope at R1"));
    P.certificates.push_back(cert("roundtrip", roundtrip <= 1e-9, roundtrip, 1e-9, "Phi^{-1}(Phi(a)) = a"));
    fill_residual(P);
    P.certificates.push_back(inequality_cert(P));
}

void require_ko_zero(const SupersolutionSpec& spec, std::vector<std::string>& trace) {
    auto ko = ko_verdict(spec.triple, Endpoint::Zero);
    trace.push_back("KO at 0: " + ko.to_line());
    if (ko.outcome != Verdict::Holds)
        throw Error(ErrorKind::KellerOssermanViolated, std::string("KO at 0 is ") + to_string(ko.outcome));
}

CertifiedProfile build_csp_a(const SupersolutionSpec& spec) {
    CertifiedProfile P;
    P.kind = SupersolutionKind::CspA;
    const Triple& tr = spec.triple;
    auto& trace = P.trace;
    const WeightProfile& bb = spec.beta_bar;
    const WeightProfile& b = spec.beta;
    double R = spec.R;

    require_ko_zero(spec, trace);
    for (auto id : {ConditionId::C1, ConditionId::C2, ConditionId::C3, ConditionId::C4}) require(id, tr, nullptr, trace);
    ConditionOptions wopt;
    wopt.lo = std::max(R, 1e-6);
    require(ConditionId::beta1, tr, &bb, trace, wopt);
    require(ConditionId::beta2, tr, &bb, trace, wopt);
    Fn theta = drift_bound(spec, true);
    CspProfileSide S(tr);
    require_bounded("solu_radialCSP",
                    [&](double s) {
                        double q = bb(s) / b(s);
                        double th = theta(s);
                        if (th > 0) q = std::max(q, th * bb(s) / (b(s) * S.Kinv.value(bb(s))));
                        return q;
                    },
                    std::max(R, 1e-6), 1e8, trace);

    double sigma = 1, lambda = spec.lambda;
    bool flip = false;
    for (int step = 0;; ++step) {
        if (step == spec.max_search)
            throw Error(ErrorKind::SearchExhausted, "sigma, lambda halved " + std::to_string(spec.max_search) + " times");
        auto Phi = S.table(lambda);
        double target = Phi.total();
        Fn tau = [&](double r) { return S.Kinv.value(sigma * bb(r)); };
        double Rs = reach(tau, R, target, std::max(R, 1.0));
        double L = Rs - R;
        // B(u) = ∫_0^u τ(Rσ - s) ds, so Φ(w(r)) = B(Rσ - r)
        num::MonotoneIntegral B([&](double u) { return tau(Rs - u); }, num::lin_grid(0, L, 401),
                                num::MonotoneIntegral::Anchor::Left);
        auto c = csp_profile(
            spec, S, Phi, lambda, R, Rs, Rs + 0.5 * L, theta, [&](double r) { return B(Rs - r); },
            [&](double r) { return -tau(r); },
            [&](double r) { return -S.Kinv.deriv(sigma * bb(r)) * sigma * bb.deriv(r); },
            [&](double y) { return Rs - B.inverse(y); });
        bool grad_ok = c.gmax <= spec.eps;
        trace.push_back("sigma = " + fmt(sigma) + ", lambda = " + fmt(lambda) + ": R1 = " + fmt(Rs) +
                        ", max|w'| = " + fmt(c.gmax) + (c.ineq_ok ? "" : ", inequality fails") +
                        (grad_ok ? "" : ", gradient too large"));
        if (c.ineq_ok && grad_ok) {
            P.w = std::move(c.W);
            P.lhs = std::move(c.lhs);
            P.rhs = std::move(c.rhs);
            P.support_end = Rs;
            P.parameters = {{"sigma", sigma}, {"lambda", lambda}, {"R", R}, {"R1", Rs}, {"eps", spec.eps}};
            P.drift = [theta](double r) { return -theta(r); };
            P.rhs_fn = make_rhs(spec, spec.eps);
            double h = 1e-9 * L;
            double wh = Phi.inverse(B(h));
            double gap = std::max(wh / h, S.rho(wh) * tau(Rs - h));
            csp_certificates(P, spec, lambda, R, Rs, gap, roundtrip_error(Phi, lambda * 1e-10, lambda));
            return P;
        }
        if (!grad_ok || flip)
            lambda /= 2;
        else
            sigma /= 2;
        flip = !flip;
    }
}

CertifiedProfile build_csp_b(const SupersolutionSpec& spec) {
    CertifiedProfile P;
    P.kind = SupersolutionKind::CspB;
    const Triple& tr = spec.triple;
    auto& trace = P.trace;
    const WeightProfile& b = spec.beta;

    require_ko_zero(spec, trace);
    for (auto id : {ConditionId::C1, ConditionId::C2prime, ConditionId::C4}) require(id, tr, nullptr, trace);
    ConditionOptions wopt;
    wopt.lo = std::max(spec.r0, 1e-6);
    require(ConditionId::beta1, tr, &b, trace, wopt);
    require(ConditionId::beta2, tr, &b, trace, wopt);
    wopt.per_decade = 200;
    auto b3 = check_condition(ConditionId::beta3, tr, &b, wopt);
    trace.push_back(std::string("condition beta3: ") + to_string(b3.verdict) + " (" + fmt(b3.constant) + ")");
    if (b3.verdict == Verdict::Fails) throw Error(ErrorKind::ConditionFailed, "beta3");
    double c_beta = b3.constant;
    Fn theta = drift_bound(spec, true);
    CspProfileSide S(tr);
    Kernel K(tr);

    // first dyadic radius at or beyond max(R, 2 r0) meeting the sequence condition
    double R = -1;
    double R0 = std::max(spec.R, 2 * spec.r0);
    for (int k = 0; k < spec.max_search && R < 0; ++k) {
        double Rj = R0 * std::ldexp(1.0, k);
        double decay = -Rj * b.deriv(Rj) / b(Rj);
        double bound = K(1 / (Rj * S.Kinv.value(b(2 * Rj)))) * Rj * theta(Rj);
        bool ok = decay >= c_beta / 2 && bound <= spec.B2 && S.Kinv.value(b(Rj)) <= 1;
        trace.push_back("R_j = " + fmt(Rj) + ": -R beta'/beta = " + fmt(decay) + ", drift bound = " + fmt(bound) +
                        (ok ? " (admissible)" : ""));
        if (ok) R = Rj;
    }
    if (R < 0) throw Error(ErrorKind::ConditionFailed, "no admissible radius on the dyadic grid");

    Fn kb = [&](double s) { return S.Kinv.value(b(s)); };
    // Bt(x) = ∫_{2R-x}^{2R} K^{-1}(β)
    num::MonotoneIntegral Bt([&](double x) { return kb(2 * R - x); }, num::lin_grid(0, R, 401),
                             num::MonotoneIntegral::Anchor::Left);
    double lambda = spec.lambda;
    for (int step = 0;; ++step) {
        if (step == spec.max_search)
            throw Error(ErrorKind::SearchExhausted, "lambda halved " + std::to_string(spec.max_search) + " times");
        auto Phi = S.table(lambda);
        double Cl = Phi.total();
        double T = Bt.total() <= Cl ? R : Bt.inverse(Cl);
        double D = Cl / Bt(T);
        double q = T / R;
        // x(r) = T (2 - r/R) maps [R, 2R] onto [T, 0]; u = 2R - x
        auto xr = [&](double r) { return T * (2 - r / R); };
        auto c = csp_profile(
            spec, S, Phi, lambda, R, 2 * R, 3 * R, theta, [&](double r) { return D * Bt(xr(r)); },
            [&](double r) { return -D * q * kb(2 * R - xr(r)); },
            [&](double r) {
                double u = 2 * R - xr(r);
                return -D * q * q * S.Kinv.deriv(b(u)) * b.deriv(u);
            },
            [&](double y) { return R * (2 - Bt.inverse(y / D) / T); });
        bool grad_ok = c.gmax <= spec.eps;
        trace.push_back("lambda = " + fmt(lambda) + ": T = " + fmt(T) + ", D = " + fmt(D) + ", max|z'| = " +
                        fmt(c.gmax) + (c.ineq_ok ? "" : ", inequality fails") + (grad_ok ? "" : ", gradient too large"));
        if (c.ineq_ok && grad_ok) {
            P.w = std::move(c.W);
            P.lhs = std::move(c.lhs);
            P.rhs = std::move(c.rhs);
            P.support_end = 2 * R;
            P.parameters = {{"lambda", lambda}, {"R", R}, {"R1", 2 * R}, {"T", T}, {"D", D}, {"eps", spec.eps}};
            P.drift = [theta](double r) { return -theta(r); };
            P.rhs_fn = make_rhs(spec, spec.eps);
            double h = 1e-9 * R;
            double wh = Phi.inverse(D * Bt(xr(2 * R - h)));
            double gap = std::max(wh / h, S.rho(wh) * D * q * kb(2 * R - xr(2 * R - h)));
            csp_certificates(P, spec, lambda, R, 2 * R, gap, roundtrip_error(Phi, lambda * 1e-10, lambda));
            return P;
        }
        lambda /= 2;
    }
}

// ---------------------------------------------------------------------------------------------- SL

CertifiedProfile build_sl(const SupersolutionSpec& spec, bool mc) {
    CertifiedProfile P;
    P.kind = mc ? SupersolutionKind::SlBlowupMC : SupersolutionKind::SlBlowup;
    const Triple& tr = spec.triple;
    auto& trace = P.trace;
    const WeightProfile& bb = spec.beta_bar;
    const WeightProfile& b = spec.beta;
    double r0 = spec.r0, r1 = spec.r1;
    if (!(r1 > r0) || !(spec.lambda > spec.delta) || !(spec.delta > 0))
        throw Error(ErrorKind::OutOfRange, "needs r1 > r0 and 0 < delta < lambda");

    KernelKind kk = mc ? KernelKind::MeanCurvature : KernelKind::Standard;
    auto ko = ko_verdict(tr, Endpoint::Infinity, kk);
    trace.push_back("KO at infinity: " + ko.to_line());
    if (ko.outcome != Verdict::Holds)
        throw Error(ErrorKind::KellerOssermanViolated, std::string("KO at infinity is ") + to_string(ko.outcome));

    double chi = infer_chi(spec);
    if (!(chi > 0)) throw Error(ErrorKind::ConditionFailed, "chi must be positive");
    Fn theta = drift_bound(spec, false);
    InvK Kinv;
    if (mc) {
        if (tr.l.kind() != GradientTerm::Kind::PhiQuotient)
            throw Error(ErrorKind::ConditionFailed, "the mean curvature variant needs l = phi/t^chi");
        require_bounded("varphi_allamean", [&](double t) { return t * tr.phi.deriv(t) / tr.phi(t); }, 1e-8, 1e8,
                        trace);
        require_bounded("ipo_theta_SL_mc",
                        [&](double r) { return std::max(bb(r), theta(r)) * std::pow(bb(r), chi) / b(r); }, r0, 1e8,
                        trace);
        Kinv = power_inverse(chi);
    } else {
        ConditionOptions o;
        o.chi = chi;
        o.per_decade = 100;
        require(ConditionId::chi1, tr, nullptr, trace, o);
        require(ConditionId::chi2, tr, nullptr, trace, o);
        require_bounded("ipo_theta_SL", [&](double r) { return std::pow(bb(r), chi + 1) / b(r); }, r0, 1e8, trace);
        require_bounded("ipo_theta_SL drift", [&](double r) { return theta(r) * std::pow(bb(r), chi) / b(r); }, r0,
                        1e8, trace);
        Kinv = standard_inverse(tr);
    }
    for (double r : num::log_grid(r0, 1e8, 20))
        if (bb.deriv(r) > 1e-14 * bb(r)) throw Error(ErrorKind::ConditionFailed, "beta_bar must be non-increasing");
    double tail = -num::local_exponent([&](double r) { return bb(r); }, 1e6, 1e8);
    trace.push_back("beta_bar tail exponent " + fmt(tail));
    if (tail > 1 + 1e-6) throw Error(ErrorKind::ConditionFailed, "beta_bar must not be integrable at infinity");

    double eta0 = tr.f.threshold();
    double w0 = eta0 + spec.delta;
    std::vector<double> wn{w0};
    for (double x : num::log_grid(1e-6, 1e12, 8)) wn.push_back(w0 * (1 + x));
    Fn F = [&](double s) { return tr.f.primitive(s); };

    double sigma = 1;
    for (int step = 0;; ++step) {
        if (step == spec.max_search)
            throw Error(ErrorKind::SearchExhausted, "sigma halved " + std::to_string(spec.max_search) + " times");
        // Ψ(w) = ∫_w^∞ ds / K^{-1}(σF(s))
        num::MonotoneIntegral Psi([&](double s) { return 1 / Kinv.value(sigma * F(s)); }, wn,
                                  num::MonotoneIntegral::Anchor::Right, 0, true);
        double Cs = Psi.total();
        if (!std::isfinite(Cs)) throw Error(ErrorKind::KellerOssermanViolated, "tail integral diverges");
        double Rs;
        try {
            Rs = reach([&](double r) { return bb(r); }, r0, Cs, std::max(1.0, r1 - r0));
        } catch (const Error& e) {
            std::string last = trace.empty() ? "" : " (last attempt: " + trace.back() + (trace.size() > 1 ? "; " + trace[trace.size() - 2] : "") + ")";
            throw Error(e.kind(), std::string(e.what()) + " at sigma = " + fmt(sigma) + last);
        }
        if (!(Rs > r1)) {
            trace.push_back("sigma = " + fmt(sigma) + ": R_sigma = " + fmt(Rs) + " <= r1");
            sigma /= 2;
            continue;
        }
        // slowly decaying β̄ puts R_σ far out: space nodes in log r and cluster them at R_σ
        auto far = [&](double a, int per_decade) {
            std::vector<double> g = num::log_grid(a, Rs, per_decade);
            for (double d : num::log_grid(Rs * 1e-12, (Rs - a) / 2, per_decade)) g.push_back(Rs - d);
            g = merged(g);
            while (!g.empty() && (g.back() >= Rs || g.back() < a)) g.pop_back();
            return g;
        };
        auto an = far(r0, 40);
        an.push_back(Rs);
        num::MonotoneIntegral A([&](double r) { return bb(r); }, an, num::MonotoneIntegral::Anchor::Right);

        std::vector<double> rs = num::lin_grid(r0, r1, std::max(20, spec.nodes / 3));
        for (double r : far(r1, 20)) rs.push_back(r);
        std::map<double, double> at_level;
        double step_w = std::pow(10.0, 0.05);
        for (double wk = w0 * step_w; wk < 1e11; wk *= step_w) {
            double r = A.inverse(Psi(wk));
            if (r > r0 && r < Rs) {
                rs.push_back(r);
                at_level[r] = wk;
            }
        }
        rs = merged(rs);
        // past the last tabulated level Ψ^{-1} would extrapolate
        double r_cap = at_level.empty() ? Rs : at_level.rbegin()->first;
        while (!rs.empty() && rs.back() > r_cap) rs.pop_back();

        std::size_t n = rs.size();
        RadialFunction W;
        W.r = rs;
        W.w.resize(n);
        W.wp.resize(n);
        W.wpp.resize(n);
        std::vector<double> lhs(n), rhs(n);
        bool ineq_ok = true;
        for (std::size_t i = 0; i < n; ++i) {
            double r = rs[i];
            auto it = at_level.find(r);
            double w = i == 0 ? w0 : (it != at_level.end() ? it->second : Psi.inverse(A(r)));
            // w' = β̄ K^{-1}(σF(w)) from differentiating Ψ(w(r)) = ∫_r^{Rσ} β̄
            double k = Kinv.value(sigma * F(w));
            double wp = bb(r) * k;
            double wpp = bb.deriv(r) * k + bb(r) * Kinv.deriv(sigma * F(w)) * sigma * tr.f(w) * wp;
            W.w[i] = w;
            W.wp[i] = wp;
            W.wpp[i] = wpp;
            lhs[i] = tr.phi.deriv(wp) * wpp + theta(r) * tr.phi(wp);
            rhs[i] = spec.eps * b(r) * tr.f(w) * tr.l(wp);
            if (!(lhs[i] <= (1 - kMargin) * rhs[i]) && ineq_ok) {
                ineq_ok = false;
                trace.push_back("  first violation at r = " + fmt(r) + ", w = " + fmt(w) + ": " + fmt(lhs[i]) +
                                " > " + fmt(rhs[i]));
            }
        }
        double w_r1 = W.value_at(r1);
        bool band_ok = w_r1 <= eta0 + spec.lambda;
        trace.push_back("sigma = " + fmt(sigma) + ": R1 = " + fmt(Rs) + ", w(r1) = " + fmt(w_r1) +
                        (ineq_ok ? "" : ", inequality fails") + (band_ok ? "" : ", band exceeded"));
        if (!(ineq_ok && band_ok)) {
            sigma /= 2;
            continue;
        }
        P.w = std::move(W);
        P.lhs = std::move(lhs);
        P.rhs = std::move(rhs);
        P.blowup = Rs;
        P.parameters = {{"sigma", sigma}, {"R1", Rs},   {"eta0", eta0}, {"delta", spec.delta},
                        {"lambda", spec.lambda}, {"chi", chi}, {"eps", spec.eps}};
        P.drift = theta;
        P.rhs_fn = make_rhs(spec, spec.eps);

        const auto& r = P.w.r;
        const auto& w = P.w.w;
        const auto& wp = P.w.wp;
        bool mono = true, band = w_r1 <= eta0 + spec.lambda;
        double wmax = 0, hi_band = 0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (!(wp[i] > 0)) mono = false;
            if (i > 0 && !(w[i] > w[i - 1])) mono = false;
            wmax = std::max(wmax, w[i]);
            if (r[i] <= r1) {
                hi_band = std::max(hi_band, w[i]);
                if (w[i] < w0 * (1 - 1e-12) || w[i] > (eta0 + spec.lambda) * (1 + 1e-12)) band = false;
            }
        }
        double rt = roundtrip_error(Psi, w0 * 1.01, 1e6 * w0);
        P.certificates.push_back(cert("initial", std::fabs(w[0] - w0) <= 1e-12 * w0, w[0], w0, "w(r0) = eta0 + delta"));
        P.certificates.push_back(
            cert("band", band, hi_band, eta0 + spec.lambda, "eta0 + delta <= w <= eta0 + lambda on [r0, r1]"));
        P.certificates.push_back(
            cert("divergence", wmax >= kDiverged && mono, wmax, kDiverged, "w passes the threshold before R1, w' > 0"));
        P.certificates.push_back(cert("monotone", mono, 0, 0, "w' > 0 and w increasing"));
        P.certificates.push_back(cert("roundtrip", rt <= 1e-9, rt, 1e-9, "Psi^{-1}(Psi(w)) = w"));
        fill_residual(P);
        P.certificates.push_back(inequality_cert(P));
        return P;
    }
}

// ---------------------------------------------------------------------------------------------- Khasminskii

// exponent a with w' ~ r^a over the last decade of the profile
double tail_exponent(const RadialFunction& W) {
    std::size_t n = W.size();
    double rn = W.r[n - 1];
    std::size_t i = 0;
    while (i + 1 < n && W.r[i] < rn / 10) ++i;
    if (W.wp[i] <= 0 || W.wp[n - 1] <= 0 || i + 1 >= n) return -kInf;
    return std::log(W.wp[n - 1] / W.wp[i]) / std::log(rn / W.r[i]);
}

void khasminskii_certificates(CertifiedProfile& P, const SupersolutionSpec& spec) {
    const auto& r = P.w.r;
    const auto& w = P.w.w;
    const auto& wp = P.w.wp;
    bool pos = true, mono = true;
    double gmax = 0, cap = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!(w[i] > 0)) pos = false;
        if (!(wp[i] > 0)) mono = false;
        gmax = std::max(gmax, std::fabs(wp[i]));
        if (r[i] <= spec.r1) cap = std::max(cap, w[i]);
    }
    double a = tail_exponent(P.w);
    P.parameters["tail_exponent"] = a;
    P.certificates.push_back(cert("positive", pos, w.front(), 0, "w > 0"));
    P.certificates.push_back(cert("monotone", mono, 0, 0, "w' > 0"));
    P.certificates.push_back(cert("cap", cap <= spec.eta, cap, spec.eta, "w <= eta on [r0, r1]"));
    P.certificates.push_back(cert("gradient", gmax <= spec.eps, gmax, spec.eps, "|w'| <= eps"));
    // w' ~ r^a with a >= -1 is not integrable at infinity
    P.certificates.push_back(cert("divergence", a >= -1.02 && mono, a, -1.02, "tail exponent of w' on the last decade"));
    fill_residual(P);
    P.certificates.push_back(inequality_cert(P));
}

CertifiedProfile khasminskii_explicit(const SupersolutionSpec& spec, CertifiedProfile P) {
    const Triple& tr = spec.triple;
    const WeightProfile& b = spec.beta;
    Fn v = volume(spec), dlv = log_volume_slope(spec);
    double r0 = spec.r0, r1 = spec.r1;
    // the inner integral starts below r0 so that w' > 0 at r0
    double r_in = r0 / 2;
    std::vector<double> rs = num::lin_grid(r0, r1, std::max(20, spec.nodes / 6));
    auto far = num::log_grid(r1, spec.r_max, std::max(20, spec.nodes / 6));
    rs.insert(rs.end(), far.begin(), far.end());
    rs = merged(rs);
    std::size_t n = rs.size();
    std::vector<double> I(n);
    Fn vb = [&](double s) { return v(s) * b(s); };
    I[0] = num::integrate(vb, r_in, r0);
    for (std::size_t i = 1; i < n; ++i) I[i] = I[i - 1] + num::integrate(vb, rs[i - 1], rs[i]);

    double sigma = 1;
    double offset = spec.eta / 2;
    for (int step = 0;; ++step) {
        if (step == spec.max_search)
            throw Error(ErrorKind::SearchExhausted, "sigma halved " + std::to_string(spec.max_search) + " times");
        RadialFunction W;
        W.r = rs;
        W.wp.resize(n);
        W.wpp.resize(n);
        std::vector<double> lhs(n), rhs(n);
        bool ineq_ok = true;
        double gmax = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double r = rs[i], q = I[i] / v(r);
            double wp = tr.phi.inverse(sigma * q);
            // φ'(w') w'' = σ(β - (I/v) v'/v)
            double wpp = sigma * (b(r) - q * dlv(r)) / tr.phi.deriv(wp);
            W.wp[i] = wp;
            W.wpp[i] = wpp;
            lhs[i] = tr.phi.deriv(wp) * wpp + dlv(r) * tr.phi(wp);
            rhs[i] = b(r) * spec.K * tr.l(wp);
            if (!(lhs[i] <= (1 - kMargin) * rhs[i])) ineq_ok = false;
            gmax = std::max(gmax, wp);
        }
        W.w = num::cumulative(rs, W.wp);
        for (double& x : W.w) x += offset;
        double w_r1 = W.value_at(r1);
        bool ok = ineq_ok && gmax <= spec.eps && w_r1 <= spec.eta;
        P.trace.push_back("sigma = " + fmt(sigma) + ": max w' = " + fmt(gmax) + ", w(r1) = " + fmt(w_r1) +
                          (ineq_ok ? "" : ", inequality fails"));
        if (!ok) {
            sigma /= 2;
            continue;
        }
        P.w = std::move(W);
        P.lhs = std::move(lhs);
        P.rhs = std::move(rhs);
        P.parameters["sigma"] = sigma;
        P.parameters["offset"] = offset;
        P.parameters["explicit_route"] = 1;
        khasminskii_certificates(P, spec);
        return P;
    }
}

CertifiedProfile khasminskii_seeded(const SupersolutionSpec& spec, CertifiedProfile P) {
    const Triple& tr = spec.triple;
    const WeightProfile& b = spec.beta;
    Fn v = volume(spec), dlv = log_volume_slope(spec);
    double r0 = spec.r0, r1 = spec.r1, L = r1 - r0;
    double xi = std::min(spec.xi, 1.0);
    Kernel K(tr);
    Phi phib = continued(tr.phi, xi);
    GradientTerm lb = clamped_l(tr.l, xi);
    double beta1 = 0, v0 = kInf, v1 = 0, lxi = 0;
    for (double r : num::lin_grid(r0, r1, 201)) {
        beta1 = std::max(beta1, b(r));
        v0 = std::min(v0, v(r));
        v1 = std::max(v1, v(r));
    }
    for (double t : num::lin_grid(0, xi, 201)) lxi = std::max(lxi, tr.l(t));
    // surrogate f̂ = K min(1, t/η): vanishes at 0 and stays below the constant K
    double Kc = spec.K, eta = spec.eta;
    auto fhat = [Kc, eta](double t) { return t <= 0 ? 0.0 : Kc * std::min(1.0, t / eta); };

    double sigma = std::min(spec.eps, xi / 2);
    for (int step = 0;; ++step) {
        if (step == spec.max_search)
            throw Error(ErrorKind::SearchExhausted, "sigma halved " + std::to_string(spec.max_search) + " times");
        double es = std::min(sigma / 2, eta / 2);
        auto fits = [&](double e) { return v1 / v0 * (L * beta1 * fhat(2 * e) * lxi + phib(e / L)) < phib(sigma); };
        for (int k = 0; k < 200 && !fits(es); ++k) es /= 2;
        double s = sigma;
        // minimal clamped choice: f_σ = min(f̂, 1, K'(t - η_σ)) above η_σ
        auto fs = [fhat, es, &K](double t) { return t <= es ? 0.0 : std::min({fhat(t), 1.0, K.deriv(t - es)}); };
        BvpProblem pb;
        pb.triple = {phib, lb, Nonlinearity::custom([fs, es, s](double t) { return s * fs(es + t); }), {}};
        pb.volume = [v, r0](double t) { return v(r0 + t); };
        pb.a = [&b, r0](double t) { return b(r0 + t); };
        pb.T = L;
        pb.eta = es;
        pb.kind = BoundaryKind::Dirichlet;
        BvpSolution seed;
        try {
            seed = solve_dirichlet(pb);
        } catch (const Error& e) {
            P.trace.push_back("sigma = " + fmt(sigma) + ": seed failed (" + e.what() + ")");
            sigma /= 2;
            continue;
        }
        if (!(seed.w.wp.front() > 0)) {
            P.trace.push_back("sigma = " + fmt(sigma) + ": seed has w'(r0) = 0");
            sigma /= 2;
            continue;
        }
        // march (w, vφ(w')) beyond r1
        using State = std::array<double, 2>;
        auto system = [&](const State& y, State& dy, double r) {
            double wp = phib.inverse(std::max(0.0, y[1]) / v(r));
            dy[0] = wp;
            dy[1] = sigma * v(r) * b(r) * fs(y[0]) * lb(wp);
        };
        State y{es + seed.w.w.back(), seed.flux.back()};
        std::vector<double> rr;
        std::vector<State> ys;
        auto far = num::log_grid(r1, spec.r_max, std::max(20, spec.nodes / 6));
        far.front() = r1;
        auto stepper = odeint::make_dense_output(1e-11, 1e-11, odeint::runge_kutta_dopri5<State>());
        odeint::integrate_times(stepper, system, y, far.begin(), far.end(), r1 / 100,
                                [&](const State& st, double r) {
                                    rr.push_back(r);
                                    ys.push_back(st);
                                });
        RadialFunction W;
        for (std::size_t i = 0; i < seed.w.size(); ++i) {
            W.r.push_back(r0 + seed.w.r[i]);
            W.w.push_back(es + seed.w.w[i]);
            W.wp.push_back(seed.w.wp[i]);
        }
        for (std::size_t i = 1; i < rr.size(); ++i) {
            W.r.push_back(rr[i]);
            W.w.push_back(ys[i][0]);
            W.wp.push_back(phib.inverse(std::max(0.0, ys[i][1]) / v(rr[i])));
        }
        std::size_t n = W.size();
        W.wpp.resize(n);
        std::vector<double> lhs(n), rhs(n);
        bool ineq_ok = true;
        double gmax = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double r = W.r[i], wp = W.wp[i];
            // (vφ(w'))'/v = σβ f_σ(w) l̄(w') along the solution
            lhs[i] = sigma * b(r) * fs(W.w[i]) * lb(wp);
            double d = tr.phi.deriv(wp);
            W.wpp[i] = d > 0 && std::isfinite(d) ? (lhs[i] - dlv(r) * tr.phi(wp)) / d : 0.0;
            rhs[i] = b(r) * spec.K * tr.l(wp);
            if (lhs[i] > 0 && !(lhs[i] <= (1 - kMargin) * rhs[i])) ineq_ok = false;
            gmax = std::max(gmax, wp);
        }
        double w_r1 = W.value_at(r1);
        bool ok = ineq_ok && gmax <= spec.eps && gmax < xi && w_r1 <= eta;
        P.trace.push_back("sigma = " + fmt(sigma) + ", eta_sigma = " + fmt(es) + ": max w' = " + fmt(gmax) +
                          ", w(r1) = " + fmt(w_r1) + (ineq_ok ? "" : ", inequality fails"));
        if (!ok) {
            sigma /= 2;
            continue;
        }
        P.w = std::move(W);
        P.lhs = std::move(lhs);
        P.rhs = std::move(rhs);
        P.parameters["sigma"] = sigma;
        P.parameters["eta_sigma"] = es;
        P.parameters["explicit_route"] = 0;
        khasminskii_certificates(P, spec);
        return P;
    }
}

CertifiedProfile build_khas(const SupersolutionSpec& spec) {
    CertifiedProfile P;
    P.kind = SupersolutionKind::Khasminskii;
    auto& trace = P.trace;
    const WeightProfile& b = spec.beta;
    if (!(spec.r1 > spec.r0) || !(spec.r0 > 0)) throw Error(ErrorKind::OutOfRange, "needs 0 < r0 < r1");
    double chi = infer_chi(spec);
    double mu = b.kind() == WeightProfile::Kind::PowerDecay
                    ? b.mu()
                    : -num::local_exponent([&](double r) { return b(r); }, 1e6, 1e8);
    trace.push_back("chi = " + fmt(chi) + ", mu = " + fmt(mu));
    if (mu > chi + 1 + 1e-12) throw Error(ErrorKind::ConditionFailed, "ipo_bvg: mu > chi + 1");

    // (1/v) ∫_{r0}^r v (1+s)^{-μ}, sup by decades
    Fn v = volume(spec);
    {
        double acc = 0, prev = spec.r0, m = 0;
        std::vector<double> sups;
        for (double a = spec.r0; a < 1e8; a *= 10) {
            for (double r : num::log_grid(a, 10 * a, 10)) {
                if (r > prev) acc += num::integrate([&](double s) { return v(s) * std::pow(1 + s, -mu); }, prev, r);
                prev = r;
                m = std::max(m, acc / v(r));
            }
            sups.push_back(m);
        }
        Verdict vd = sup_verdict(sups);
        trace.push_back("ipo_bvg: sup (1/v) int v beta = " + fmt(m) + ", " + to_string(vd));
        if (vd == Verdict::Fails) throw Error(ErrorKind::WeightIncompatible, "(1/v) int v beta grows without bound");
    }
    if (spec.model) {
        GrowthRegime reg;
        if (mu < chi + 1) {
            reg.kind = GrowthRegime::Kind::PowerOfR;
            reg.gamma = chi + 1 - mu;
        }
        auto g = volume_growth_exponent(*spec.model, reg, 1e4);
        trace.push_back("volume_ODE: growth exponent " + fmt(g.value));
        bool ok = std::isfinite(g.value);
        if (chi == 0) {
            double p = spec.triple.phi.zero_exponent().value_or(1) + 1;
            ok = mu < chi + 1 ? g.value <= 1e-2 : g.value <= p + 1e-2;
        }
        if (!ok) throw Error(ErrorKind::ConditionFailed, "volume_ODE");
    }
    P.drift = log_volume_slope(spec);
    {
        GradientTerm l = spec.triple.l;
        double Kc = spec.K;
        P.rhs_fn = [l, b, Kc](double r, double, double wp) { return b(r) * Kc * l(std::fabs(wp)); };
    }
    double l0 = spec.triple.l(0);
    bool expl = spec.explicit_route || (l0 > 0 && std::isfinite(l0));
    trace.push_back(expl ? "route: explicit double integral" : "route: Dirichlet seed and forward march");
    return expl ? khasminskii_explicit(spec, std::move(P)) : khasminskii_seeded(spec, std::move(P));
}

// ---------------------------------------------------------------------------------------------- exterior

CertifiedProfile build_exterior(const SupersolutionSpec& spec) {
    CertifiedProfile P;
    P.kind = SupersolutionKind::ExteriorDirichlet;
    auto& trace = P.trace;
    const Triple& tr = spec.triple;
    const WeightProfile& b = spec.beta;
    Fn v = volume(spec);
    double r0 = spec.r0, R = spec.R, eta = spec.eta, xi = spec.xi;
    if (!(r0 > 0 && R > 0 && eta > 0 && xi > 0 && xi < 1))
        throw Error(ErrorKind::OutOfRange, "needs r0, R, eta > 0 and xi in (0, 1)");
    for (double r : num::log_grid(r0, 1e6, 10))
        if (v(r * 1.01) < v(r) * (1 - 1e-12)) throw Error(ErrorKind::ConditionFailed, "v must be non-decreasing");

    double f_eta = 0, l_xi = 0, S = 0, acc = 0, prev = r0;
    for (double t : num::lin_grid(0, eta, 201)) f_eta = std::max(f_eta, tr.f(t));
    for (double t : num::lin_grid(0, xi, 201)) l_xi = std::max(l_xi, tr.l(t));
    for (double r : num::lin_grid(r0, r0 + R, 201)) {
        if (r > prev) acc += num::integrate([&](double s) { return v(s) * b(s); }, prev, r);
        prev = r;
        S = std::max(S, acc / v(r));
    }
    double bound = v(r0 + R) / v(r0) * tr.phi(eta / R) + f_eta * l_xi * S;
    trace.push_back("uniform bound: " + fmt(bound) + " vs phi(xi) = " + fmt(tr.phi(xi)));
    if (!(bound < tr.phi(xi))) throw Error(ErrorKind::RestrictionViolated, "uniform bound " + fmt(bound) + " >= phi(xi)");

    double h = std::max(1.0, 2 * eta / R);
    Triple bar{continued(tr.phi, h), clamped_l(tr.l, xi), tr.f, {}};

    int N = std::max(64, spec.nodes);
    RadialFunction prev_z;
    BvpSolution last;
    double diff = kInf, T = R;
    bool converged = false;
    for (int k = 0; k < spec.max_search && !converged; ++k) {
        T = R * std::ldexp(1.0, k);
        // nodes logarithmic in r = r0 + T - t
        std::vector<double> t(N + 1);
        for (int i = 0; i <= N; ++i) t[i] = r0 + T - r0 * std::pow(1 + T / r0, double(N - i) / N);
        t[0] = 0;
        t[N] = T;
        BvpProblem pb;
        pb.triple = bar;
        pb.volume = [v, r0, T](double s) { return v(r0 + T - s); };
        pb.a = [&b, r0, T](double s) { return b(r0 + T - s); };
        pb.T = T;
        pb.eta = eta;
        pb.kind = BoundaryKind::Dirichlet;
        BvpOptions opt;
        opt.grid = t;
        last = solve_dirichlet(pb, opt);
        RadialFunction z;
        for (std::size_t i = last.w.size(); i-- > 0;) {
            z.r.push_back(r0 + T - last.w.r[i]);
            z.w.push_back(last.w.w[i]);
            z.wp.push_back(-last.w.wp[i]);
        }
        z.r.front() = r0;
        if (!prev_z.r.empty()) {
            diff = 0;
            double half = r0 + 0.5 * prev_z.r.back() - 0.5 * r0;
            for (std::size_t i = 0; i < prev_z.size() && prev_z.r[i] <= half; ++i)
                diff = std::max(diff, std::fabs(prev_z.w[i] - z.value_at(prev_z.r[i])));
            converged = diff <= 1e-8;
        }
        trace.push_back("T = " + fmt(T) + ": z'(r0) = " + fmt(z.wp.front()) +
                        (std::isfinite(diff) ? ", change " + fmt(diff) : ""));
        prev_z = std::move(z);
    }
    if (!converged) throw Error(ErrorKind::NoConvergence, "profiles still change by " + fmt(diff));

    // keep the half where consecutive profiles agree
    Fn dlv = log_volume_slope(spec);
    double keep = r0 + T / 2;
    std::size_t n = 0;
    while (n < prev_z.size() && prev_z.r[n] <= keep) ++n;
    RadialFunction& Z = P.w;
    Z.r.assign(prev_z.r.begin(), prev_z.r.begin() + n);
    Z.w.assign(prev_z.w.begin(), prev_z.w.begin() + n);
    Z.wp.assign(prev_z.wp.begin(), prev_z.wp.begin() + n);
    Z.wpp.resize(n);
    P.lhs.resize(n);
    P.rhs.resize(n);
    P.residual.resize(n);
    std::size_t m = last.w.size();
    for (std::size_t i = 0; i < n; ++i) {
        double r = Z.r[i], zp = Z.wp[i];
        P.rhs[i] = b(r) * tr.f(Z.w[i]) * tr.l(std::fabs(zp));
        // the Dirichlet solver reports the integrated equation; its node residual carries over
        P.residual[i] = last.residual[m - 1 - i];
        P.lhs[i] = P.rhs[i] + P.residual[i];
        double d = tr.phi.deriv(zp);
        Z.wpp[i] = d > 0 && std::isfinite(d) ? (P.rhs[i] - dlv(r) * tr.phi(zp)) / d : 0.0;
    }
    P.equality = true;
    P.tolerance = 1e-7 * last.residual_scale;
    P.drift = dlv;
    P.rhs_fn = make_rhs(spec, 1);
    P.parameters = {{"T", T}, {"h", h}, {"xi", xi}, {"eta", eta}, {"change", diff}};

    bool mono = true, nonneg = true;
    double gmax = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (Z.wp[i] > 0) mono = false;
        if (i > 0 && Z.w[i] > Z.w[i - 1] + 1e-15) mono = false;
        if (Z.w[i] < -1e-12 * eta) nonneg = false;
        gmax = std::max(gmax, std::fabs(Z.wp[i]));
    }
    P.certificates.push_back(cert("boundary", std::fabs(Z.w[0] - eta) <= 1e-9 * eta, Z.w[0], eta, "z(r0) = eta"));
    P.certificates.push_back(cert("monotone", mono, 0, 0, "z' <= 0"));
    P.certificates.push_back(cert("nonnegative", nonneg, 0, 0, "z >= 0"));
    P.certificates.push_back(cert("gradient", gmax < xi, gmax, xi, "|z'| < xi"));
    P.certificates.push_back(cert("convergence", diff <= 1e-8, diff, 1e-8, "consecutive profiles on [r0, r0 + jR/2]"));
    P.certificates.push_back(inequality_cert(P));

    // decay by comparison with z̄(r) = ∫_r^∞ φ^{-1}(c/v), c = v(r_c) φ(1)
    auto integrand = [&](double c) { return [&, c](double s) { return tr.phi.inverse(std::min(c / v(s), tr.phi(1))); }; };
    double c0 = v(r0) * tr.phi(1);
    double tail = num::local_exponent(integrand(c0), 1e6, 1e8);
    P.parameters["decay_tail_exponent"] = tail;
    if (!(tail < -1.01)) {
        trace.push_back("decay not applicable: phi^{-1}(c/v) ~ r^" + fmt(tail) + " is not integrable");
        return P;
    }
    double rc = r0, c = c0;
    for (int k = 0; k < 60; ++k) {
        c = v(rc) * tr.phi(1);
        if (num::integrate_tail(integrand(c), rc) > eta) break;
        rc *= 2;
    }
    std::vector<double> zbar(n, 0);
    double worst = -kInf;
    double acc_z = num::integrate_tail(integrand(c), Z.r[n - 1]);
    for (std::size_t i = n; i-- > 0;) {
        if (i + 1 < n) acc_z += num::integrate(integrand(c), Z.r[i], Z.r[i + 1]);
        zbar[i] = acc_z;
        if (Z.r[i] >= rc) worst = std::max(worst, Z.w[i] - zbar[i]);
    }
    P.parameters["r_c"] = rc;
    P.certificates.push_back(cert("decay", worst <= 1e-12, worst, 1e-12, "z <= zbar on [r_c, inf)"));
    return P;
}

}  // namespace

CertifiedProfile build_csp_supersolution(const SupersolutionSpec& spec) {
    if (spec.kind == SupersolutionKind::CspA) return build_csp_a(spec);
    if (spec.kind == SupersolutionKind::CspB) return build_csp_b(spec);
    throw Error(ErrorKind::OutOfRange, std::string("not a CSP kind: ") + to_string(spec.kind));
}

CertifiedProfile build_sl_supersolution(const SupersolutionSpec& spec, bool mean_curvature) {
    return build_sl(spec, mean_curvature);
}

CertifiedProfile build_khasminskii(const SupersolutionSpec& spec) { return build_khas(spec); }

CertifiedProfile solve_exterior_dirichlet(const SupersolutionSpec& spec) { return build_exterior(spec); }

CertifiedProfile build_supersolution(const SupersolutionSpec& spec) {
    switch (spec.kind) {
        case SupersolutionKind::CspA:
        case SupersolutionKind::CspB: return build_csp_supersolution(spec);
        case SupersolutionKind::SlBlowup: return build_sl_supersolution(spec, false);
        case SupersolutionKind::SlBlowupMC: return build_sl_supersolution(spec, true);
        case SupersolutionKind::Khasminskii: return build_khasminskii(spec);
        case SupersolutionKind::ExteriorDirichlet: return solve_exterior_dirichlet(spec);
    }
    throw Error(ErrorKind::OutOfRange, "unknown construction kind");
}

}  // namespace qlab
