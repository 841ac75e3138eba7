#include "qlab/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qlab/numerics.hpp"

namespace qlab {

namespace {

double fd_deriv(const Fn& f, double t) {
    double h = 1e-6 * std::max(1.0, std::fabs(t));
    return (f(t + h) - f(t - h)) / (2 * h);
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

}  // namespace

// ---------------------------------------------------------------- Phi

Phi Phi::power_law(double p) {
    if (!(p > 1)) throw Error(ErrorKind::OutOfRange, "power law needs p > 1");
    Phi f;
    f.kind_ = Kind::PowerLaw;
    f.p_ = p;
    return f;
}

Phi Phi::mean_curvature() {
    Phi f;
    f.kind_ = Kind::MeanCurvature;
    return f;
}

Phi Phi::exp_harmonic() {
    Phi f;
    f.kind_ = Kind::ExpHarmonic;
    return f;
}

Phi Phi::power_sum(double p, double q) {
    if (!(1 < q && q < p)) throw Error(ErrorKind::OutOfRange, "power sum needs 1 < q < p");
    Phi f;
    f.kind_ = Kind::PowerSum;
    f.p_ = p;
    f.q_ = q;
    return f;
}

Phi Phi::rational_power(double p, double q) {
    if (!(p > 1 && q >= 1 && q <= p)) throw Error(ErrorKind::OutOfRange, "rational power needs 1 <= q <= p, p > 1");
    Phi f;
    f.kind_ = Kind::RationalPower;
    f.p_ = p;
    f.q_ = q;
    return f;
}

Phi Phi::custom(Fn value, Fn deriv, std::optional<double> zero_exp, std::optional<double> inf_exp,
                std::optional<double> sup) {
    Phi f;
    f.kind_ = Kind::Custom;
    f.fn_ = std::move(value);
    f.dfn_ = std::move(deriv);
    f.zero_exp_ = zero_exp;
    f.inf_exp_ = inf_exp;
    f.sup_ = sup;
    return f;
}

double Phi::operator()(double t) const {
    if (t < 0) return -(*this)(-t);
    switch (kind_) {
        case Kind::PowerLaw: return std::pow(t, p_ - 1);
        case Kind::MeanCurvature: return t / std::sqrt(1 + t * t);
        case Kind::ExpHarmonic: return t * std::exp(t * t);
        case Kind::PowerSum: return std::pow(t, p_ - 1) + std::pow(t, q_ - 1);
        case Kind::RationalPower: return std::pow(t, p_ - 1) * std::pow(1 + t, 1 - q_);
        case Kind::Custom: return fn_(t);
    }
    return 0;
}

double Phi::deriv(double t) const {
    t = std::fabs(t);
    switch (kind_) {
        case Kind::PowerLaw: return (p_ - 1) * std::pow(t, p_ - 2);
        case Kind::MeanCurvature: return std::pow(1 + t * t, -1.5);
        case Kind::ExpHarmonic: return (1 + 2 * t * t) * std::exp(t * t);
        case Kind::PowerSum: return (p_ - 1) * std::pow(t, p_ - 2) + (q_ - 1) * std::pow(t, q_ - 2);
        case Kind::RationalPower:
            return std::pow(t, p_ - 2) * std::pow(1 + t, -q_) * ((p_ - 1) + (p_ - q_) * t);
        case Kind::Custom: return dfn_ ? dfn_(t) : fd_deriv(fn_, t);
    }
    return 0;
}

double Phi::sup() const {
    switch (kind_) {
        case Kind::MeanCurvature: return 1.0;
        case Kind::RationalPower: return q_ == p_ ? 1.0 : kInf;
        case Kind::Custom: return sup_ ? *sup_ : kInf;
        default: return kInf;
    }
}

double Phi::inverse(double y) const {
    if (y < 0) return -inverse(-y);
    if (y == 0) return 0;
    if (y >= sup()) throw Error(ErrorKind::OutOfRange, "phi_inverse: value " + fmt(y) + " >= phi(inf)");
    if (kind_ == Kind::PowerLaw) return std::pow(y, 1 / (p_ - 1));
    if (kind_ == Kind::MeanCurvature) return y / std::sqrt((1 - y) * (1 + y));
    auto g = [&](double t) { return (*this)(t) - y; };
    double lo = 1, hi = 1;
    if (g(1) < 0) {
        while (g(hi) < 0) {
            lo = hi;
            hi *= 2;
            if (hi > 1e300) throw Error(ErrorKind::OutOfRange, "phi_inverse: no bracket");
        }
        // fast-growing φ may overflow past the root
        while (!std::isfinite(g(hi))) {
            double mid = 0.5 * (lo + hi);
            if (g(mid) < 0)
                lo = mid;
            else
                hi = mid;
        }
    } else {
        while (g(lo) > 0) {
            hi = lo;
            lo *= 0.5;
            if (lo < 1e-300) return lo;
        }
    }
    return num::root(g, lo, hi);
}

std::optional<double> Phi::zero_exponent() const {
    switch (kind_) {
        case Kind::PowerLaw: return p_ - 1;
        case Kind::MeanCurvature: return 1.0;
        case Kind::ExpHarmonic: return 1.0;
        case Kind::PowerSum: return q_ - 1;
        case Kind::RationalPower: return p_ - 1;
        case Kind::Custom: return zero_exp_;
    }
    return {};
}

std::optional<double> Phi::inf_exponent() const {
    switch (kind_) {
        case Kind::PowerLaw: return p_ - 1;
        case Kind::MeanCurvature: return 0.0;
        case Kind::ExpHarmonic: return {};
        case Kind::PowerSum: return p_ - 1;
        case Kind::RationalPower: return p_ - q_;
        case Kind::Custom: return inf_exp_;
    }
    return {};
}

std::string Phi::name() const {
    switch (kind_) {
        case Kind::PowerLaw: return "power_law(p=" + fmt(p_) + ")";
        case Kind::MeanCurvature: return "mean_curvature";
        case Kind::ExpHarmonic: return "exp_harmonic";
        case Kind::PowerSum: return "power_sum(p=" + fmt(p_) + ",q=" + fmt(q_) + ")";
        case Kind::RationalPower: return "rational_power(p=" + fmt(p_) + ",q=" + fmt(q_) + ")";
        case Kind::Custom: return "custom";
    }
    return "?";
}

double phi_inverse(const Phi& phi, double y) { return phi.inverse(y); }

// ---------------------------------------------------------------- l

GradientTerm GradientTerm::constant(double c) {
    if (!(c > 0)) throw Error(ErrorKind::OutOfRange, "constant gradient term needs c > 0");
    GradientTerm g;
    g.kind_ = Kind::Constant;
    g.c_ = c;
    return g;
}

GradientTerm GradientTerm::power(double e) {
    if (!(e >= 0)) throw Error(ErrorKind::OutOfRange, "power gradient term needs exponent >= 0");
    GradientTerm g;
    g.kind_ = Kind::Power;
    g.e_ = e;
    return g;
}

GradientTerm GradientTerm::phi_quotient(const Phi& phi, double chi) {
    if (!(chi >= 0)) throw Error(ErrorKind::OutOfRange, "phi quotient needs chi >= 0");
    GradientTerm g;
    g.kind_ = Kind::PhiQuotient;
    g.chi_ = chi;
    g.phi_ = std::make_shared<const Phi>(phi);
    return g;
}

GradientTerm GradientTerm::custom(Fn value, std::optional<double> zero_exp, std::optional<double> inf_exp) {
    GradientTerm g;
    g.kind_ = Kind::Custom;
    g.fn_ = std::move(value);
    g.zero_exp_ = zero_exp;
    g.inf_exp_ = inf_exp;
    return g;
}

double GradientTerm::operator()(double t) const {
    t = std::fabs(t);
    switch (kind_) {
        case Kind::Constant: return c_;
        case Kind::Power: return e_ == 0 ? 1.0 : std::pow(t, e_);
        case Kind::PhiQuotient: {
            if (t == 0) {
                auto z = phi_->zero_exponent();
                double e = z ? *z - chi_ : 0;
                if (e > 0) return 0;
                if (e < 0) return kInf;
                t = 1e-12;
            }
            return (*phi_)(t) / std::pow(t, chi_);
        }
        case Kind::Custom: return fn_(t);
    }
    return 0;
}

std::optional<double> GradientTerm::zero_exponent() const {
    switch (kind_) {
        case Kind::Constant: return 0.0;
        case Kind::Power: return e_;
        case Kind::PhiQuotient: {
            auto z = phi_->zero_exponent();
            if (!z) return {};
            return *z - chi_;
        }
        case Kind::Custom: return zero_exp_;
    }
    return {};
}

std::optional<double> GradientTerm::inf_exponent() const {
    switch (kind_) {
        case Kind::Constant: return 0.0;
        case Kind::Power: return e_;
        case Kind::PhiQuotient: {
            auto z = phi_->inf_exponent();
            if (!z) return {};
            return *z - chi_;
        }
        case Kind::Custom: return inf_exp_;
    }
    return {};
}

bool GradientTerm::singular_at_zero() const {
    auto z = zero_exponent();
    return z && *z < 0;
}

std::string GradientTerm::name() const {
    switch (kind_) {
        case Kind::Constant: return "constant(" + fmt(c_) + ")";
        case Kind::Power: return "power(" + fmt(e_) + ")";
        case Kind::PhiQuotient: return "phi_quotient(chi=" + fmt(chi_) + ")";
        case Kind::Custom: return "custom";
    }
    return "?";
}

// ---------------------------------------------------------------- f

Nonlinearity Nonlinearity::power(double omega, double threshold, double scale) {
    if (!(omega >= 0 && threshold >= 0 && scale > 0))
        throw Error(ErrorKind::OutOfRange, "power nonlinearity needs omega >= 0, threshold >= 0, scale > 0");
    Nonlinearity f;
    f.kind_ = Kind::Power;
    f.omega_ = omega;
    f.eta0_ = threshold;
    f.scale_ = scale;
    return f;
}

Nonlinearity Nonlinearity::exp2m1(double scale) {
    Nonlinearity f;
    f.kind_ = Kind::Exp2m1;
    f.scale_ = scale;
    return f;
}

Nonlinearity Nonlinearity::custom(Fn value, Fn primitive, std::optional<double> inf_exp) {
    Nonlinearity f;
    f.kind_ = Kind::Custom;
    f.fn_ = std::move(value);
    f.F_ = std::move(primitive);
    f.inf_exp_ = inf_exp;
    return f;
}

double Nonlinearity::operator()(double t) const {
    switch (kind_) {
        case Kind::Power: {
            double s = t - eta0_;
            if (s <= 0) return 0;
            return scale_ * (omega_ == 0 ? 1.0 : std::pow(s, omega_));
        }
        case Kind::Exp2m1: return scale_ * std::expm1(2 * t);
        case Kind::Custom: return scale_ * fn_(t);
    }
    return 0;
}

double Nonlinearity::primitive(double t) const {
    switch (kind_) {
        case Kind::Power: {
            double s = t - eta0_;
            if (s <= 0) return 0;
            return scale_ * std::pow(s, omega_ + 1) / (omega_ + 1);
        }
        case Kind::Exp2m1: {
            if (std::fabs(t) < 1e-4) {
                // expm1(2t)/2 - t = t^2 + 2t^3/3 + t^4/3 + ...
                return scale_ * t * t * (1 + t * (2.0 / 3 + t / 3.0));
            }
            return scale_ * (0.5 * std::expm1(2 * t) - t);
        }
        case Kind::Custom: {
            if (F_) return scale_ * F_(t);
            return scale_ * num::integrate(fn_, 0.0, t, 1e-12);
        }
    }
    return 0;
}

Nonlinearity Nonlinearity::scaled(double s) const {
    Nonlinearity f = *this;
    f.scale_ *= s;
    return f;
}

std::optional<double> Nonlinearity::inf_exponent() const {
    switch (kind_) {
        case Kind::Power: return omega_;
        case Kind::Exp2m1: return {};
        case Kind::Custom: return inf_exp_;
    }
    return {};
}

std::string Nonlinearity::name() const {
    switch (kind_) {
        case Kind::Power: return "power(omega=" + fmt(omega_) + ",threshold=" + fmt(eta0_) + ")";
        case Kind::Exp2m1: return "exp2m1";
        case Kind::Custom: return "custom";
    }
    return "?";
}

double F_eval(const Nonlinearity& f, double t) { return f.primitive(t); }

// ---------------------------------------------------------------- weight

WeightProfile WeightProfile::power_decay(double mu, double c) {
    if (!(c > 0)) throw Error(ErrorKind::OutOfRange, "weight scale must be positive");
    WeightProfile w;
    w.kind_ = Kind::PowerDecay;
    w.mu_ = mu;
    w.c_ = c;
    return w;
}

WeightProfile WeightProfile::custom(Fn value, Fn deriv) {
    WeightProfile w;
    w.kind_ = Kind::Custom;
    w.fn_ = std::move(value);
    w.dfn_ = std::move(deriv);
    return w;
}

double WeightProfile::operator()(double t) const {
    if (kind_ == Kind::PowerDecay) return c_ * std::pow(1 + t, -mu_);
    return c_ * fn_(t);
}

double WeightProfile::deriv(double t) const {
    if (kind_ == Kind::PowerDecay) return -mu_ * c_ * std::pow(1 + t, -mu_ - 1);
    return c_ * (dfn_ ? dfn_(t) : fd_deriv(fn_, t));
}

WeightProfile WeightProfile::scaled(double s) const {
    WeightProfile w = *this;
    w.c_ *= s;
    return w;
}

std::string WeightProfile::name() const {
    if (kind_ == Kind::PowerDecay) return "power_decay(mu=" + fmt(mu_) + ",c=" + fmt(c_) + ")";
    return "custom";
}

// ---------------------------------------------------------------- K

const char* to_string(KernelKind k) { return k == KernelKind::Standard ? "standard" : "mean_curvature"; }

namespace {
constexpr double kTableLo = 1e-8;
constexpr double kTableHi = 1e12;
constexpr int kTablePerDecade = 16;
}  // namespace

Kernel::Kernel(const Phi& phi, const GradientTerm& l, KernelKind kind, bool force_numeric)
    : phi_(phi), l_(l), kind_(kind) {
    using PK = Phi::Kind;
    using LK = GradientTerm::Kind;
    bool std_kind = kind == KernelKind::Standard;
    if (phi.kind() == PK::PowerLaw) {
        double p = phi.p();
        double e = -1;  // integrand exponent
        double c = 1;
        if (l.kind() == LK::Constant) {
            e = p - 1;
            c = 1 / l.c();
        } else if (l.kind() == LK::Power) {
            e = p - 1 - l.exponent();
        } else if (l.kind() == LK::PhiQuotient) {
            e = l.chi();
        }
        if (e > -1e300 && l.kind() != LK::Custom) {
            closed_id_ = 0;
            b_ = e + 1;
            a_ = c * (std_kind ? (p - 1) : 1.0) / b_;
        }
    } else if (l.kind() == LK::PhiQuotient && !std_kind) {
        closed_id_ = 0;
        b_ = l.chi() + 1;
        a_ = 1 / b_;
    } else if (phi.kind() == PK::MeanCurvature && l.kind() == LK::Constant && std_kind) {
        closed_id_ = 1;
        a_ = 1 / l.c();
    }

    // integrand exponent near 0
    auto zp = phi.zero_exponent();
    auto zl = l.zero_exponent();
    if (zp && zl) {
        gamma0_ = *zp - *zl;
    } else {
        gamma0_ = num::local_exponent([this](double s) { return deriv(s); }, 1e-10, 1e-9);
    }
    if (!(gamma0_ > -1)) throw Error(ErrorKind::NotIntegrableAtZero, "kernel integrand ~ t^" + fmt(gamma0_));
    if (closed_id_ == 0 && !(b_ > 0)) throw Error(ErrorKind::NotIntegrableAtZero, "kernel exponent");

    closed_ = closed_id_ >= 0 && !force_numeric;
    if (closed_id_ == 0) K_inf_ = kInf;
    if (closed_id_ == 1) K_inf_ = a_;
    if (!closed_) build_table();
}

double Kernel::deriv(double t) const {
    t = std::fabs(t);
    if (t == 0) return gamma0_ > 0 ? 0.0 : (gamma0_ == 0 ? deriv(1e-300) : kInf);
    double lv = l_(t);
    if (kind_ == KernelKind::Standard) return t * phi_.deriv(t) / lv;
    return phi_(t) / lv;
}

double Kernel::closed(double t) const {
    if (closed_id_ == 0) return a_ * std::pow(t, b_);
    double s = std::sqrt(1 + t * t);
    return a_ * t * t / (s * (1 + s));
}

double Kernel::closed_inverse(double y) const {
    if (closed_id_ == 0) return std::pow(y / a_, 1 / b_);
    double u = y / a_;
    return std::sqrt(u * (2 - u)) / (1 - u);
}

void Kernel::build_table() {
    auto h = [this](double s) { return deriv(s); };
    table_.kind = kind_;
    table_.zero_exponent = gamma0_;
    auto grid = num::log_grid(kTableLo, kTableHi, kTablePerDecade);
    table_.t.push_back(grid[0]);
    table_.K.push_back(num::integrate_from_zero(h, grid[0], gamma0_, 1e-13));
    for (std::size_t i = 1; i < grid.size(); ++i) {
        double inc = num::integrate(h, grid[i - 1], grid[i], 1e-13);
        double v = table_.K.back() + inc;
        if (!std::isfinite(v) || !std::isfinite(h(grid[i])) || v > 1e250) break;
        table_.t.push_back(grid[i]);
        table_.K.push_back(v);
    }
    K_inf_ = kInf;
    double tend = table_.t.back();
    if (tend >= kTableHi * 0.999) {
        double g = num::local_exponent(h, tend / 10, tend);
        if (g < -1.02) {
            double tail = num::integrate_tail(h, tend, 1e-12);
            if (std::isfinite(tail)) K_inf_ = table_.K.back() + tail;
        }
    }
    table_.K_inf = K_inf_;
}

double Kernel::numeric(double t) const {
    if (t <= 0) return 0;
    if (t == kInf) return K_inf_;
    auto h = [this](double s) { return deriv(s); };
    const auto& T = table_.t;
    if (t <= T.front()) return num::integrate_from_zero(h, t, gamma0_, 1e-13);
    if (t >= T.back()) {
        double v = table_.K.back() + num::integrate(h, T.back(), t, 1e-13);
        return std::min(v, K_inf_);
    }
    auto it = std::upper_bound(T.begin(), T.end(), t);
    std::size_t i = static_cast<std::size_t>(it - T.begin()) - 1;
    return table_.K[i] + num::integrate(h, T[i], t, 1e-13);
}

double Kernel::operator()(double t) const {
    t = std::fabs(t);
    if (t == 0) return 0;
    return closed_ ? closed(t) : numeric(t);
}

double Kernel::sup() const { return K_inf_; }

double Kernel::inverse(double y) const {
    if (y <= 0) return 0;
    if (y >= K_inf_) throw Error(ErrorKind::OutOfRange, "K^{-1}: value " + fmt(y) + " >= K_inf");
    if (closed_) return closed_inverse(y);
    const auto& T = table_.t;
    const auto& KK = table_.K;
    auto g = [&](double t) { return numeric(t) - y; };
    double lo, hi;
    if (y <= KK.front()) {
        // power law guess below the table
        double guess = T.front() * std::pow(y / KK.front(), 1 / (gamma0_ + 1));
        lo = guess * 0.5;
        hi = std::min(T.front(), guess * 2);
        while (g(lo) > 0) lo *= 0.5;
        while (g(hi) < 0) hi *= 2;
    } else if (y >= KK.back()) {
        lo = T.back();
        hi = 2 * lo;
        while (g(hi) < 0) {
            lo = hi;
            hi *= 2;
            if (hi > 1e300) throw Error(ErrorKind::OutOfRange, "K^{-1}: no bracket");
        }
    } else {
        auto it = std::upper_bound(KK.begin(), KK.end(), y);
        std::size_t i = static_cast<std::size_t>(it - KK.begin()) - 1;
        lo = T[i];
        hi = T[i + 1];
    }
    return num::root(g, lo, hi);
}

double kernel_eval(const Phi& phi, const GradientTerm& l, KernelKind kind, double t) {
    return Kernel(phi, l, kind)(t);
}

// ---------------------------------------------------------------- conditions

ConditionId parse_condition(const std::string& s) {
    if (s == "C1") return ConditionId::C1;
    if (s == "C2") return ConditionId::C2;
    if (s == "C2'" || s == "C2prime") return ConditionId::C2prime;
    if (s == "C3") return ConditionId::C3;
    if (s == "C4") return ConditionId::C4;
    if (s == "beta1") return ConditionId::beta1;
    if (s == "beta2") return ConditionId::beta2;
    if (s == "beta3") return ConditionId::beta3;
    if (s == "chi1") return ConditionId::chi1;
    if (s == "chi2") return ConditionId::chi2;
    if (s == "C-increasing" || s == "CIncreasing") return ConditionId::CIncreasing;
    throw Error(ErrorKind::UnknownCondition, s);
}

const char* to_string(ConditionId c) {
    switch (c) {
        case ConditionId::C1: return "C1";
        case ConditionId::C2: return "C2";
        case ConditionId::C2prime: return "C2'";
        case ConditionId::C3: return "C3";
        case ConditionId::C4: return "C4";
        case ConditionId::beta1: return "beta1";
        case ConditionId::beta2: return "beta2";
        case ConditionId::beta3: return "beta3";
        case ConditionId::chi1: return "chi1";
        case ConditionId::chi2: return "chi2";
        case ConditionId::CIncreasing: return "C-increasing";
    }
    return "?";
}

Verdict sup_verdict(const std::vector<double>& S) {
    for (double s : S)
        if (!std::isfinite(s)) return Verdict::Fails;
    std::size_t n = S.size();
    if (n < 2) return Verdict::Inconclusive;
    double base = std::max(std::fabs(S[n - 2]), 1e-300);
    if (S[n - 1] - S[n - 2] <= 1e-3 * base) return Verdict::Holds;
    if (n >= 4) {
        double lo = kInf, hi = 0;
        for (std::size_t k = n - 3; k < n; ++k) {
            if (S[k - 1] <= 0) return Verdict::Inconclusive;
            double r = std::log(S[k] / S[k - 1]);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        if (lo >= 0.02 && hi - lo <= 0.25 * hi) return Verdict::Fails;
    }
    return Verdict::Inconclusive;
}

namespace {

// Nested log domains growing one decade per step around the geometric centre (clipped).
std::vector<std::pair<double, double>> nested_domains(double lo, double hi) {
    std::vector<std::pair<double, double>> out;
    double decades = std::log10(hi / lo);
    int steps = std::max(1, static_cast<int>(std::ceil(decades / 2)));
    double c = std::sqrt(lo * hi);
    for (int k = 1; k <= steps; ++k) {
        double a = std::max(lo, c * std::pow(10.0, -k)), b = std::min(hi, c * std::pow(10.0, k));
        out.emplace_back(a, b);
    }
    return out;
}

// Domains anchored at `anchor` (lo or hi) growing toward the other end.
std::vector<std::pair<double, double>> anchored_domains(double lo, double hi, bool toward_zero) {
    std::vector<std::pair<double, double>> out;
    int steps = std::max(1, static_cast<int>(std::ceil(std::log10(hi / lo) - 1e-9)));
    for (int k = 1; k <= steps; ++k) {
        if (toward_zero)
            out.emplace_back(std::max(lo, hi * std::pow(10.0, -k)), hi);
        else
            out.emplace_back(lo, std::min(hi, lo * std::pow(10.0, k)));
    }
    return out;
}

// cumulative sup of g over the nested domains
ConditionReport sup_over(const Fn& g, const std::vector<std::pair<double, double>>& doms, double lo, double hi,
                         int per_decade) {
    auto grid = num::log_grid(lo, hi, per_decade);
    std::vector<double> val(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) val[i] = g(grid[i]);
    std::vector<double> S;
    for (auto [a, b] : doms) {
        double m = -kInf;
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (grid[i] >= a * (1 - 1e-12) && grid[i] <= b * (1 + 1e-12)) {
                double v = std::isnan(val[i]) ? kInf : val[i];
                m = std::max(m, v);
            }
        S.push_back(m);
    }
    ConditionReport rep;
    rep.constant = S.empty() ? 0 : S.back();
    rep.verdict = sup_verdict(S);
    return rep;
}

Verdict worst(Verdict a, Verdict b) {
    if (a == Verdict::Fails || b == Verdict::Fails) return Verdict::Fails;
    if (a == Verdict::Inconclusive || b == Verdict::Inconclusive) return Verdict::Inconclusive;
    return Verdict::Holds;
}

}  // namespace

ConditionReport c_increasing(const Fn& h, double lo, double hi, int per_decade) {
    auto grid = num::log_grid(lo, hi, per_decade);
    std::vector<double> hv(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) hv[i] = h(grid[i]);
    std::vector<double> S;
    for (auto [a, b] : nested_domains(lo, hi)) {
        double M = 0, C = 1;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (grid[i] < a * (1 - 1e-12) || grid[i] > b * (1 + 1e-12)) continue;
            M = std::max(M, hv[i]);
            if (hv[i] <= 0) {
                C = M > 0 ? kInf : C;
                continue;
            }
            C = std::max(C, M / hv[i]);
        }
        S.push_back(C);
    }
    ConditionReport rep;
    rep.constant = S.back();
    rep.verdict = sup_verdict(S);
    return rep;
}

ConditionReport check_condition(ConditionId id, const Triple& tr, const WeightProfile* weight,
                                const ConditionOptions& opt) {
    auto dom = [&](double lo, double hi) {
        return std::pair<double, double>{opt.lo > 0 ? opt.lo : lo, opt.hi > 0 ? opt.hi : hi};
    };
    auto need_weight = [&]() {
        if (!weight) throw Error(ErrorKind::ConditionFailed, std::string(to_string(id)) + " needs a weight");
    };
    int pd = opt.per_decade;
    ConditionReport rep;
    switch (id) {
        case ConditionId::C1: {
            Kernel K(tr, opt.kind);
            auto [lo, hi] = dom(1e-12, 1);
            rep = sup_over([&](double t) { return t * K.deriv(t) / K(t); }, anchored_domains(lo, hi, true), lo,
                           hi, pd);
            rep.detail = "k1 = sup tK'/K";
            break;
        }
        case ConditionId::C2: {
            Kernel K(tr, opt.kind);
            auto [lo, hi] = dom(1e-12, 1);
            auto g = num::log_grid(lo, hi, std::max(5, pd / 50));
            std::vector<double> kp(g.size());
            for (std::size_t i = 0; i < g.size(); ++i) kp[i] = K.deriv(g[i]);
            std::vector<double> S;
            for (auto [a, b] : anchored_domains(lo, hi, true)) {
                double m = 0;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    if (g[i] < a * (1 - 1e-12)) continue;
                    for (std::size_t j = i; j < g.size(); ++j) {
                        if (g[j] < a * (1 - 1e-12)) continue;
                        double r = K.deriv(g[i] * g[j]) / (kp[i] * kp[j]);
                        m = std::max(m, std::isnan(r) ? kInf : r);
                    }
                }
                S.push_back(m);
            }
            rep.constant = S.back();
            rep.verdict = sup_verdict(S);
            rep.detail = "k2 = sup K'(st)/(K'(s)K'(t))";
            break;
        }
        case ConditionId::C2prime: {
            auto [lo, hi] = dom(1e-12, 1);
            auto g = num::log_grid(lo, hi, std::max(5, pd / 50));
            std::vector<double> S1, S2;
            for (auto [a, b] : anchored_domains(lo, hi, true)) {
                double m1 = 0, m2 = 0;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    if (g[i] < a * (1 - 1e-12)) continue;
                    for (std::size_t j = i; j < g.size(); ++j) {
                        double s = g[i], t = g[j];
                        double r1 = tr.phi.deriv(s * t) / (tr.phi.deriv(s) * tr.phi.deriv(t));
                        double r2 = tr.l(s) * tr.l(t) / tr.l(s * t);
                        m1 = std::max(m1, std::isnan(r1) ? kInf : r1);
                        m2 = std::max(m2, std::isnan(r2) ? kInf : r2);
                    }
                }
                S1.push_back(m1);
                S2.push_back(m2);
            }
            rep.verdict = worst(sup_verdict(S1), sup_verdict(S2));
            rep.constant = std::max(S1.back(), S2.back());
            rep.detail = "d1 = " + fmt(S1.back()) + ", c1 = " + fmt(S2.back());
            break;
        }
        case ConditionId::C3: {
            Kernel K(tr, opt.kind);
            auto [lo, hi] = dom(1e-12, 1);
            auto h = [&](double t) { return t / K.inverse(t); };
            rep = c_increasing(h, lo, hi, pd);
            double slope = num::local_exponent(h, lo, lo * 1e3);
            Verdict lim = slope > 0.02 ? Verdict::Holds : (slope <= 0.005 ? Verdict::Fails : Verdict::Inconclusive);
            rep.verdict = worst(rep.verdict, lim);
            rep.detail = "C-increasing constant, t/K^{-1}(t) ~ t^" + fmt(slope) + " at 0";
            break;
        }
        case ConditionId::C4: {
            Kernel K(tr, opt.kind);
            auto [lo, hi0] = dom(1e-12, 1);
            double hi = std::min(hi0, std::min(1.0, opt.eta0) * (1 - 1e-9));
            auto g = [&](double t) {
                double F = tr.f.primitive(t), fv = tr.f(t);
                if (F <= 0) return 0.0;
                return F / (K.inverse(F) * fv);
            };
            rep = sup_over(g, anchored_domains(lo, hi, true), lo, hi, pd);
            rep.detail = "c_F = sup F/(K^{-1}(F) f)";
            break;
        }
        case ConditionId::beta1: {
            need_weight();
            Kernel K(tr, opt.kind);
            auto [lo, hi] = dom(1, 1e8);
            auto g = num::log_grid(lo, hi, pd);
            bool ok = true;
            double worst_ratio = 0;
            for (double t : g) {
                double b = (*weight)(t), db = weight->deriv(t);
                if (!(b > 0) || db > 1e-14 * b || !(b < K.sup())) ok = false;
                worst_ratio = std::max(worst_ratio, std::isfinite(K.sup()) ? b / K.sup() : 0.0);
            }
            rep.verdict = ok ? Verdict::Holds : Verdict::Fails;
            rep.constant = worst_ratio;
            rep.detail = "sup beta/K_inf";
            break;
        }
        case ConditionId::beta2: {
            need_weight();
            Kernel K(tr, opt.kind);
            auto [lo, hi] = dom(1, 1e8);
            auto g = [&](double t) {
                double b = (*weight)(t);
                return -weight->deriv(t) / (K.inverse(b) * b);
            };
            rep = sup_over(g, anchored_domains(lo, hi, false), lo, hi, pd);
            rep.detail = "c_beta = sup -beta'/(K^{-1}(beta) beta)";
            break;
        }
        case ConditionId::beta3: {
            need_weight();
            auto [lo, hi] = dom(1, 1e8);
            auto q = [&](double t) { return -t * weight->deriv(t) / (*weight)(t); };
            std::vector<double> dmax;
            for (double b = hi; b > lo * 1.0000001 && dmax.size() < 4; b /= 10) {
                double m = -kInf;
                for (double t : num::log_grid(std::max(lo, b / 10), b, pd)) m = std::max(m, q(t));
                dmax.push_back(m);
            }
            double est = dmax[0];
            bool steady = dmax.size() >= 2, geometric = dmax.size() >= 3;
            for (std::size_t k = 1; k < dmax.size(); ++k) {
                if (dmax[k - 1] < 0.99 * dmax[k]) steady = false;
                if (!(dmax[k - 1] <= 0.5 * dmax[k])) geometric = false;
            }
            rep.constant = est;
            if (est < 1e-3 || geometric)
                rep.verdict = Verdict::Fails;
            else if (est >= 0.01 && steady)
                rep.verdict = Verdict::Holds;
            else
                rep.verdict = Verdict::Inconclusive;
            rep.detail = "limsup -t beta'/beta on the last decade";
            break;
        }
        case ConditionId::chi1:
        case ConditionId::chi2: {
            auto [lo, hi] = dom(1e-8, 1e8);
            double chi = opt.chi;
            Fn h;
            if (id == ConditionId::chi1)
                h = [&, chi](double t) { return std::pow(t, 1 - chi) * tr.phi.deriv(t) / tr.l(t); };
            else
                h = [&, chi](double t) { return std::pow(t, -chi) * tr.phi(t) / tr.l(t); };
            rep = c_increasing(h, lo, hi, pd);
            rep.detail = "C-increasing constant";
            break;
        }
        case ConditionId::CIncreasing: {
            if (!opt.target) throw Error(ErrorKind::ConditionFailed, "C-increasing needs a target function");
            auto [lo, hi] = dom(1e-8, 1e8);
            rep = c_increasing(opt.target, lo, hi, pd);
            rep.detail = "C-increasing constant";
            break;
        }
    }
    return rep;
}

}  // namespace qlab
