#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qlab/common.hpp"

namespace qlab {

// The operator profile: Δ_φ u = div(φ(|∇u|) ∇u/|∇u|). Odd extension for t < 0.
class Phi {
public:
    enum class Kind { PowerLaw, MeanCurvature, ExpHarmonic, PowerSum, RationalPower, Custom };

    static Phi power_law(double p);
    static Phi mean_curvature();
    static Phi exp_harmonic();
    static Phi power_sum(double p, double q);
    static Phi rational_power(double p, double q);
    static Phi custom(Fn value, Fn deriv = {}, std::optional<double> zero_exp = {},
                      std::optional<double> inf_exp = {}, std::optional<double> sup = {});

    double operator()(double t) const;
    double deriv(double t) const;
    // φ(∞), possibly +inf
    double sup() const;
    // |φ(t) - y| <= 1e-12 max(1, y); throws OutOfRange when y >= φ(∞)
    double inverse(double y) const;
    // γ with φ(t) ~ c t^γ as t -> 0 (resp. ∞); empty if unknown or not of power type
    std::optional<double> zero_exponent() const;
    std::optional<double> inf_exponent() const;

    Kind kind() const { return kind_; }
    double p() const { return p_; }
    double q() const { return q_; }
    std::string name() const;

private:
    Kind kind_ = Kind::PowerLaw;
    double p_ = 2, q_ = 1;
    Fn fn_, dfn_;
    std::optional<double> zero_exp_, inf_exp_, sup_;
};

// Gradient factor l(|∇u|); even in t.
class GradientTerm {
public:
    enum class Kind { Constant, Power, PhiQuotient, Custom };

    static GradientTerm constant(double c);
    static GradientTerm power(double e);
    static GradientTerm phi_quotient(const Phi& phi, double chi);
    static GradientTerm custom(Fn value, std::optional<double> zero_exp = {},
                               std::optional<double> inf_exp = {});

    double operator()(double t) const;
    std::optional<double> zero_exponent() const;
    std::optional<double> inf_exponent() const;
    // PhiQuotient with chi > zero exponent of φ blows up at 0
    bool singular_at_zero() const;

    Kind kind() const { return kind_; }
    double c() const { return c_; }
    double exponent() const { return e_; }
    double chi() const { return chi_; }
    const Phi* phi() const { return phi_.get(); }
    std::string name() const;

private:
    Kind kind_ = Kind::Constant;
    double c_ = 1, e_ = 0, chi_ = 0;
    std::shared_ptr<const Phi> phi_;
    Fn fn_;
    std::optional<double> zero_exp_, inf_exp_;
};

// The zero-order nonlinearity f(u), times a positive scale.
class Nonlinearity {
public:
    enum class Kind { Power, Exp2m1, Custom };

    static Nonlinearity power(double omega, double threshold = 0.0, double scale = 1.0);
    static Nonlinearity exp2m1(double scale = 1.0);
    static Nonlinearity custom(Fn value, Fn primitive = {}, std::optional<double> inf_exp = {});

    double operator()(double t) const;
    // F(t) = ∫_0^t f, equal to ∫_{threshold}^t f for Power
    double primitive(double t) const;
    Nonlinearity scaled(double s) const;
    std::optional<double> inf_exponent() const;

    Kind kind() const { return kind_; }
    double omega() const { return omega_; }
    double threshold() const { return eta0_; }
    double scale() const { return scale_; }
    std::optional<double> sign_change;
    std::string name() const;

private:
    Kind kind_ = Kind::Power;
    double omega_ = 1, eta0_ = 0, scale_ = 1;
    Fn fn_, F_;
    std::optional<double> inf_exp_;
};

// Radial weight β(r) or β̄(r).
class WeightProfile {
public:
    enum class Kind { PowerDecay, Custom };

    static WeightProfile power_decay(double mu, double c = 1.0);
    static WeightProfile custom(Fn value, Fn deriv = {});

    double operator()(double t) const;
    double deriv(double t) const;
    WeightProfile scaled(double s) const;

    Kind kind() const { return kind_; }
    double mu() const { return mu_; }
    double c() const { return c_; }
    std::string name() const;

private:
    Kind kind_ = Kind::PowerDecay;
    double mu_ = 0, c_ = 1;
    Fn fn_, dfn_;
};

struct Triple {
    Phi phi = Phi::power_law(2);
    GradientTerm l = GradientTerm::constant(1);
    Nonlinearity f = Nonlinearity::power(1);
    std::optional<WeightProfile> beta;
};

enum class KernelKind { Standard, MeanCurvature };

const char* to_string(KernelKind k);

// Sampled K on a log grid with cumulative piecewise quadrature.
struct KernelTable {
    KernelKind kind = KernelKind::Standard;
    std::vector<double> t;
    std::vector<double> K;
    double K_inf = kInf;
    double zero_exponent = 0;  // of the integrand
};

// K(t) = ∫_0^t sφ'(s)/l(s) ds (Standard) or ∫_0^t φ(s)/l(s) ds (MeanCurvature).
class Kernel {
public:
    Kernel(const Phi& phi, const GradientTerm& l, KernelKind kind = KernelKind::Standard,
           bool force_numeric = false);
    Kernel(const Triple& tr, KernelKind kind = KernelKind::Standard, bool force_numeric = false)
        : Kernel(tr.phi, tr.l, kind, force_numeric) {}

    double operator()(double t) const;
    double deriv(double t) const;  // the integrand
    double inverse(double y) const;
    double sup() const;  // K_∞
    bool closed_form() const { return closed_; }
    KernelKind kind() const { return kind_; }
    const KernelTable& table() const { return table_; }
    // exponent γ with K' ~ t^γ near 0
    double integrand_zero_exponent() const { return gamma0_; }

private:
    double numeric(double t) const;
    double closed(double t) const;
    double closed_inverse(double y) const;
    void build_table();

    Phi phi_;
    GradientTerm l_;
    KernelKind kind_;
    bool closed_ = false;
    int closed_id_ = -1;
    double a_ = 0, b_ = 0;  // closed form parameters
    double gamma0_ = 0;
    double K_inf_ = kInf;
    KernelTable table_;
};

double phi_inverse(const Phi& phi, double y);
double kernel_eval(const Phi& phi, const GradientTerm& l, KernelKind kind, double t);
double F_eval(const Nonlinearity& f, double t);

enum class ConditionId { C1, C2, C2prime, C3, C4, beta1, beta2, beta3, chi1, chi2, CIncreasing };

ConditionId parse_condition(const std::string& s);
const char* to_string(ConditionId c);

struct ConditionOptions {
    double lo = 0, hi = 0;         // 0,0 means the default domain for the condition
    int per_decade = 1000;
    double chi = 0;                // for chi1 / chi2
    KernelKind kind = KernelKind::Standard;
    double eta0 = 1;               // C4 range (0, min(1, eta0))
    Fn target;                     // for CIncreasing
};

struct ConditionReport {
    Verdict verdict = Verdict::Inconclusive;
    double constant = 0;
    std::string detail;
};

ConditionReport check_condition(ConditionId id, const Triple& tr, const WeightProfile* weight,
                                const ConditionOptions& opt = {});

// sup_{s<=t} h(s)/h(t) on a sorted sample grid, cumulative over decades
ConditionReport c_increasing(const Fn& h, double lo, double hi, int per_decade);

// Verdict from cumulative sups at decade boundaries.
Verdict sup_verdict(const std::vector<double>& decade_sups);

}  // namespace qlab
