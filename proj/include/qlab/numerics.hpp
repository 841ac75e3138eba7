#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "qlab/common.hpp"

namespace qlab::num {

// Adaptive Gauss-Kronrod 15 on a finite interval.
double integrate(const Fn& f, double a, double b, double rel_tol = 1e-12, double* err = nullptr);

// Integral over [a, inf) by exp-sinh. Returns inf if the quadrature does not settle.
double integrate_tail(const Fn& f, double a, double rel_tol = 1e-12, double* err = nullptr);

// Integral over [0, t] of an integrand behaving like s^gamma near 0, gamma > -1.
// Uses s = t u^k with k = 1/(gamma+1) so the transformed integrand is bounded.
double integrate_from_zero(const Fn& f, double t, double gamma, double rel_tol = 1e-12);

std::vector<double> log_grid(double a, double b, int per_decade);
std::vector<double> lin_grid(double a, double b, int n);

// Cumulative integral of sampled y over nonuniform x, exact for cubics (4-point Lagrange).
std::vector<double> cumulative(const std::vector<double>& x, const std::vector<double>& y);

// The same rule with the per-interval weights precomputed for repeated use on one grid.
class CumulativeRule {
public:
    explicit CumulativeRule(const std::vector<double>& x);
    // integral of y over [x_i, x_{i+1}]
    double increment(const std::vector<double>& y, std::size_t i) const;
    std::vector<double> apply(const std::vector<double>& y) const;

private:
    std::size_t n_;
    std::vector<double> x_;
    std::vector<std::array<double, 4>> weights_;
    std::vector<std::size_t> start_;
};

// Piecewise linear interpolation on a sorted table; clamps outside.
double interp(const std::vector<double>& x, const std::vector<double>& y, double t);

// Root of f in [a, b] with f(a), f(b) of opposite sign (TOMS 748).
double root(const Fn& f, double a, double b, double abs_tol = 0.0, int max_iter = 200);

// Cubic Hermite interpolation from values and slopes; linear extension outside.
double hermite(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& yp, double t);
double hermite_slope(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& yp,
                     double t);

// G(x) = integral of a positive g between an anchor and x, tabulated on nodes and refined inside a
// cell by adaptive quadrature, so evaluation and inversion use the same function.
// Left: G(x) = int_{x0}^x g, with g ~ (s - x0)^gamma allowed at x0.
// Right: G(x) = int_x^{x1} g, with x1 = +inf allowed (tail by exp-sinh beyond the last node).
class MonotoneIntegral {
public:
    enum class Anchor { Left, Right };

    MonotoneIntegral() = default;
    MonotoneIntegral(Fn g, std::vector<double> nodes, Anchor anchor, double gamma = 0, bool open_right = false);

    double operator()(double x) const;
    // x with G(x) = y; y must lie in [0, total()]
    double inverse(double y) const;
    double total() const;  // G at the far end (the unanchored one)
    double lo() const { return x_.front(); }
    double hi() const { return open_ ? kInf : x_.back(); }
    const std::vector<double>& nodes() const { return x_; }
    const std::vector<double>& values() const { return v_; }

private:
    double cell(std::size_t i, double x) const;

    Fn g_;
    std::vector<double> x_, v_;
    Anchor anchor_ = Anchor::Left;
    double gamma_ = 0;
    bool open_ = false;
    double tail_ = 0;
};

// Local power exponent d log g / d log s from two samples.
double local_exponent(const Fn& g, double s1, double s2);

}  // namespace qlab::num
