#include "qlab/numerics.hpp"

#include <algorithm>
#include <array>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>

namespace qlab {

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Holds: return "Holds";
        case Verdict::Fails: return "Fails";
        case Verdict::Inconclusive: return "Inconclusive";
    }
    return "?";
}

const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::OutOfRange: return "OutOfRange";
        case ErrorKind::NotIntegrableAtZero: return "NotIntegrableAtZero";
        case ErrorKind::UnknownCondition: return "UnknownCondition";
        case ErrorKind::KernelUndefined: return "KernelUndefined";
        case ErrorKind::NonPositiveSample: return "NonPositiveSample";
        case ErrorKind::Parabolic: return "Parabolic";
        case ErrorKind::NoAdmissibleD: return "NoAdmissibleD";
        case ErrorKind::RestrictionViolated: return "RestrictionViolated";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::KellerOssermanViolated: return "KellerOssermanViolated";
        case ErrorKind::ConditionFailed: return "ConditionFailed";
        case ErrorKind::SearchExhausted: return "SearchExhausted";
        case ErrorKind::WeightIncompatible: return "WeightIncompatible";
        case ErrorKind::Unsupported: return "Unsupported";
        case ErrorKind::Config: return "ConfigError";
    }
    return "?";
}

namespace {
std::size_t locate(const std::vector<double>& x, double t) {
    auto it = std::upper_bound(x.begin(), x.end(), t);
    std::size_t i = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
    return std::min(i, x.size() - 2);
}
}  // namespace

double RadialFunction::value_at(double x) const {
    if (r.size() < 2) return w.empty() ? 0.0 : w[0];
    return num::hermite(r, w, wp, x);
}

double RadialFunction::slope_at(double x) const {
    if (r.size() < 2) return wp.empty() ? 0.0 : wp[0];
    return num::hermite_slope(r, w, wp, x);
}

namespace num {

double integrate(const Fn& f, double a, double b, double rel_tol, double* err) {
    if (a == b) {
        if (err) *err = 0;
        return 0.0;
    }
    // Boost compares the unscaled local error against a scaled tolerance, so map to [-1, 1] first
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    auto g = [&](double x) { return f(mid + half * x) * half; };
    double e = 0;
    double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(g, -1.0, 1.0, 12, rel_tol, &e);
    if (err) *err = e;
    return v;
}

double integrate_tail(const Fn& f, double a, double rel_tol, double* err) {
    boost::math::quadrature::exp_sinh<double> es;
    double e = 0, l1 = 0;
    try {
        double v = es.integrate(f, a, kInf, rel_tol, &e, &l1);
        if (err) *err = e;
        if (!std::isfinite(v)) return kInf;
        return v;
    } catch (const std::exception&) {
        if (err) *err = kInf;
        return kInf;
    }
}

double integrate_from_zero(const Fn& f, double t, double gamma, double rel_tol) {
    if (t <= 0) return 0.0;
    double k = 1.0 / (gamma + 1.0);
    auto g = [&](double u) {
        if (u <= 0) return 0.0;
        double s = t * std::pow(u, k);
        if (s <= 0) return 0.0;
        double v = f(s) * t * k * std::pow(u, k - 1.0);
        return std::isfinite(v) ? v : 0.0;
    };
    return integrate(g, 0.0, 1.0, rel_tol);
}

std::vector<double> log_grid(double a, double b, int per_decade) {
    int n = std::max(2, static_cast<int>(std::ceil(std::log10(b / a) * per_decade)) + 1);
    std::vector<double> x(n);
    double la = std::log(a), lb = std::log(b);
    for (int i = 0; i < n; ++i) x[i] = std::exp(la + (lb - la) * i / (n - 1));
    x.front() = a;
    x.back() = b;
    return x;
}

std::vector<double> lin_grid(double a, double b, int n) {
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = a + (b - a) * i / (n - 1);
    x.back() = b;
    return x;
}

CumulativeRule::CumulativeRule(const std::vector<double>& x) : n_(x.size()) {
    if (n_ < 4) {
        x_ = x;
        return;
    }
    const double g = 0.5 / std::sqrt(3.0);
    weights_.resize(n_ - 1);
    start_.resize(n_ - 1);
    for (std::size_t i = 0; i + 1 < n_; ++i) {
        std::size_t j0 = i == 0 ? 0 : std::min(i - 1, n_ - 4);
        double a = x[i], b = x[i + 1], h = b - a;
        std::array<double, 4> w{};
        for (double s : {0.5 - g, 0.5 + g}) {
            double t = a + s * h;
            for (std::size_t j = j0; j < j0 + 4; ++j) {
                double L = 1;
                for (std::size_t k = j0; k < j0 + 4; ++k)
                    if (k != j) L *= (t - x[k]) / (x[j] - x[k]);
                w[j - j0] += 0.5 * h * L;
            }
        }
        weights_[i] = w;
        start_[i] = j0;
    }
}

double CumulativeRule::increment(const std::vector<double>& y, std::size_t i) const {
    if (n_ < 4) return 0.5 * (y[i] + y[i + 1]) * (x_[i + 1] - x_[i]);
    const auto& w = weights_[i];
    std::size_t j = start_[i];
    return w[0] * y[j] + w[1] * y[j + 1] + w[2] * y[j + 2] + w[3] * y[j + 3];
}

std::vector<double> CumulativeRule::apply(const std::vector<double>& y) const {
    std::vector<double> c(n_, 0.0);
    for (std::size_t i = 0; i + 1 < n_; ++i) c[i + 1] = c[i] + increment(y, i);
    return c;
}

std::vector<double> cumulative(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() < 2) return std::vector<double>(x.size(), 0.0);
    return CumulativeRule(x).apply(y);
}

double interp(const std::vector<double>& x, const std::vector<double>& y, double t) {
    if (t <= x.front()) return y.front();
    if (t >= x.back()) return y.back();
    std::size_t i = locate(x, t);
    double s = (t - x[i]) / (x[i + 1] - x[i]);
    return y[i] + s * (y[i + 1] - y[i]);
}

double root(const Fn& f, double a, double b, double abs_tol, int max_iter) {
    double fa = f(a), fb = f(b);
    if (fa == 0) return a;
    if (fb == 0) return b;
    if ((fa > 0) == (fb > 0)) throw Error(ErrorKind::OutOfRange, "root not bracketed");
    boost::uintmax_t it = static_cast<boost::uintmax_t>(max_iter);
    auto tol = [abs_tol](double u, double v) {
        return std::fabs(u - v) <= std::max(abs_tol, 4 * std::numeric_limits<double>::epsilon() *
                                                         std::min(std::fabs(u), std::fabs(v)));
    };
    auto res = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, it);
    // wide brackets with flat stretches can exhaust the budget; finish by bisection
    double lo = res.first, hi = res.second, flo = f(lo);
    for (int k = 0; k < 2200 && !tol(lo, hi); ++k) {
        double mid = 0.5 * (lo + hi), fm = f(mid);
        if (fm == 0) return mid;
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double hermite(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& yp, double t) {
    if (t <= x.front()) return y.front() + yp.front() * (t - x.front());
    if (t >= x.back()) return y.back() + yp.back() * (t - x.back());
    std::size_t i = locate(x, t);
    double h = x[i + 1] - x[i], s = (t - x[i]) / h;
    double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
    double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
    return h00 * y[i] + h10 * h * yp[i] + h01 * y[i + 1] + h11 * h * yp[i + 1];
}

double hermite_slope(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& yp,
                     double t) {
    if (t <= x.front()) return yp.front();
    if (t >= x.back()) return yp.back();
    std::size_t i = locate(x, t);
    double h = x[i + 1] - x[i], s = (t - x[i]) / h;
    double d00 = 6 * s * s - 6 * s, d10 = 3 * s * s - 4 * s + 1;
    double d01 = -6 * s * s + 6 * s, d11 = 3 * s * s - 2 * s;
    return (d00 * y[i] + d01 * y[i + 1]) / h + d10 * yp[i] + d11 * yp[i + 1];
}

double local_exponent(const Fn& g, double s1, double s2) {
    return std::log(g(s2) / g(s1)) / std::log(s2 / s1);
}


MonotoneIntegral::MonotoneIntegral(Fn g, std::vector<double> nodes, Anchor anchor, double gamma, bool open_right)
    : g_(std::move(g)), x_(std::move(nodes)), anchor_(anchor), gamma_(gamma), open_(open_right) {
    if (x_.size() < 2) throw Error(ErrorKind::OutOfRange, "monotone table needs at least two nodes");
    if (open_ && anchor_ == Anchor::Left) throw Error(ErrorKind::OutOfRange, "open right end needs a right anchor");
    std::size_t n = x_.size();
    v_.assign(n, 0.0);
    if (anchor_ == Anchor::Left) {
        for (std::size_t i = 1; i < n; ++i) v_[i] = cell(i - 1, x_[i]);
    } else {
        tail_ = open_ ? integrate_tail(g_, x_.back()) : 0.0;
        if (!std::isfinite(tail_)) throw Error(ErrorKind::OutOfRange, "tail integral diverges");
        v_[n - 1] = tail_;
        for (std::size_t i = n - 1; i-- > 0;) v_[i] = cell(i, x_[i]);
    }
}

double MonotoneIntegral::cell(std::size_t i, double x) const {
    if (anchor_ == Anchor::Left) {
        if (i == 0 && gamma_ != 0) {
            double a = x_[0];
            return integrate_from_zero([&](double s) { return g_(a + s); }, x - a, gamma_);
        }
        return v_[i] + integrate(g_, x_[i], x);
    }
    return v_[i + 1] + integrate(g_, x, x_[i + 1]);
}

double MonotoneIntegral::operator()(double x) const {
    std::size_t n = x_.size();
    if (anchor_ == Anchor::Left) {
        x = std::clamp(x, x_.front(), x_.back());
        return cell(locate(x_, x), x);
    }
    if (x >= x_.back()) return open_ ? (x == x_.back() ? tail_ : integrate_tail(g_, x)) : 0.0;
    x = std::max(x, x_.front());
    std::size_t i = locate(x_, x);
    return i + 1 < n ? cell(i, x) : tail_;
}

double MonotoneIntegral::total() const { return anchor_ == Anchor::Left ? v_.back() : v_.front(); }

double MonotoneIntegral::inverse(double y) const {
    std::size_t n = x_.size();
    if (anchor_ == Anchor::Left) {
        if (y <= 0) return x_.front();
        if (y >= v_.back()) return x_.back();
        std::size_t i = static_cast<std::size_t>(std::upper_bound(v_.begin(), v_.end(), y) - v_.begin()) - 1;
        i = std::min(i, n - 2);
        if (v_[i] == y) return x_[i];
        return root([&](double x) { return cell(i, x) - y; }, x_[i], x_[i + 1]);
    }
    if (y >= v_.front()) return x_.front();
    if (y <= 0) return open_ ? kInf : x_.back();
    if (y < tail_) {
        double a = x_.back(), b = 2 * a;
        while (integrate_tail(g_, b) > y) {
            a = b;
            b *= 2;
            if (!std::isfinite(b)) return kInf;
        }
        return root([&](double x) { return integrate_tail(g_, x) - y; }, a, b);
    }
    // v_ is decreasing: first index with v <= y
    std::size_t j = static_cast<std::size_t>(
        std::lower_bound(v_.begin(), v_.end(), y, [](double a, double b) { return a > b; }) - v_.begin());
    if (j >= n) j = n - 1;
    if (v_[j] == y) return x_[j];
    std::size_t i = j - 1;
    return root([&](double x) { return cell(i, x) - y; }, x_[i], x_[i + 1]);
}

}  // namespace num
}  // namespace qlab
