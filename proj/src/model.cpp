#include "qlab/model.hpp"

#include <algorithm>
#include <array>
#include <boost/math/tools/minima.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "qlab/numerics.hpp"

namespace qlab {

namespace odeint = boost::numeric::odeint;

namespace {

using State2 = std::array<double, 2>;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sphere_area(int m) { return 2 * std::pow(M_PI, m / 2.0) / std::tgamma(m / 2.0); }

// Adaptive march of x' = rhs(x, t) hitting every time in `times` exactly.
// `stop` is called after each accepted step; returning true ends the march.
template <class Rhs, class Observe, class Stop>
void march(Rhs rhs, State2 x, double t0, const std::vector<double>& times, double tol, Observe observe, Stop stop) {
    auto ctrl = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State2>());
    double t = t0;
    double dt = times.empty() ? 1e-3 : std::min(1e-3, std::max(1e-8, (times.back() - t0) * 1e-4));
    for (double T : times) {
        while (t < T) {
            double h = std::min(dt, T - t);
            bool clipped = h < dt;
            State2 xs = x;
            double ts = t;
            if (ctrl.try_step(rhs, x, t, h) == odeint::success) {
                dt = clipped ? std::max(dt, h) : h;
                if (stop(ts, xs, t, x)) return;
            } else {
                dt = h;
                if (dt < 1e-14 * (1 + std::fabs(t))) throw Error(ErrorKind::NoConvergence, "step size collapsed");
            }
        }
        observe(t, x);
    }
}

}  // namespace

JacobiResult jacobi_solve(const JacobiData& data, double r_max, double tol, double sample_step) {
    if (!(r_max > 0)) throw Error(ErrorKind::OutOfRange, "jacobi_solve: r_max must be positive");
    if (sample_step <= 0) sample_step = r_max / 1000;
    std::vector<double> times;
    int n = static_cast<int>(std::ceil(r_max / sample_step - 1e-9));
    for (int i = 1; i <= n; ++i) times.push_back(std::min(r_max, i * sample_step));
    times.back() = r_max;

    const Fn& G = data.G;
    auto rhs = [&G](const State2& x, State2& dx, double t) {
        dx[0] = x[1];
        dx[1] = G(t) * x[0];
    };
    JacobiResult res;
    auto& out = res.g;
    auto push = [&](double t, const State2& x) {
        out.r.push_back(t);
        out.w.push_back(x[0]);
        out.wp.push_back(x[1]);
        out.wpp.push_back(G(t) * x[0]);
    };
    push(0, {data.g0, data.gp0});
    res.R = r_max;
    bool start_zero = data.g0 <= 0;
    auto stop = [&](double ts, const State2& xs, double t, const State2& x) {
        if (x[0] > 0) {
            start_zero = false;
            return false;
        }
        if (start_zero && ts == 0) return false;  // leaving a pole
        auto g_at = [&](double tau) {
            State2 y = xs;
            if (tau > ts)
                odeint::integrate_adaptive(odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State2>()),
                                           rhs, y, ts, tau, (tau - ts) / 10);
            return y[0];
        };
        double z = xs[0] > 0 ? num::root(g_at, ts, t, 1e-13 * (1 + t)) : ts;
        State2 y = xs;
        if (z > ts)
            odeint::integrate_adaptive(odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State2>()), rhs,
                                       y, ts, z, (z - ts) / 10);
        while (!out.r.empty() && out.r.back() >= z) {
            out.r.pop_back();
            out.w.pop_back();
            out.wp.pop_back();
            out.wpp.pop_back();
        }
        y[0] = 0;
        push(z, y);
        res.R = z;
        res.reached_end = false;
        return true;
    };
    march(rhs, {data.g0, data.gp0}, 0.0, times, tol, push, stop);
    return res;
}

struct ModelManifold::Impl {
    int m = 2;
    Kind kind = Kind::Euclidean;
    bool pole = true;
    double kappa = kNaN, alpha = kNaN, delta = kNaN;
    double rmax = kInf;
    std::string name;
    Fn log_g, y, q;  // log g, g'/g, g''/g
};

namespace {

void check_dim(int m) {
    if (m < 2) throw Error(ErrorKind::OutOfRange, "model dimension must be >= 2");
}

// Quintic with prescribed value, slope and curvature at both ends of [a, b].
struct Quintic {
    double a, h;
    std::array<double, 6> c{};  // coefficients in s = (t - a)/h

    Quintic(double a_, double b_, std::array<double, 3> left, std::array<double, 3> right) : a(a_), h(b_ - a_) {
        // basis polynomials in s, coefficients of s^0..s^5
        const double H[6][6] = {
            {1, 0, 0, -10, 15, -6},      {0, 1, 0, -6, 8, -3},      {0, 0, 0.5, -1.5, 1.5, -0.5},
            {0, 0, 0, 10, -15, 6},       {0, 0, 0, -4, 7, -3},      {0, 0, 0, 0.5, -1, 0.5},
        };
        double w[6] = {left[0], h * left[1], h * h * left[2], right[0], h * right[1], h * h * right[2]};
        for (int k = 0; k < 6; ++k)
            for (int j = 0; j < 6; ++j) c[j] += w[k] * H[k][j];
    }
    std::array<double, 3> eval(double t) const {
        double s = (t - a) / h;
        double p = 0, dp = 0, ddp = 0;
        for (int j = 5; j >= 0; --j) {
            ddp = ddp * s + 2 * dp;
            dp = dp * s + p;
            p = p * s + c[j];
        }
        return {p, dp / h, ddp / (h * h)};
    }
};

}  // namespace

ModelManifold ModelManifold::euclidean(int m) {
    check_dim(m);
    auto p = std::make_shared<Impl>();
    p->m = m;
    p->kind = Kind::Euclidean;
    p->name = "euclidean";
    p->kappa = 0;
    p->alpha = -2;
    p->log_g = [](double r) { return std::log(r); };
    p->y = [](double r) { return 1 / r; };
    p->q = [](double) { return 0.0; };
    return ModelManifold(p);
}

ModelManifold ModelManifold::hyperbolic(int m, double kappa) {
    check_dim(m);
    if (!(kappa > 0)) throw Error(ErrorKind::OutOfRange, "hyperbolic model needs kappa > 0");
    auto p = std::make_shared<Impl>();
    p->m = m;
    p->kind = Kind::Hyperbolic;
    p->kappa = kappa;
    p->alpha = 0;
    std::ostringstream os;
    os << "hyperbolic(kappa=" << kappa << ")";
    p->name = os.str();
    p->log_g = [kappa](double r) {
        double x = kappa * r;
        if (x < 20) return std::log(std::sinh(x) / kappa);
        return x + std::log1p(-std::exp(-2 * x)) - std::log(2 * kappa);
    };
    p->y = [kappa](double r) { return kappa / std::tanh(kappa * r); };
    p->q = [kappa](double) { return kappa * kappa; };
    return ModelManifold(p);
}

ModelManifold ModelManifold::example_pinch(int m, double delta) {
    check_dim(m);
    if (!(delta >= 0)) throw Error(ErrorKind::OutOfRange, "example_pinch needs delta >= 0");
    auto p = std::make_shared<Impl>();
    p->m = m;
    p->kind = Kind::ExamplePinch;
    p->delta = delta;
    p->alpha = 2 * delta - 2;
    std::ostringstream os;
    os << "example_pinch(delta=" << delta << ")";
    p->name = os.str();
    double e1 = std::exp(-1.0);
    Quintic glue(0.25, 1.0, {0.25, 1, 0}, {e1, -delta * e1, delta * e1});
    for (int i = 0; i <= 300; ++i) {
        double t = 0.25 + 0.75 * i / 300;
        if (!(glue.eval(t)[0] > 0)) throw Error(ErrorKind::OutOfRange, "example_pinch: glue is not positive");
    }
    p->log_g = [glue, delta](double t) {
        if (t <= 0.25) return std::log(t);
        if (t >= 1) return -std::pow(t, delta);
        return std::log(glue.eval(t)[0]);
    };
    p->y = [glue, delta](double t) {
        if (t <= 0.25) return 1 / t;
        if (t >= 1) return -delta * std::pow(t, delta - 1);
        auto v = glue.eval(t);
        return v[1] / v[0];
    };
    p->q = [glue, delta](double t) {
        if (t <= 0.25) return 0.0;
        if (t >= 1) return delta * delta * std::pow(t, 2 * delta - 2) - delta * (delta - 1) * std::pow(t, delta - 2);
        auto v = glue.eval(t);
        return v[2] / v[0];
    };
    return ModelManifold(p);
}

ModelManifold ModelManifold::jacobi_power(int m, double kappa, double alpha) {
    check_dim(m);
    if (!(kappa >= 0)) throw Error(ErrorKind::OutOfRange, "jacobi_power needs kappa >= 0");
    if (!(alpha >= -2)) throw Error(ErrorKind::OutOfRange, "jacobi_power needs alpha >= -2");
    auto p = std::make_shared<Impl>();
    p->m = m;
    p->kind = Kind::JacobiPower;
    p->kappa = kappa;
    p->alpha = alpha;
    std::ostringstream os;
    os << "jacobi_power(kappa=" << kappa << ",alpha=" << alpha << ")";
    p->name = os.str();
    const double k2 = kappa * kappa;
    Fn G = [k2, alpha](double r) { return k2 * std::pow(1 + r * r, alpha / 2); };
    const double r1 = 1, r_end = 1e16;
    p->rmax = r_end;

    // [0, 1]: direct march of g
    auto near = jacobi_solve({G, 0, 1}, r1, 1e-12, 1e-3);
    // slow manifold of the Riccati equation, valid once kappa r^{1+alpha/2} is large
    auto wkb = [k2, alpha](double r) {
        double G0 = k2 * std::pow(1 + r * r, alpha / 2), sg = std::sqrt(G0);
        double L = alpha * r / (1 + r * r), Lp = alpha * (1 - r * r) / ((1 + r * r) * (1 + r * r));
        double y1 = -L / 4, y1p = -Lp / 4;
        return sg + y1 - (y1p + y1 * y1) / (2 * sg);
    };
    double r_s = kInf;
    if (alpha > -2 && kappa > 0) r_s = std::max(r1, std::pow(1e3 / kappa, 1 / (1 + alpha / 2)));

    // r >= 1 in s = log r with Y = r g'/g: Y' = Y + r^2 G - Y^2
    auto sg = num::lin_grid(0, std::log(r_end), static_cast<int>(std::log10(r_end) * 200) + 1);
    std::vector<double> Y(sg.size()), dY(sg.size());
    auto rhsY = [&G](const State2& x, State2& dx, double s) {
        double r = std::exp(s);
        dx[0] = x[0] + r * r * G(r) - x[0] * x[0];
        dx[1] = 0;
    };
    double s_s = std::isfinite(r_s) ? std::log(r_s) : kInf;
    std::vector<double> times;
    for (double s : sg)
        if (s > 0 && s <= s_s) times.push_back(s);
    std::size_t k = 0;
    Y[0] = r1 * near.g.wp.back() / near.g.w.back();
    if (!times.empty()) {
        march(
            rhsY, {Y[0], 0}, 0.0, times, 1e-11, [&](double, const State2& x) { Y[++k] = x[0]; },
            [](double, const State2&, double, const State2&) { return false; });
    }
    for (std::size_t i = k + 1; i < sg.size(); ++i) {
        double r = std::exp(sg[i]);
        Y[i] = r * wkb(r);
    }
    for (std::size_t i = 0; i < sg.size(); ++i) {
        double r = std::exp(sg[i]);
        dY[i] = Y[i] + r * r * G(r) - Y[i] * Y[i];
    }
    auto lg = num::cumulative(sg, Y);
    double lg1 = std::log(near.g.w.back());
    for (double& v : lg) v += lg1;

    auto tab_g = near.g;
    p->log_g = [tab_g, sg, Y, lg, k2](double r) {
        if (r < 1e-3) return std::log(r) + k2 * r * r / 6;
        if (r <= 1) return std::log(num::hermite(tab_g.r, tab_g.w, tab_g.wp, r));
        if (r > 1e16) throw Error(ErrorKind::OutOfRange, "jacobi_power tabulated up to 1e16");
        return num::hermite(sg, lg, Y, std::log(r));
    };
    p->y = [tab_g, sg, Y, dY, k2, r_s, wkb](double r) {
        if (r < 1e-3) return 1 / r + k2 * r / 3;
        if (r <= 1) return num::hermite(tab_g.r, tab_g.wp, tab_g.wpp, r) / num::hermite(tab_g.r, tab_g.w, tab_g.wp, r);
        if (r >= r_s) return wkb(r);
        return num::hermite(sg, Y, dY, std::log(r)) / r;
    };
    p->q = G;
    return ModelManifold(p);
}

ModelManifold ModelManifold::from_jacobi(int m, const JacobiData& data, double r_max) {
    check_dim(m);
    auto sol = jacobi_solve(data, r_max, 1e-10, r_max / 4000);
    auto p = std::make_shared<Impl>();
    p->m = m;
    p->kind = Kind::FromJacobi;
    p->pole = data.g0 == 0;
    p->rmax = sol.R;
    p->name = "from_jacobi";
    auto tab = sol.g;
    Fn G = data.G;
    double gp0 = data.gp0;
    bool pole = p->pole;
    auto check = [rmax = sol.R](double r) {
        if (r > rmax) throw Error(ErrorKind::OutOfRange, "from_jacobi model only defined up to its first zero/r_max");
    };
    p->log_g = [tab, pole, gp0, G, check](double r) {
        check(r);
        if (pole && r < 1e-3) return std::log(gp0 * r) + G(0) * r * r / 6;
        return std::log(num::hermite(tab.r, tab.w, tab.wp, r));
    };
    p->y = [tab, pole, G, check](double r) {
        check(r);
        if (pole && r < 1e-3) return 1 / r + G(0) * r / 3;
        return num::hermite(tab.r, tab.wp, tab.wpp, r) / num::hermite(tab.r, tab.w, tab.wp, r);
    };
    p->q = G;
    return ModelManifold(p);
}

ModelManifold ModelManifold::custom(int m, Fn g, Fn gp, bool point_pole) {
    check_dim(m);
    auto p = std::make_shared<Impl>();
    p->m = m;
    p->kind = Kind::Custom;
    p->pole = point_pole;
    p->name = "custom";
    p->log_g = [g](double r) { return std::log(g(r)); };
    p->y = [g, gp](double r) { return gp(r) / g(r); };
    p->q = [g, gp](double r) {
        double h = 1e-5 * (1 + r);
        double lo = std::max(r - h, 0.5 * r);
        return (gp(r + h) - gp(lo)) / (r + h - lo) / g(r);
    };
    return ModelManifold(p);
}

int ModelManifold::dim() const { return impl_->m; }
ModelManifold::Kind ModelManifold::kind() const { return impl_->kind; }
bool ModelManifold::point_pole() const { return impl_->pole; }
std::string ModelManifold::name() const { return impl_->name; }
double ModelManifold::kappa() const { return impl_->kappa; }
double ModelManifold::alpha() const { return impl_->alpha; }
double ModelManifold::delta() const { return impl_->delta; }
double ModelManifold::r_max() const { return impl_->rmax; }

double ModelManifold::log_g(double r) const { return impl_->log_g(r); }
double ModelManifold::dlog_g(double r) const { return impl_->y(r); }
double ModelManifold::gpp_over_g(double r) const { return impl_->q(r); }
double ModelManifold::g(double r) const { return std::exp(log_g(r)); }
double ModelManifold::gp(double r) const { return dlog_g(r) * g(r); }
double ModelManifold::gpp(double r) const { return gpp_over_g(r) * g(r); }

double ModelManifold::log_v(double r) const { return std::log(sphere_area(impl_->m)) + (impl_->m - 1) * log_g(r); }
double ModelManifold::v(double r) const { return std::exp(log_v(r)); }
double ModelManifold::laplacian(double r) const { return (impl_->m - 1) * dlog_g(r); }
double ModelManifold::radial_curvature(double r) const { return -gpp_over_g(r); }

double ModelManifold::log_V(double r) const {
    if (!(r > 0)) return -kInf;
    double ref = log_v(r);
    for (int j = 1; j < 64; ++j) ref = std::max(ref, log_v(r * j / 64));
    auto f = [&](double s) { return s <= 0 ? 0.0 : std::exp(log_v(s) - ref); };
    double sum = 0, b = r;
    for (int k = 0; k < 60; ++k) {
        double a = b / 2;
        double piece = num::integrate(f, a, b, 1e-12);
        sum += piece;
        b = a;
        if (k > 4 && piece <= 1e-17 * sum) break;
    }
    sum += num::integrate(f, 0, b, 1e-12);
    return ref + std::log(sum);
}

double ModelManifold::V(double r) const { return std::exp(log_V(r)); }

RadialGeometry radial_geometry(const ModelManifold& M, double r) {
    if (!(r > 0)) throw Error(ErrorKind::OutOfRange, "radial_geometry needs r > 0");
    return {M.v(r), M.V(r), M.laplacian(r), M.radial_curvature(r)};
}

GrowthEstimate volume_growth_exponent(const ModelManifold& M, GrowthRegime regime, double r_end) {
    const int K = 10;
    std::vector<double> rs, lv;
    for (int k = 0; k <= K; ++k) {
        double r = r_end / std::pow(2.0, K - k);
        rs.push_back(r);
        lv.push_back(M.log_V(r));
    }
    auto h = [&](double r) {
        return regime.kind == GrowthRegime::Kind::LogOfR ? std::log(r) : std::pow(r, regime.gamma);
    };
    GrowthEstimate est;
    for (int k = 0; k < K; ++k) est.slopes.push_back((lv[k + 1] - lv[k]) / (h(rs[k + 1]) - h(rs[k])));
    auto aitken = [&](std::size_t j) {
        double a = est.slopes[j], b = est.slopes[j + 1], c = est.slopes[j + 2];
        double den = (c - b) - (b - a);
        if (std::fabs(den) <= 1e-14 * (1 + std::fabs(c))) return c;
        return c - (c - b) * (c - b) / den;
    };
    std::size_t n = est.slopes.size();
    double last = aitken(n - 3), prev = aitken(n - 4);
    est.value = last;
    est.status = std::fabs(last - prev) <= 1e-3 * std::max(1.0, std::fabs(last)) ? Verdict::Holds
                                                                                  : Verdict::Inconclusive;
    return est;
}

namespace {

// v(t)^{1/(p-1)} int_t^inf v^{-1/(p-1)}
double scaled_tail(const ModelManifold& M, double p, double t) {
    if (!(p > 1)) throw Error(ErrorKind::OutOfRange, "p must exceed 1");
    if (!(t > 0)) throw Error(ErrorKind::OutOfRange, "radius must be positive");
    if (M.r_max() < 1e8)
        throw Error(ErrorKind::OutOfRange, "model not known far enough out for a tail integral");
    // decay exponent of v^{-1/(p-1)} far out
    double e_far = kNaN;
    for (double s_far : {1e2 * (1 + t), 1e4 * (1 + t), 1e6 * (1 + t), 1e8 * (1 + t)}) {
        if (s_far > M.r_max()) break;
        double e = (M.dim() - 1) * s_far * M.dlog_g(s_far) / (p - 1);
        if (std::isfinite(e)) e_far = e;
    }
    if (!(e_far > 1 + 1e-6))
        throw Error(ErrorKind::Parabolic, "v^{-1/(p-1)} is not integrable at infinity (decay exponent " +
                                              std::to_string(e_far) + ")");
    double lvt = M.log_v(t);
    double far = M.r_max();
    auto f = [&](double s) { return s > far ? 0.0 : std::exp(-(M.log_v(s) - lvt) / (p - 1)); };
    double I = num::integrate_tail(f, t, 1e-12);
    if (!std::isfinite(I)) throw Error(ErrorKind::Parabolic, "tail quadrature diverged");
    return I;
}

}  // namespace

double green_kernel_model(const ModelManifold& M, double p, double r) {
    return scaled_tail(M, p, r) * std::exp(-M.log_v(r) / (p - 1));
}

double critical_curve(const ModelManifold& M, double p, double t) {
    return std::pow((p - 1) / p, p) * std::pow(scaled_tail(M, p, t), -p);
}

double fake_distance_model(const ModelManifold& M, double p, double green_value) {
    if (!(green_value > 0)) throw Error(ErrorKind::OutOfRange, "Green value must be positive");
    double target = std::log(green_value);
    auto f = [&](double rho) { return std::log(green_kernel_model(M, p, rho)) - target; };
    double lo = 1, hi = 1;
    while (f(lo) < 0) {
        lo /= 2;
        if (lo < 1e-8) throw Error(ErrorKind::OutOfRange, "Green value above the kernel's range");
    }
    while (f(hi) > 0) {
        hi *= 2;
        if (hi > 1e7) throw Error(ErrorKind::OutOfRange, "Green value below the kernel's range");
    }
    return num::root(f, lo, hi, 1e-13 * hi);
}

double fake_distance_gradient(const ModelManifold& M, double p, double r) {
    double chi = critical_curve(M, p, r);
    double Gr = green_kernel_model(M, p, r);
    double dG = std::exp(-M.log_v(r) / (p - 1));
    return (p - 1) / p * std::pow(chi, -1 / p) * dG / Gr;
}

double radial_p_laplacian_via_rho(const ModelManifold& M, double p, const AnalyticProfile& psi, double r) {
    double d = psi.up(r), dd = psi.upp(r);
    double ad = std::fabs(d);
    double phi = ad > 0 ? std::pow(ad, p - 2) * d : 0;
    double dphi = ad > 0 ? (p - 1) * std::pow(ad, p - 2) : (p == 2 ? 1.0 : 0.0);
    return dphi * dd + phi * (M.dim() - 1) * M.dlog_g(r);
}

double csp_initial_slope(double alpha, double kappa) {
    if (alpha >= 0 || kappa == 0) return kappa;
    return (alpha + std::sqrt(alpha * alpha + 16 * kappa * kappa)) / 4;
}

double kappa_bar(double kappa) { return (1 + std::sqrt(1 + 4 * kappa * kappa)) / 2; }

ComparisonResult closed_form_comparison(const Fn& G, const Fn& Gp, double lambda, JacobiDirection dir, double t_max,
                                        int n) {
    ComparisonResult res;
    // theta range over R+: log grid for the far field plus the working grid
    double lo = kInf, hi = -kInf;
    auto theta = [&](double t) {
        double g = G(t);
        return g > 0 ? Gp(t) / (2 * std::pow(g, 1.5)) : (Gp(t) >= 0 ? kInf : -kInf);
    };
    std::vector<double> ts = num::log_grid(1e-8, 1e8, 50);
    for (double t : num::lin_grid(0, t_max, 201)) ts.push_back(t);
    std::sort(ts.begin(), ts.end());
    std::vector<double> th(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) th[i] = theta(ts[i]);
    auto ilo = std::min_element(th.begin(), th.end()) - th.begin();
    auto ihi = std::max_element(th.begin(), th.end()) - th.begin();
    lo = th[ilo];
    hi = th[ihi];
    // the extremum may sit between samples
    auto refine = [&](std::size_t i, double sign) {
        double a = ts[i > 0 ? i - 1 : 0], b = ts[std::min(i + 1, ts.size() - 1)];
        if (!(b > a)) return sign * th[i];
        auto r = boost::math::tools::brent_find_minima([&](double t) { return sign * theta(t); }, a, b, 52);
        return std::min(sign * th[i], r.second);
    };
    if (std::isfinite(lo)) lo = refine(ilo, 1);
    if (std::isfinite(hi)) hi = -refine(ihi, -1);
    const double big = 1e12;
    if (lo < -big) lo = -kInf;
    if (hi > big) hi = kInf;
    res.theta_lo = lo;
    res.theta_hi = hi;
    auto Dp = [](double t) { return 0.5 * (-t + std::sqrt(t * t + 4)); };
    auto Dm = [](double t) { return 0.5 * (-t - std::sqrt(t * t + 4)); };
    double sG0 = std::sqrt(std::max(0.0, G(0)));

    bool found = false;
    if (dir == JacobiDirection::Upper) {
        // D <= D_-(theta_hi) or D >= D_+(theta_lo); C >= 1, C D sqrt G(0) >= lambda
        if (std::isfinite(lo)) {
            double D = Dp(lo);
            if (D * sG0 > 0) {
                res.D = D;
                res.C = std::max(1.0, lambda / (D * sG0));
                found = true;
            } else if (lambda <= 0) {
                res.D = D;
                res.C = 1;
                found = true;
            }
        }
        if (!found && std::isfinite(hi)) {
            double D = Dm(hi);
            if (lambda <= D * sG0) {
                res.D = D;
                res.C = 1;
                found = true;
            }
        }
    } else {
        // D in [D_-(theta_lo), D_+(theta_hi)], C in (0, 1], C D sqrt G(0) <= lambda
        std::vector<double> cand;
        if (std::isfinite(hi)) cand.push_back(Dp(hi));
        if (std::isfinite(lo)) cand.push_back(Dm(lo));
        double dlo = std::isfinite(lo) ? Dm(lo) : 0, dhi = std::isfinite(hi) ? Dp(hi) : 0;
        if (!std::isfinite(lo) || !std::isfinite(hi)) cand.push_back(0.5 * (dlo + dhi));
        for (double D : cand) {
            double s = D * sG0;
            if (s <= lambda) {
                res.D = D;
                res.C = 1;
                found = true;
            } else if (lambda > 0) {
                res.D = D;
                res.C = lambda / s;
                found = true;
            }
            if (found) break;
        }
    }
    if (!found) throw Error(ErrorKind::NoAdmissibleD, "no admissible (C, D) for this G, lambda and direction");

    auto t = num::lin_grid(0, t_max, n);
    std::vector<double> sq(n);
    for (int i = 0; i < n; ++i) sq[i] = std::sqrt(std::max(0.0, G(t[i])));
    auto I = num::cumulative(t, sq);
    res.g.r = t;
    res.min_residual = kInf;
    res.max_residual = -kInf;
    bool ok = true;
    for (int i = 0; i < n; ++i) {
        double e = std::exp(res.D * I[i]);
        double Gi = G(t[i]);
        double gv = 1 + res.C * (e - 1);
        double gpv = res.C * res.D * sq[i] * e;
        double gppv = res.C * e * (sq[i] > 0 ? res.D * Gp(t[i]) / (2 * sq[i]) + res.D * res.D * Gi : 0);
        res.g.w.push_back(gv);
        res.g.wp.push_back(gpv);
        res.g.wpp.push_back(gppv);
        double resid = gppv - Gi * gv;
        res.min_residual = std::min(res.min_residual, resid);
        res.max_residual = std::max(res.max_residual, resid);
        double band = 1e-10 * std::max(1.0, std::fabs(Gi * gv));
        if (dir == JacobiDirection::Upper ? resid < -band : resid > band) ok = false;
    }
    res.sign_ok = ok;
    return res;
}

ComparisonResult closed_form_comparison_power(double kappa, double alpha, double lambda, JacobiDirection dir,
                                              double t_max, int n) {
    double k2 = kappa * kappa;
    Fn G = [k2, alpha](double t) { return k2 * std::pow(1 + t * t, alpha / 2); };
    Fn Gp = [k2, alpha](double t) { return k2 * alpha * t * std::pow(1 + t * t, alpha / 2 - 1); };
    return closed_form_comparison(G, Gp, lambda, dir, t_max, n);
}

}  // namespace qlab
