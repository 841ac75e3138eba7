#include "qlab/bvp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "qlab/numerics.hpp"

namespace qlab {

namespace odeint = boost::numeric::odeint;

const char* to_string(BoundaryKind k) { return k == BoundaryKind::Dirichlet ? "dirichlet" : "mixed"; }

const char* to_string(SlopeClass c) {
    switch (c) {
        case SlopeClass::Zero: return "zero";
        case SlopeClass::Positive: return "positive";
        case SlopeClass::Undetermined: return "undetermined";
    }
    return "?";
}

Fn BvpProblem::volume_of(const ModelManifold& M, double r0) {
    return [M, r0](double t) { return M.v(r0 + t); };
}

namespace {

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

double sup_norm(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

// Cumulative integral that keeps an exact zero set: intervals with both ends zero add nothing and an
// interval entering or leaving the support uses the trapezoid, so the 4-point stencil cannot leak
// mass across a free boundary.
std::vector<double> cumulative_support(const num::CumulativeRule& rule, const std::vector<double>& t,
                                       const std::vector<double>& g) {
    std::vector<double> out(t.size(), 0.0);
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        double inc = rule.increment(g, i);
        bool z0 = g[i] == 0, z1 = g[i + 1] == 0;
        if (z0 && z1)
            inc = 0;
        else if (z0 != z1)
            inc = 0.5 * (t[i + 1] - t[i]) * (g[i] + g[i + 1]);
        out[i + 1] = out[i] + inc;
    }
    return out;
}

// Everything the fixed-point operator needs on the grid.
struct Setup {
    const BvpProblem& pb;
    const Phi& phi;
    std::vector<double> t, P, A;
    num::CumulativeRule rule{{}};
    double P0 = 0, P1 = 0, theta = 0;
    double f_eta = 0, l_xi = 0, xi = 0;
    bool l_singular = false;
    // monotone continuation of φ^{-1} outside (-y_lo, y_hi)
    double y_lo = kInf, t_lo = 0, s_lo = 0;
    double y_hi = kInf, t_hi = 0, s_hi = 0;

    Setup(const BvpProblem& p, int N, const std::vector<double>& grid) : pb(p), phi(p.triple.phi) {
        if (!grid.empty()) {
            t = grid;
            N = int(t.size()) - 1;
        } else {
            t.resize(N + 1);
            for (int i = 0; i <= N; ++i) {
                double u = double(i) / N;
                t[i] = p.T * u * u;
            }
        }
        t[N] = p.T;
        rule = num::CumulativeRule(t);
        P.resize(N + 1);
        A.resize(N + 1);
        for (int i = 0; i <= N; ++i) {
            P[i] = p.volume(t[i]);
            A[i] = p.a(t[i]);
            if (!(P[i] >= 0) || !std::isfinite(P[i]))
                throw Error(ErrorKind::OutOfRange, "volume factor must be finite and nonnegative on [0,T]");
            if (!(A[i] >= 0) || !std::isfinite(A[i]))
                throw Error(ErrorKind::OutOfRange, "weight a must be finite and nonnegative on [0,T]");
        }
        P0 = *std::min_element(P.begin(), P.end());
        P1 = *std::max_element(P.begin(), P.end());
        std::vector<double> pa(N + 1);
        for (int i = 0; i <= N; ++i) pa[i] = P[i] * A[i];
        auto c = num::cumulative(t, pa);
        for (int i = 1; i <= N; ++i) theta = std::max(theta, c[i] / P[i]);

        for (double s : num::lin_grid(0, p.eta, 401)) f_eta = std::max(f_eta, p.triple.f(s));
        double s_phi = phi.sup();
        if (std::isfinite(s_phi)) {
            y_hi = s_phi * (1 - 1e-6);
            t_hi = phi.inverse(y_hi);
            s_hi = phi.deriv(t_hi);
            y_lo = 0.5 * s_phi;
            t_lo = phi.inverse(y_lo);
            s_lo = phi.deriv(t_lo);
        }
    }

    void set_xi(double x) {
        xi = x;
        const auto& l = pb.triple.l;
        l_singular = !std::isfinite(l(0.0));
        l_xi = 0;
        auto probe = [&](double s) { double v = l(s); if (std::isfinite(v)) l_xi = std::max(l_xi, v); };
        for (double s : num::lin_grid(0, xi, 401)) probe(s);
        if (!l_singular)
            for (double s : num::log_grid(xi * 1e-8, xi, 20)) probe(s);
    }

    double phinv(double y) const {
        if (y >= y_hi) return t_hi + (y - y_hi) / s_hi;
        if (y <= -y_lo) return -t_lo + (y + y_lo) / s_lo;
        return phi.inverse(y);
    }
    double f_ext(double s) const { return s <= 0 ? 0.0 : pb.triple.f(std::min(s, pb.eta)); }
    double l_ext(double s) const { return pb.triple.l(std::min(std::fabs(s), xi)); }
    double source(int i, double w, double wp) const {
        double fv = f_ext(w);
        if (fv == 0 || A[i] == 0 || P[i] == 0) return 0;
        return P[i] * A[i] * fv * l_ext(wp);
    }
    // flux bound used in the restriction, with weight k on the source term
    double restriction(double k, bool dirichlet) const {
        double src = k * theta * f_eta * l_xi;
        if (!dirichlet) return src;
        return (P1 / P0) * phi(pb.eta / pb.T) + src;
    }
};

struct Iterate {
    std::vector<double> w, wp, flux;
    double delta = 0;
};

// One application of the fixed-point operator at level sigma.
Iterate apply_H(const Setup& S, const Iterate& in, double sigma, double delta_tol) {
    std::size_t n = S.t.size();
    bool dir = S.pb.kind == BoundaryKind::Dirichlet;
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = S.source(int(i), in.w[i], in.wp[i]);
    auto J = cumulative_support(S.rule, S.t, g);
    for (auto& x : J) x *= sigma;

    Iterate out;
    out.wp.resize(n);
    out.flux.resize(n);
    auto slopes = [&](double delta) {
        for (std::size_t i = 0; i < n; ++i) {
            double fl = delta + J[i];
            out.flux[i] = fl;
            out.wp[i] = S.P[i] > 0 ? S.phinv(std::max(fl, 0.0) / S.P[i]) : 0.0;
        }
    };
    double target = sigma * S.pb.eta;
    if (dir) {
        auto defect = [&](double delta) {
            slopes(delta);
            return cumulative_support(S.rule, S.t, out.wp).back() - target;
        };
        double mu = S.restriction(1, true);
        double lo = -S.P1 * mu, hi = S.P0 * mu;
        if (!std::isfinite(lo) || !std::isfinite(hi)) {
            double m0 = S.restriction(0, true);
            lo = -S.P1 * m0;
            hi = S.P0 * m0;
        }
        double dlo = defect(lo), dhi = defect(hi);
        for (int k = 0; k < 60 && dlo > 0; ++k) dlo = defect(lo *= 2);
        for (int k = 0; k < 60 && dhi < 0; ++k) dhi = defect(hi *= 2);
        if (dlo > 0 || dhi < 0) throw Error(ErrorKind::NoConvergence, "no bracket for delta");
        if (dlo == 0)
            out.delta = lo;
        else if (dhi == 0)
            out.delta = hi;
        else
            out.delta = num::root(defect, lo, hi, delta_tol);
        slopes(out.delta);
    } else {
        slopes(0.0);
        out.wp[0] = 0;
        out.flux[0] = 0;
    }
    auto I = cumulative_support(S.rule, S.t, out.wp);
    out.w.resize(n);
    // Dirichlet: integrate from 0 so a dead core stays exactly zero (no cancellation against eta)
    // mixed: w(0) = target - I(T), snapped to 0 at rounding level so a dead core stays exact
    double w0 = target - I.back();
    if (std::fabs(w0) <= 64 * std::numeric_limits<double>::epsilon() * target) w0 = 0;
    for (std::size_t i = 0; i < n; ++i) out.w[i] = dir ? I[i] : w0 + I[i];
    return out;
}

// Shooting on the flux at 0 (Dirichlet) or on w(0) (mixed); used when the Picard continuation stalls.
bool shoot(const Setup& S, Iterate& res, double tol) {
    using State = std::array<double, 2>;
    std::size_t n = S.t.size();
    const auto& pb = S.pb;
    bool dir = pb.kind == BoundaryKind::Dirichlet;
    auto run = [&](double c, std::vector<double>* w, std::vector<double>* z) {
        auto rhs = [&](const State& x, State& dx, double r) {
            double P = pb.volume(r);
            double wp = P > 0 ? S.phinv(x[1] / P) : 0.0;
            double fv = S.f_ext(x[0]);
            dx[0] = wp;
            dx[1] = fv == 0 ? 0.0 : P * pb.a(r) * fv * S.l_ext(wp);
        };
        auto ctrl = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State>());
        State x = dir ? State{0.0, c} : State{c, 0.0};
        double r = 0, h = S.t[1];
        if (w) {
            w->assign(n, x[0]);
            z->assign(n, x[1]);
        }
        for (std::size_t i = 1; i < n; ++i) {
            while (r < S.t[i]) {
                double hh = std::min(h, S.t[i] - r);
                bool last = hh == S.t[i] - r;
                if (ctrl.try_step(rhs, x, r, hh) == odeint::success) {
                    if (last) r = S.t[i];
                    h = std::max(hh, 1e-14);
                } else {
                    h = hh;
                    if (h < 1e-14) return kInf;
                }
                if (!std::isfinite(x[0])) return kInf;
            }
            if (w) {
                (*w)[i] = x[0];
                (*z)[i] = x[1];
            }
        }
        return x[0] - pb.eta;
    };
    auto defect = [&](double c) {
        double v = run(c, nullptr, nullptr);
        return std::isfinite(v) ? v : 1e300;
    };
    double lo = 0, hi = dir ? S.P0 * S.restriction(1, true) : pb.eta;
    if (!std::isfinite(hi)) hi = S.P0 * S.restriction(0, true);
    double dhi = defect(hi);
    for (int k = 0; dir && k < 60 && dhi < 0; ++k) dhi = defect(hi *= 2);
    if (!(dhi >= 0) || defect(lo) > 0) return false;
    double c;
    try {
        c = num::root(defect, lo, hi, 1e-15);
    } catch (const Error&) {
        return false;
    }
    std::vector<double> z;
    double miss = run(c, &res.w, &z);
    // a jump of the defect at the bracket end is not a root
    if (!(std::fabs(miss) <= 1e-8 * (1 + pb.eta))) return false;
    res.delta = dir ? c : 0.0;
    res.flux = z;
    res.wp.resize(n);
    for (std::size_t i = 0; i < n; ++i) res.wp[i] = S.P[i] > 0 ? S.phinv(z[i] / S.P[i]) : 0.0;
    return true;
}

// Anderson mixing of the damped step x + beta (H(x) - x) over the last m differences.
class Mixer {
public:
    Mixer(int m, double beta) : m_(m), beta_(beta) {}

    Eigen::VectorXd next(const Eigen::VectorXd& x, const Eigen::VectorXd& hx) {
        Eigen::VectorXd f = hx - x;
        if (has_prev_ && m_ > 0) {
            dX_.push_back(x - x_prev_);
            dF_.push_back(f - f_prev_);
            if (int(dF_.size()) > m_) {
                dX_.pop_front();
                dF_.pop_front();
            }
        }
        x_prev_ = x;
        f_prev_ = f;
        has_prev_ = true;
        Eigen::VectorXd out = x + beta_ * f;
        if (dF_.empty()) return out;
        Eigen::MatrixXd F(x.size(), dF_.size()), X(x.size(), dX_.size());
        for (std::size_t j = 0; j < dF_.size(); ++j) {
            F.col(j) = dF_[j];
            X.col(j) = dX_[j];
        }
        Eigen::VectorXd g = F.colPivHouseholderQr().solve(f);
        if (!g.allFinite()) {
            reset();
            return out;
        }
        return out - (X + beta_ * F) * g;
    }
    void reset() {
        dX_.clear();
        dF_.clear();
        has_prev_ = false;
    }

private:
    int m_;
    double beta_;
    bool has_prev_ = false;
    Eigen::VectorXd x_prev_, f_prev_;
    std::deque<Eigen::VectorXd> dX_, dF_;
};

double pick_xi(Setup& S, bool dir) {
    const Phi& phi = S.phi;
    double x = 1.0 / 64;
    for (int k = 0; k < 40; ++k, x *= 2) {
        S.set_xi(x);
        if (S.l_singular) return x;
        if (S.restriction(dir ? 2 : 1, dir) < phi(x) && x >= S.pb.eta / S.pb.T) return x;
    }
    throw Error(ErrorKind::RestrictionViolated, "no gradient ceiling up to 2^34 satisfies the restriction");
}

BvpSolution solve(const BvpProblem& pb, const BvpOptions& opt) {
    if (!(pb.T > 0) || !(pb.eta > 0)) throw Error(ErrorKind::OutOfRange, "need T > 0 and eta > 0");
    if (opt.grid.empty() && opt.N < 8) throw Error(ErrorKind::OutOfRange, "need at least 8 grid intervals");
    if (!opt.grid.empty()) {
        const auto& g = opt.grid;
        bool ok = g.size() >= 9 && g.front() == 0 && std::fabs(g.back() - pb.T) <= 1e-12 * pb.T;
        for (std::size_t i = 1; ok && i < g.size(); ++i) ok = g[i] > g[i - 1];
        if (!ok) throw Error(ErrorKind::OutOfRange, "custom grid must increase from 0 to T with at least 8 intervals");
    }
    bool dir = pb.kind == BoundaryKind::Dirichlet;
    Setup S(pb, opt.N, opt.grid);
    if (dir && !(S.P0 > 0))
        throw Error(ErrorKind::RestrictionViolated, "Dirichlet problem needs a positive volume factor on [0,T]");
    if (!dir && !(S.P[S.t.size() - 1] > 0))
        throw Error(ErrorKind::RestrictionViolated, "volume factor vanishes at T");

    BvpSolution sol;
    sol.kind = pb.kind;
    sol.xi = pb.xi > 0 ? pb.xi : pick_xi(S, dir);
    S.set_xi(sol.xi);
    sol.restriction_lhs = S.restriction(dir ? 2 : 1, dir);
    sol.restriction_rhs = S.phi(sol.xi);
    sol.restriction_checked = !S.l_singular;
    if (!S.l_singular) {
        if (!(sol.restriction_lhs < sol.restriction_rhs))
            throw Error(ErrorKind::RestrictionViolated,
                        "flux bound " + fmt(sol.restriction_lhs) + " >= phi(xi) = " + fmt(sol.restriction_rhs) +
                            "; shrink eta or T");
        double bound = dir ? S.restriction(1, true) + S.theta * S.f_eta * S.l_xi : S.restriction(1, false);
        sol.gradient_bound = S.phinv(bound);
    }

    std::size_t n = S.t.size();
    Iterate cur{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0};
    double sigma = 0;
    double base = 1.0 / opt.continuation_steps, step = base;
    double relax = opt.relax;
    bool use_mixing = opt.anderson > 0;
    bool stalled = false;
    while (sigma < 1) {
        double target = std::min(1.0, sigma + step);
        if (1 - target < 1e-12) target = 1;
        Iterate it = cur, best_image;
        Mixer mixer(use_mixing ? opt.anderson : 0, relax);
        bool ok = false;
        double best = kInf, change = kInf;
        int best_k = 0;
        try {
            for (int k = 0; k < opt.max_iter; ++k) {
                Iterate h = apply_H(S, it, target, opt.delta_tol);
                ++sol.iterations;
                change = 0;
                for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::fabs(h.w[i] - it.w[i]));
                if (!std::isfinite(change)) break;
                double scale = 1 + sup_norm(it.w);
                if (change <= opt.tol * scale) {
                    it = std::move(h);
                    ok = true;
                    break;
                }
                if (change > 1e6 * (1 + pb.eta)) break;
                if (change < 0.99 * best) {
                    best = change;
                    best_k = k;
                    best_image = h;
                } else if (k - best_k > opt.stall_window) {
                    // a free boundary with non-Lipschitz f leaves a small limit cycle
                    if (best <= opt.floor_tol * scale) {
                        it = std::move(best_image);
                        change = best;
                        ok = true;
                    }
                    break;
                }
                Eigen::VectorXd x(2 * n), hx(2 * n);
                for (std::size_t i = 0; i < n; ++i) {
                    x[i] = it.w[i];
                    x[n + i] = it.wp[i];
                    hx[i] = h.w[i];
                    hx[n + i] = h.wp[i];
                }
                if (change > 10 * best) mixer.reset();
                Eigen::VectorXd nx = mixer.next(x, hx);
                for (std::size_t i = 0; i < n; ++i) {
                    h.w[i] = nx[i];
                    h.wp[i] = nx[n + i];
                }
                it = std::move(h);
            }
        } catch (const Error&) {
            ok = false;
        }
        if (ok) {
            cur = std::move(it);
            sigma = target;
            sol.final_change = std::max(sol.final_change, change);
            sol.sigma_path.push_back(sigma);
            step = std::min(base, 2 * step);
            relax = std::min(opt.relax, 2 * relax);
            use_mixing = opt.anderson > 0;
        } else if (use_mixing) {
            // retry the same step without mixing before shortening it
            use_mixing = false;
        } else {
            // a stall usually means overshoot: shorten the sigma step and damp harder
            use_mixing = opt.anderson > 0;
            step /= 2;
            relax /= 2;
            if (step < base / std::pow(2.0, opt.max_bisections)) {
                stalled = true;
                break;
            }
        }
    }
    if (stalled && !dir && S.P0 > 0) {
        // a Dirichlet profile with w'(0) = 0 also solves the mixed problem; this catches dead cores,
        // where w(0) = 0 sits on the non-Lipschitz point of f and the mixed iteration cycles
        try {
            BvpProblem d = pb;
            d.kind = BoundaryKind::Dirichlet;
            d.xi = pb.xi;
            BvpSolution ds = solve(d, opt);
            if (ds.w.wp[0] == 0) {
                cur.w = ds.w.w;
                cur.wp = ds.w.wp;
                cur.flux = ds.flux;
                cur.delta = 0;
                sol.iterations += ds.iterations;
                sol.sigma_path.push_back(1);
                sol.method = "dead-core";
                stalled = false;
            }
        } catch (const Error&) {
        }
    }
    if (stalled) {
        if (!opt.allow_shooting || !shoot(S, cur, 1e-12))
            throw Error(ErrorKind::NoConvergence, "continuation stalled at sigma = " + fmt(sigma) + " after " +
                                                      std::to_string(sol.iterations) + " iterations");
        sol.method = "shooting";
        sol.sigma_path.push_back(1);
    }

    sol.delta = cur.delta;
    sol.w.r = S.t;
    sol.w.w = cur.w;
    sol.w.wp = cur.wp;
    sol.flux = cur.flux;
    // integrated residual, recomputed from the returned profile
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = S.source(int(i), cur.w[i], cur.wp[i]);
    auto C = cumulative_support(S.rule, S.t, g);
    sol.residual.resize(n);
    double scale = 1;
    for (std::size_t i = 0; i < n; ++i) {
        double fl = S.P[i] * S.phi(cur.wp[i]);
        scale = std::max(scale, std::fabs(fl));
        sol.residual[i] = fl - (dir ? S.P[0] * S.phi(cur.wp[0]) : 0.0) - C[i];
    }
    sol.residual_scale = scale;

    double wpmax = sup_norm(cur.wp);
    std::size_t k = 0;
    while (k + 1 < n && std::fabs(cur.wp[k + 1]) <= 1e-12 * std::max(wpmax, 1e-300)) ++k;
    sol.plateau = (std::fabs(cur.wp[0]) <= 1e-12 * std::max(wpmax, 1e-300)) ? S.t[k] : 0.0;

    double unit = pb.eta / pb.T;
    sol.origin.value = cur.wp[0] / unit;
    sol.origin.levels = {sol.origin.value};
    if (!dir || std::fabs(sol.origin.value) <= 1e-3 * opt.zero_threshold)
        sol.origin.cls = SlopeClass::Zero;
    else if (sol.origin.value >= opt.positive_threshold)
        sol.origin.cls = SlopeClass::Positive;
    return sol;
}

}  // namespace

BvpSolution solve_dirichlet(const BvpProblem& problem, const BvpOptions& opt) {
    BvpProblem p = problem;
    p.kind = BoundaryKind::Dirichlet;
    return solve(p, opt);
}

BvpSolution solve_mixed(const BvpProblem& problem, const BvpOptions& opt) {
    BvpProblem p = problem;
    p.kind = BoundaryKind::Mixed;
    return solve(p, opt);
}

BvpSolution solve_bvp(const BvpProblem& problem, const BvpOptions& opt) { return solve(problem, opt); }

OriginSlope classify_origin_slope(const BvpProblem& problem, int levels, const BvpOptions& opt) {
    if (levels < 2) throw Error(ErrorKind::OutOfRange, "need at least two refinement levels");
    OriginSlope out;
    BvpOptions o = opt;
    o.grid.clear();  // refinement needs the built-in grid
    for (int k = 0; k < levels; ++k) {
        auto s = solve_dirichlet(problem, o);
        out.levels.push_back(s.origin.value);
        o.N *= 2;
    }
    std::size_t n = out.levels.size();
    out.value = out.levels.back();
    double prev = std::fabs(out.levels[n - 2]);
    out.trend = prev > 0 ? std::fabs(out.value) / prev : 0;
    bool decreasing = true;
    for (std::size_t i = 1; i < n; ++i)
        if (!(std::fabs(out.levels[i]) <= 0.9 * std::fabs(out.levels[i - 1]))) decreasing = false;
    double lowest = kInf;
    for (double v : out.levels) lowest = std::min(lowest, v);
    if (std::fabs(out.value) < opt.zero_threshold && (decreasing || std::fabs(out.value) <= 1e-3 * opt.zero_threshold))
        out.cls = SlopeClass::Zero;
    else if (lowest >= opt.positive_threshold)
        out.cls = SlopeClass::Positive;
    return out;
}

namespace {

struct MarchOut {
    bool blowup = false, reached = false;
    double R = kInf, r = 0;
    std::string note;
};

MarchOut march_out(const BvpSolution& sol, const BvpProblem& pb, double r_max, double tol, RadialFunction* rec) {
    using State = std::array<double, 2>;
    const auto& tr = pb.triple;
    MarchOut m;
    auto wprime = [&](double z, double r) { return tr.phi.inverse(z / pb.volume(r)); };
    auto push = [&](double r, double w, double wp) {
        if (!rec) return;
        rec->r.push_back(r);
        rec->w.push_back(w);
        rec->wp.push_back(wp);
    };
    constexpr double kSwitch = 1e12;
    // phase 1: radius as the variable, state (w, z)
    auto rhs_r = [&](const State& x, State& dx, double r) {
        double wp = wprime(x[1], r);
        dx[0] = wp;
        double fv = tr.f(x[0]);
        dx[1] = fv == 0 ? 0.0 : pb.volume(r) * pb.a(r) * fv * tr.l(wp);
    };
    auto ctrl = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State>());
    State x{sol.w.w.back(), sol.flux.back()};
    double r = pb.T, h = 1e-3 * std::max(1.0, pb.T);
    push(r, x[0], sol.w.wp.back());
    try {
        while (r < r_max && x[0] < kSwitch) {
            double hh = std::min(h, r_max - r);
            State save = x;
            double rs = r;
            if (ctrl.try_step(rhs_r, x, r, hh) == odeint::success) {
                if (!std::isfinite(x[0]) || !std::isfinite(x[1])) {
                    x = save;
                    r = rs;
                    h = hh / 4;
                } else {
                    h = hh;
                    push(r, x[0], wprime(x[1], r));
                    continue;
                }
            } else {
                h = hh;
            }
            if (h < 1e-12) {
                m.blowup = true;
                m.R = m.r = r;
                m.note = "step collapse";
                return m;
            }
        }
    } catch (const Error& e) {
        // φ^{-1} left its range: the gradient blows up
        m.blowup = true;
        m.R = m.r = r;
        m.note = std::string("gradient blow-up: ") + e.what();
        return m;
    }
    m.r = r;
    if (r >= r_max) {
        m.reached = true;
        return m;
    }
    // phase 2: u = log w as the variable, state (r, z)
    auto rhs_u = [&](const State& y, State& dy, double u) {
        double w = std::exp(u);
        double wp = wprime(y[1], y[0]);
        double dr = w / wp;
        dy[0] = dr;
        dy[1] = pb.volume(y[0]) * pb.a(y[0]) * tr.f(w) * tr.l(wp) * dr;
    };
    auto ctrl_u = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State>());
    State y{r, x[1]};
    double u = std::log(x[0]), hu = 0.1;
    double r_prev = r;
    double lk = std::log(kSwitch);
    try {
        for (int k = 2; k * lk < 700; ++k) {
            double u_end = k * lk;
            while (u < u_end) {
                double hh = std::min(hu, u_end - u);
                bool last = hh == u_end - u;
                State save = y;
                double us = u;
                if (ctrl_u.try_step(rhs_u, y, u, hh) == odeint::success) {
                    if (!std::isfinite(y[0]) || !std::isfinite(y[1])) {
                        y = save;
                        u = us;
                        hu = hh / 4;
                        if (hu < 1e-12) throw Error(ErrorKind::OutOfRange, "overflow");
                        continue;
                    }
                    if (last) u = u_end;
                    hu = hh;
                    push(y[0], std::exp(u), wprime(y[1], y[0]));
                    if (y[0] >= r_max) {
                        m.reached = true;
                        m.r = y[0];
                        return m;
                    }
                } else {
                    hu = hh;
                }
            }
            m.r = y[0];
            if (y[0] - r_prev <= 0.01 * y[0]) {
                m.blowup = true;
                m.R = y[0];
                return m;
            }
            r_prev = y[0];
        }
        m.note = "growth too slow to decide before overflow";
    } catch (const Error& e) {
        m.r = y[0];
        if (y[0] - r_prev <= 0.01 * y[0]) {
            m.blowup = true;
            m.R = y[0];
        }
        m.note = std::string("march stopped: ") + e.what();
    }
    return m;
}

}  // namespace

Extension extend_maximal(const BvpSolution& solution, const BvpProblem& problem, double r_max, double tol) {
    if (!(r_max > problem.T)) throw Error(ErrorKind::OutOfRange, "r_max must exceed T");
    Extension ext;
    for (double r : num::lin_grid(problem.T, std::min(r_max, problem.T + 100), 200)) {
        double h = 1e-6 * std::max(1.0, r);
        if (problem.volume(r + h) < problem.volume(r) * (1 - 1e-12)) {
            ext.note = "volume factor decreases near r = " + fmt(r) + "; maximality statement does not apply. ";
            break;
        }
    }
    MarchOut coarse = march_out(solution, problem, r_max, tol, nullptr);
    MarchOut fine = march_out(solution, problem, r_max, tol / 100, &ext.w);
    ext.R_levels = {coarse.R, fine.R};
    ext.r_reached = fine.r;
    if (fine.blowup) {
        ext.R_max = fine.R;
        if (!coarse.blowup || std::fabs(coarse.R - fine.R) > 0.01 * fine.R)
            ext.note += "blow-up radius not stable across tolerance levels. ";
    } else if (fine.reached) {
        ext.infinite = true;
        if (!coarse.reached) ext.note += "coarse level disagrees. ";
    } else {
        ext.note += "undecided. ";
    }
    ext.note += fine.note;
    return ext;
}

}  // namespace qlab
