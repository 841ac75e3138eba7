#pragma once

#include <string>
#include <vector>

#include "qlab/common.hpp"
#include "qlab/model.hpp"
#include "qlab/nonlinearity.hpp"

namespace qlab {

enum class BoundaryKind { Dirichlet, Mixed };  // w(0) = 0 / w'(0) = 0, both with w(T) = eta

const char* to_string(BoundaryKind k);

// [℘ φ(w')]' = ℘ a f(w) l(|w'|) on [0, T]
struct BvpProblem {
    Triple triple;
    Fn a = [](double) { return 1.0; };
    Fn volume = [](double) { return 1.0; };  // ℘
    double T = 1;
    BoundaryKind kind = BoundaryKind::Dirichlet;
    double eta = 1;
    double xi = 0;  // gradient ceiling; 0 picks the smallest power of two passing the restriction

    // ℘ = v of a model, shifted by r0 (r0 = 0 keeps the pole)
    static Fn volume_of(const ModelManifold& M, double r0 = 0);
};

struct BvpOptions {
    int N = 512;
    std::vector<double> grid;  // custom nodes from 0 to T; overrides the quadratic grid of N intervals
    double relax = 0.5;
    int anderson = 5;  // mixing depth on top of the damped step; 0 gives plain damped Picard
    double tol = 1e-10;
    double floor_tol = 1e-8;  // accepted when the iteration stalls in a limit cycle below this
    int max_iter = 2000;
    int continuation_steps = 10;
    int max_bisections = 4;
    int stall_window = 40;  // iterations without a 1% gain in the change count as a stall
    double delta_tol = 0;  // 0: to machine precision
    bool allow_shooting = true;
    // origin-slope thresholds, in units of the mean slope eta/T
    double zero_threshold = 1e-3;      // w'(0) below this at the finest level
    double positive_threshold = 1e-2;  // w'(0) above this at every level
};

enum class SlopeClass { Zero, Positive, Undetermined };

const char* to_string(SlopeClass c);

struct OriginSlope {
    SlopeClass cls = SlopeClass::Undetermined;
    double value = 0;               // w'(0) / (eta/T) at the finest level
    std::vector<double> levels;     // w'(0) / (eta/T) at N, 2N, 4N, ...
    double trend = 0;               // last ratio of successive values
};

struct BvpSolution {
    BoundaryKind kind = BoundaryKind::Dirichlet;
    RadialFunction w;             // t, w, w' from the flux formula
    std::vector<double> flux;     // ℘ φ(w')
    std::vector<double> residual; // integrated equation, node by node
    double residual_scale = 1;
    double delta = 0;             // ℘φ(w')(0) for Dirichlet
    double xi = 0;
    double restriction_lhs = 0, restriction_rhs = 0;
    double gradient_bound = kInf;  // φ^{-1} of the a priori flux bound
    bool restriction_checked = true;
    double plateau = 0;           // t0
    OriginSlope origin;           // single-level class
    int iterations = 0;
    double final_change = 0;  // largest accepted sup-norm change over the continuation
    std::vector<double> sigma_path;
    std::string method = "picard";
};

BvpSolution solve_dirichlet(const BvpProblem& problem, const BvpOptions& opt = {});
BvpSolution solve_mixed(const BvpProblem& problem, const BvpOptions& opt = {});
BvpSolution solve_bvp(const BvpProblem& problem, const BvpOptions& opt = {});

struct Extension {
    bool infinite = false;
    double R_max = kInf;       // blow-up radius when finite
    double r_reached = 0;      // last radius of the march
    RadialFunction w;          // from T onwards
    std::vector<double> R_levels;  // blow-up estimates per tolerance level
    std::string note;
};

// Marches (w, ℘φ(w')) forward from T up to r_max with the original f and l.
Extension extend_maximal(const BvpSolution& solution, const BvpProblem& problem, double r_max,
                         double tol = 1e-9);

OriginSlope classify_origin_slope(const BvpProblem& problem, int levels = 3, const BvpOptions& opt = {});

}  // namespace qlab
