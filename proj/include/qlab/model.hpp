#pragma once

#include <memory>
#include <string>
#include <vector>

#include "qlab/common.hpp"

namespace qlab {

enum class JacobiDirection { Lower, Upper };  // g'' - G g <= 0 / >= 0

struct JacobiData {
    Fn G;
    double g0 = 0, gp0 = 1;
    JacobiDirection direction = JacobiDirection::Upper;
};

struct JacobiResult {
    RadialFunction g;  // r, g, g', g'' = G g
    double R = 0;      // first zero of g, or r_max
    bool reached_end = true;
};

// Solves g'' = G g with adaptive dopri5 (abs/rel tol). Output is sampled every `sample_step`
// (0: at the accepted steps) plus r_max.
JacobiResult jacobi_solve(const JacobiData& data, double r_max, double tol = 1e-10, double sample_step = 0);

class ModelManifold {
public:
    enum class Kind { Euclidean, Hyperbolic, ExamplePinch, JacobiPower, FromJacobi, Custom };

    static ModelManifold euclidean(int m);
    static ModelManifold hyperbolic(int m, double kappa);
    // g = t near 0, exp(-t^delta) for t >= 1, C^2 quintic on [1/4, 1]
    static ModelManifold example_pinch(int m, double delta);
    // g'' = kappa^2 (1+r^2)^{alpha/2} g, g(0) = 0, g'(0) = 1
    static ModelManifold jacobi_power(int m, double kappa, double alpha);
    static ModelManifold from_jacobi(int m, const JacobiData& data, double r_max);
    // g'' is differenced from gp
    static ModelManifold custom(int m, Fn g, Fn gp, bool point_pole);

    int dim() const;
    Kind kind() const;
    bool point_pole() const;
    std::string name() const;
    // kappa, alpha, delta as set by the factory (NaN when unused)
    double kappa() const;
    double alpha() const;
    double delta() const;
    // largest r where the model is defined
    double r_max() const;

    double g(double r) const;
    double gp(double r) const;
    double gpp(double r) const;
    double log_g(double r) const;
    double dlog_g(double r) const;  // g'/g
    double gpp_over_g(double r) const;

    double log_v(double r) const;
    double v(double r) const;  // vol(S^{m-1}) g^{m-1}
    double log_V(double r) const;
    double V(double r) const;  // integral of v over [0, r]
    double laplacian(double r) const;  // (m-1) g'/g
    double radial_curvature(double r) const;  // -g''/g

    struct Impl;

private:
    explicit ModelManifold(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

struct RadialGeometry {
    double v, V, laplacian, curvature;
};
RadialGeometry radial_geometry(const ModelManifold& M, double r);

struct GrowthRegime {
    enum class Kind { PowerOfR, LogOfR } kind = Kind::LogOfR;
    double gamma = 1;  // exponent of r for PowerOfR
};

struct GrowthEstimate {
    double value = 0;
    Verdict status = Verdict::Inconclusive;  // Holds when the accelerated sequence stabilised
    std::vector<double> slopes;              // dyadic difference quotients
};

// lim log V(r) / h(r), h = r^gamma or log r, from dyadic r up to r_end.
GrowthEstimate volume_growth_exponent(const ModelManifold& M, GrowthRegime regime, double r_end = 1e3);

// Minimal positive p-Green kernel of the model: int_r^inf v^{-1/(p-1)}.
double green_kernel_model(const ModelManifold& M, double p, double r);
double critical_curve(const ModelManifold& M, double p, double t);
// Inverse of the model Green kernel.
double fake_distance_model(const ModelManifold& M, double p, double green_value);
// ((p-1)/p) chi_g^{-1/p} |d log G_p/dr|; equals 1 on models.
double fake_distance_gradient(const ModelManifold& M, double p, double r);
// v^{-1} (v |psi'|^{p-2} psi')' at rho = r with |grad rho| = 1
double radial_p_laplacian_via_rho(const ModelManifold& M, double p, const AnalyticProfile& psi, double r);

struct ComparisonResult {
    double C = 0, D = 0;
    double theta_lo = 0, theta_hi = 0;  // inf and sup of G'/(2 G^{3/2})
    RadialFunction g;
    double min_residual = 0, max_residual = 0;  // g'' - G g on the grid
    bool sign_ok = false;
};

// g = 1 + C (exp(D int_0^t sqrt G) - 1) with the constants chosen for the requested direction;
// Upper: g'' - G g >= 0, g'(0) >= lambda; Lower: <= 0, g'(0) <= lambda.
ComparisonResult closed_form_comparison(const Fn& G, const Fn& Gp, double lambda, JacobiDirection dir,
                                        double t_max = 10, int n = 2001);
ComparisonResult closed_form_comparison_power(double kappa, double alpha, double lambda, JacobiDirection dir,
                                              double t_max = 10, int n = 2001);

// boundary curvature slope needed by the CSP comparison: kappa if alpha >= 0 or kappa = 0,
// else (alpha + sqrt(alpha^2 + 16 kappa^2)) / 4
double csp_initial_slope(double alpha, double kappa);

// (1 + sqrt(1 + 4 kappa^2)) / 2
double kappa_bar(double kappa);

}  // namespace qlab
