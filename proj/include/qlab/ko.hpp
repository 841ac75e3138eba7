#pragma once

#include <string>
#include <vector>

#include "qlab/nonlinearity.hpp"

namespace qlab {

enum class Endpoint { Zero, Infinity };
enum class KoRoute { Auto, ClosedForm, Numeric };

const char* to_string(Endpoint e);

struct KoVerdict {
    Endpoint endpoint = Endpoint::Zero;
    KernelKind kind = KernelKind::Standard;
    Verdict outcome = Verdict::Inconclusive;
    double gamma = 0;                  // integrand ~ s^{-gamma}
    double fit_residual = 0;
    std::vector<double> decade_sums;   // ordered toward the endpoint
    double window_lo = 0, window_hi = 0;
    bool closed_form = false;
    std::string note;

    std::string to_line() const;
};

// Integrability of 1/K^{-1}(F) at 0+ or at infinity.
KoVerdict ko_verdict(const Triple& tr, Endpoint e, KernelKind kind = KernelKind::Standard,
                     KoRoute route = KoRoute::Auto);

struct ExponentFit {
    double slope = 0;
    double log_coeff = 0;  // coefficient of log|log s|
    double residual = 0;   // rms in log g
};

// Least squares of log g on {1, log s, log|log s|} over [lo, hi] (10 points per decade).
ExponentFit exponent_estimate(const Fn& g, double lo, double hi);
// Default windows: [1e-12, 1e-2] at Zero, [1e2, 1e12] at Infinity.
ExponentFit exponent_estimate(const Fn& g, Endpoint e);

}  // namespace qlab
