#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace qlab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Verdict { Holds, Fails, Inconclusive };

const char* to_string(Verdict v);

enum class ErrorKind {
    OutOfRange,
    NotIntegrableAtZero,
    UnknownCondition,
    KernelUndefined,
    NonPositiveSample,
    Parabolic,
    NoAdmissibleD,
    RestrictionViolated,
    NoConvergence,
    KellerOssermanViolated,
    ConditionFailed,
    SearchExhausted,
    WeightIncompatible,
    Unsupported,
    Config,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Values of a profile on a radial grid. wpp is optional (empty when unknown).
struct RadialFunction {
    std::vector<double> r;
    std::vector<double> w;
    std::vector<double> wp;
    std::vector<double> wpp;

    std::size_t size() const { return r.size(); }
    // cubic Hermite interpolation of w using wp
    double value_at(double x) const;
    double slope_at(double x) const;
};

using Fn = std::function<double(double)>;

// A radial profile given by closed-form value and first two derivatives.
struct AnalyticProfile {
    Fn u, up, upp;
};

}  // namespace qlab
