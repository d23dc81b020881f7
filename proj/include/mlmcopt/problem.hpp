#ifndef MLMCOPT_PROBLEM_HPP
#define MLMCOPT_PROBLEM_HPP

#include <cmath>
#include <string>

#include "mlmcopt/covariance.hpp"
#include "mlmcopt/grid.hpp"

namespace mlmcopt {

/// Pointwise reaction term f(y) with derivatives, identified by name so it
/// survives a config round trip. "none" disables the term (linear model).
struct Reaction {
    std::string name = "none";

    bool enabled() const { return name != "none"; }

    double f(double y) const {
        if (name == "exp") return 20.0 + std::exp(5.0 * y);
        if (name == "linear") return y;
        return 0.0;
    }
    double fp(double y) const {
        if (name == "exp") return 5.0 * std::exp(5.0 * y);
        if (name == "linear") return 1.0;
        return 0.0;
    }
    double fpp(double y) const {
        if (name == "exp") return 25.0 * std::exp(5.0 * y);
        return 0.0;
    }

    static Reaction parse(const std::string& name) {
        if (name != "none" && name != "exp" && name != "linear")
            throw std::invalid_argument("Reaction: unknown name '" + name + "'");
        Reaction r;
        r.name = name;
        return r;
    }
};

/// Everything that defines one control problem instance: cost weights,
/// target and control mask, reaction term, random field and grid hierarchy.
struct ProblemSpec {
    double alpha = 1e-6;  // control penalty
    double gamma = 1.0;   // variance penalty
    FieldSpec target = FieldSpec::box({0.25, 0.25}, {0.75, 0.75}, 1.0, 0.0);
    FieldSpec control_mask = FieldSpec::constant(1.0);
    Reaction reaction;
    CovarianceSpec covariance;
    GridHierarchy hierarchy;

    void validate() const {
        if (alpha <= 0.0) throw std::invalid_argument("ProblemSpec: alpha must be > 0");
        if (gamma < 0.0) throw std::invalid_argument("ProblemSpec: gamma must be >= 0");
        if (covariance.dim != hierarchy.dim)
            throw std::invalid_argument("ProblemSpec: covariance and hierarchy dimension differ");
        covariance.validate();
        hierarchy.validate();
    }
};

}  // namespace mlmcopt

#endif
