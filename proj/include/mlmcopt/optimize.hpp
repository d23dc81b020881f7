#ifndef MLMCOPT_OPTIMIZE_HPP
#define MLMCOPT_OPTIMIZE_HPP

#include <functional>
#include <optional>
#include <string>

#include "mlmcopt/estimator.hpp"

namespace mlmcopt {

struct OptimizerConfig {
    double tau = 1e-4;   // gradient-norm tolerance
    double q = 1.0;      // relative-RMSE factor
    double eta = 0.2;    // epsilon reduction factor
    double eps0 = 1e-2;  // initial RMSE
    int k_max = 500;
    double s_init = 1.0;  // initial linesearch step
    std::size_t hessian_cache_bytes = 256ULL << 20;
    bool refresh = true;          // false pins the initial sample set forever
    bool record_iterates = false;

    void validate() const {
        if (!(tau > 0.0)) throw std::invalid_argument("OptimizerConfig: tau must be > 0");
        if (!(q > 0.0)) throw std::invalid_argument("OptimizerConfig: q must be > 0");
        if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("OptimizerConfig: eta must be in (0,1)");
        if (!(eps0 > 0.0)) throw std::invalid_argument("OptimizerConfig: eps0 must be > 0");
        if (k_max < 1) throw std::invalid_argument("OptimizerConfig: k_max must be >= 1");
    }
};

/// One row of the optimization trace: an outer NCG/Newton iterate, an inner
/// CG iterate, or a fresh-sample convergence check.
struct IterationRecord {
    long step = 0;
    std::string phase;  // "ncg" | "newton" | "cg" | "check"
    double norm = 0.0;  // ||g|| or ||r||
    double epsilon = 0.0;
    bool refreshed = false;
    std::vector<long> counts;
    double wall_seconds = 0.0;
};

/// One fresh estimator call: what the per-refresh sample tables report.
struct RefreshInfo {
    long step = 0;
    std::string trigger;  // "init" | "refresh" | "check" | "final"
    double epsilon = 0.0;
    double achieved = 0.0;
    double rho = 0.0;
    std::vector<long> counts;
    std::vector<double> variance_inf;            // ||Var[Y_l]||_inf per level
    std::vector<double> corrected_variance_inf;  // with the b=2 correction
    double wall_seconds = 0.0;
};

struct OptimizeResult {
    GridFunction control;
    bool converged = false;
    bool negative_curvature = false;
    double fresh_gradient_norm = 0.0;  // from the accepting (or final) check
    std::vector<IterationRecord> trace;
    std::vector<RefreshInfo> refreshes;
    std::vector<GridFunction> iterates;  // filled when record_iterates is set
    long estimator_calls = 0;
};

/// beta = ||g_new||^2 / (d_old, g_new - g_old); empty on a vanishing
/// denominator, which signals a steepest-descent restart.
std::optional<double> dy_beta(const GridFunction& g_new, const GridFunction& g_old,
                              const GridFunction& d_old);

/// Secant step on the directional derivative: phi'(0) and phi'(s_prev) define
/// an interpolating parabola whose minimizer is returned; exact for quadratic
/// costs. Nonpositive curvature falls back to s_prev; a non-descent direction
/// is a hard error naming the iteration.
double parabola_linesearch(double dphi0, double dphi_s, double s_prev, long iteration);

struct CgResult {
    GridFunction solution;
    std::vector<double> residual_norms;  // ||r_i|| after each iteration, r_0 first
    bool negative_curvature = false;
    int iterations = 0;
};

/// Conjugate gradients in the return-level inner product, stopping at
/// ||r|| <= tol. Detecting nonpositive curvature aborts with the flag set
/// (cannot happen for the linear model with alpha > 0).
CgResult cg_solve(const std::function<GridFunction(const GridFunction&)>& apply_hessian,
                  const GridFunction& rhs, double tol, int max_iterations = 100000);

/// Gradient-based optimization: NCG with Dai-Yuan updates and the parabola
/// linesearch on frozen samples, dynamic epsilon refresh, and a fresh-sample
/// double check before accepting convergence.
OptimizeResult ncg_optimize(const EstimatorContext& ctx, const GridFunction& u0,
                            const OptimizerConfig& cfg, const EstimatorOptions& est,
                            std::uint64_t master_seed);

/// Hessian-based optimization: per outer step a fresh-sample gradient at the
/// current epsilon, a matrix-free CG solve on the frozen Hessian to residual
/// tolerance epsilon/q, then a geometric epsilon decrease floored at q*tau.
OptimizeResult newton_optimize(const EstimatorContext& ctx, const GridFunction& u0,
                               const OptimizerConfig& cfg, const EstimatorOptions& est,
                               std::uint64_t master_seed);

}  // namespace mlmcopt

#endif
