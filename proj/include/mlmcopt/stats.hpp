#ifndef MLMCOPT_STATS_HPP
#define MLMCOPT_STATS_HPP

#include <optional>
#include <span>
#include <vector>

#include "mlmcopt/grid.hpp"

namespace mlmcopt {

/// Shifted-difference variance estimator over one ordered sample set with
/// circular wrap: V1 = (1/2n) sum_j (y_j - y_{j-1})^2, y_0 = y_n. Unbiased,
/// with Var[V1] = 3 sigma^4 / n for Gaussian samples.
double v_hat1(std::span<const double> samples);

/// Two-set variance estimator V = (1/2n) sum_j (y_j - y'_j)^2 over paired
/// independent sets. Unbiased with Var[V] = 2 sigma^4 / n.
double v_hat_twoset(std::span<const double> samples, std::span<const double> paired);

/// Per-sample gradient of ||sqrt(V1)||^2 in the (.,.)_{D,Omega0} sense:
/// entry j is 2 y_j - y_{j+1} - y_{j-1} with circular indices.
std::vector<double> v_hat1_gradient_chain(std::span<const double> samples);

/// Tracking-type cost of an ensemble of states under the empirical measure,
/// in the robust form E||y - y_D||^2 + gamma ||std y||^2 + alpha ||u||^2 with
/// the (biased) sample variance. Equals the average form with gamma' = 1+gamma.
double robust_cost(const std::vector<GridFunction>& states, const GridFunction& target,
                   const GridFunction& control, double alpha, double gamma);

/// Average-control form ||mean(y) - y_D||^2 + gamma' ||std y||^2 + alpha ||u||^2.
double average_cost(const std::vector<GridFunction>& states, const GridFunction& target,
                    const GridFunction& control, double alpha, double gamma_prime);

/// Per-level summary of one correction-sample population: pointwise variance
/// and the b=2 circular lag covariances, the mean field, and cost figures.
struct LevelStats {
    int level = 0;
    long count = 0;
    GridFunction mean;      // E[Y_l] at level l
    GridFunction variance;  // unbiased pointwise variance
    GridFunction cov_lag1;  // circular lag-1 covariance
    GridFunction cov_lag2;  // circular lag-2 covariance
    double mean_inf_norm = 0.0;
    double cost_model = 1.0;        // deterministic per-sample cost (DOF model)
    double measured_seconds = 0.0;  // diagnostic only; never drives allocation
};

/// Streaming accumulator for the circular chain statistics. Samples must be
/// pushed in chain order; the wrap terms are closed in finalize().
class LevelAccumulator {
public:
    void push(const GridFunction& y);
    /// Requires at least 2 samples (lag products need a closed circle).
    LevelStats finalize(int level) const;
    long count() const { return count_; }

private:
    long count_ = 0;
    GridFunction sum_, sum_sq_, sum_lag1_, sum_lag2_;
    GridFunction first_, second_, prev_, prev2_;
};

/// max(floor * Var, Var + 2 cov1 + 2 cov2), pointwise. Guards against
/// underestimating the estimator variance when the measured covariances are
/// strongly negative. Requires count >= 2.
GridFunction corrected_variance(const LevelStats& stats, double floor = 0.5);

/// Optimal per-level sample counts: the Lagrange formula evaluated per domain
/// point on the return level with the corrected variances, a stochastic
/// budget of theta_split * eps^2, then the max over points, never below the
/// counts already taken.
std::vector<long> allocate_samples(const std::vector<GridFunction>& corrected_var_at_return,
                                   const std::vector<double>& cost_per_sample,
                                   const std::vector<long>& already_taken, double eps,
                                   double theta_split);

struct RhoBias {
    double rho = 0.0;
    double bias_bound = 0.0;
    bool no_decay = false;
};

/// Least-squares slope of log2||E[Y_l]||_inf against l over l = 1..L gives
/// -rho; the bias bound at L is (2^rho - 1)^{-1} ||E[Y_L]||_inf. A single
/// correction level cannot support a fit and falls back to rho = 1. A
/// non-positive fitted rho sets no_decay, which forces another level.
RhoBias estimate_rho_bias(const std::vector<double>& mean_inf_norms_from_level1);

}  // namespace mlmcopt

#endif
