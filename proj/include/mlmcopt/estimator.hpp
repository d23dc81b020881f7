#ifndef MLMCOPT_ESTIMATOR_HPP
#define MLMCOPT_ESTIMATOR_HPP

#include <iosfwd>

#include "mlmcopt/chains.hpp"
#include "mlmcopt/stats.hpp"

namespace mlmcopt {

struct EstimatorOptions {
    // Warm-up samples for a newly opened level l: offset + scale / 2^l
    // (35, 19, 11, 7, 5, 4, ...), front-loading the coarse levels where
    // samples are cheap and the variance estimates matter most. The shape
    // follows the experiment tables' opening counts at a quarter of their
    // size, which keeps the warm-up from dominating the sampling cost at
    // loose tolerances.
    long warmup_offset = 3;
    long warmup_scale = 32;
    double theta_split = 0.5;  // share of eps^2 given to the stochastic error
    double variance_floor = 0.5;
    double kappa = 2.26;  // cost-model exponent: C_l ~ m_l^kappa
    VarianceSampler variant = VarianceSampler::shifted_chain;
    // Replace the measured stochastic term in the stopping test by its budget
    // theta_split * eps^2 (the cheaper variant mentioned alongside the
    // conservative inf-norm test).
    bool budget_variance_test = false;

    long warmup(int level) const {
        long scaled = level < 62 ? (warmup_scale >> level) : 0;
        return std::max<long>(2, warmup_offset + scaled);
    }
};

/// Per-level ordered seed ranges and counts: everything needed to replay an
/// estimation deterministically at a new control.
struct FrozenSampleSet {
    double epsilon = 0.0;
    int level_count = 0;  // converged level L + 1
    std::vector<std::uint64_t> seeds;
    std::vector<std::uint64_t> pair_seeds;
    std::vector<long> counts;
    VarianceSampler variant = VarianceSampler::shifted_chain;
    int dim = 2;
    int m0 = 8;

    int top_level() const { return level_count - 1; }

    void write(std::ostream& os) const;
    static FrozenSampleSet read(std::istream& is);
};

struct EstimateReport {
    GridFunction estimate;  // at the return level, includes the 2 alpha u term
    double epsilon_requested = 0.0;
    double achieved_rmse = 0.0;
    double stochastic_inf = 0.0;  // || sum n_l^-1 I Var[Y_l] ||_inf (corrected)
    double bias_bound = 0.0;
    double rho = 0.0;
    bool converged = false;
    std::vector<long> counts;
    std::vector<LevelStats> level_stats;
    FrozenSampleSet frozen;
};

/// Multilevel Monte Carlo estimation of the reduced gradient at the control u
/// (given on the return level): opens levels one at a time, warms each up
/// with n_init samples, allocates per-level counts from the corrected
/// pointwise variances, and stops once the inf-norm stochastic term plus the
/// squared bias bound drops below eps^2 or the finest level is reached (in
/// which case the report is flagged non-converged). Seeds derive from
/// seed_root; the whole run is reproducible from it.
EstimateReport run_estimator(const EstimatorContext& ctx, const GridFunction& u, double eps,
                             std::uint64_t seed_root, const EstimatorOptions& opts = {});

/// Recompute the estimator with exactly the frozen seeds and counts at a new
/// control: no reallocation, no level changes. Returns the gradient and the
/// expected RMSE implied by the replayed variances at the fixed counts.
std::pair<GridFunction, double> replay_gradient(const EstimatorContext& ctx,
                                                const FrozenSampleSet& frozen, const GridFunction& u,
                                                const EstimatorOptions& opts = {});

/// The sampled cost whose exact gradient is the frozen-set gradient: the
/// telescoped per-level costs using the empirical tracking mean and the
/// shifted-chain variance estimator on the frozen chains, plus alpha ||u||^2.
double evaluate_cost(const EstimatorContext& ctx, const FrozenSampleSet& frozen,
                     const GridFunction& u);

/// Frozen-set Hessian-vector product at (u, du): the same telescoping with
/// linearized solves, gamma chain form on the dy samples, plus 2 alpha du.
/// For reaction problems the per-sample (y, p) support is recomputed at the
/// frozen seeds or served from the cache.
GridFunction replay_hessian_vector(const EstimatorContext& ctx, const FrozenSampleSet& frozen,
                                   const GridFunction& u, const GridFunction& du,
                                   RealizationCache* cache = nullptr);

}  // namespace mlmcopt

#endif
