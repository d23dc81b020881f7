#ifndef MLMCOPT_EXPERIMENT_HPP
#define MLMCOPT_EXPERIMENT_HPP

#include "mlmcopt/config.hpp"
#include "mlmcopt/grid_io.hpp"

namespace mlmcopt {

/// Everything one optimizer run produced, ready for files or inspection.
struct ResultBundle {
    std::string method;
    OptimizeResult result;
    GridFunction fresh_gradient;  // post-hoc estimate at the stated epsilon
    double fresh_epsilon = 0.0;
    GridFunction state_mean;  // post-hoc state statistics at the final control
    GridFunction state_variance;
    std::vector<GridFunction> level_contributions;  // I_l^Lbar mean(Y_l) at u*
    GridFunction contributions_total;               // their pointwise sum
    FrozenSampleSet frozen;      // sample set of the post-hoc estimate
    std::size_t solve_dofs = 0;  // DOF-units of linear-solve work for this run
};

struct ExperimentOutput {
    RunConfig config;
    std::vector<ResultBundle> bundles;
    std::string out_dir;
};

/// Runs the configured optimizer(s), writes the per-run files (trace,
/// refresh table, final fields, frozen set, per-level contributions) and the
/// resolved config under config.out_dir, and derives the plot-ready CSVs.
/// Non-convergence is flagged in the outputs; partial results are still
/// written.
ExperimentOutput run_experiment(const RunConfig& config);

/// Derives plot-ready CSVs from the raw files of a finished run directory:
/// convergence curves (norm and epsilon per iteration), mid-domain cross
/// sections of the per-level gradient contributions, and the per-level
/// variance evolution over refreshes.
void emit_plots(const std::string& out_dir);

/// One gradient estimate at the given tolerance; writes the gradient field,
/// the frozen sample set, and a small report. Returns the report.
EstimateReport run_estimate(const RunConfig& config, double eps);

/// Measures seconds per correction sample on each level and fits the cost
/// exponent kappa (cost ~ m^kappa); writes calibration.csv.
double run_calibrate(const RunConfig& config, long samples_per_level);

}  // namespace mlmcopt

#endif
