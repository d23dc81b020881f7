#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "mlmcopt/experiment.hpp"

namespace {

struct CommonArgs {
    std::string preset;
    std::string config_path;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int workers = 0;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--preset", args.preset,
                    "experiment preset (problem1/2/3, problem1-desk/2-desk/3-desk)");
    cmd->add_option("--config", args.config_path, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--set", args.overrides, "config override key=value (repeatable)");
    cmd->add_option("--seed", args.seed, "master seed")->each([&](const std::string&) {
        args.seed_given = true;
    });
    cmd->add_option("--workers", args.workers, "worker bound for the estimator");
    cmd->add_option("--out", args.out_dir, "output directory (default $MLMCOPT_OUT or ./out)");
}

mlmcopt::RunConfig resolve(const CommonArgs& args) {
    std::map<std::string, std::string> overrides;
    for (const std::string& kv : args.overrides) {
        auto pos = kv.find('=');
        if (pos == std::string::npos)
            throw CLI::ValidationError("--set expects key=value, got '" + kv + "'");
        overrides[kv.substr(0, pos)] = kv.substr(pos + 1);
    }
    mlmcopt::RunConfig config = mlmcopt::parse_config(args.preset, args.config_path, overrides);
    if (args.seed_given) config.seed = args.seed;
    if (args.workers > 0) config.workers = args.workers;
    if (!args.out_dir.empty()) {
        config.out_dir = args.out_dir;
    } else if (overrides.find("out_dir") == overrides.end()) {
        if (const char* env = std::getenv("MLMCOPT_OUT")) config.out_dir = env;
    }
    if (config.workers > 1)
        std::cerr << "note: this build executes estimator samples sequentially; --workers "
                  << config.workers << " only bounds future parallelism\n";
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multilevel Monte Carlo optimization of PDE-constrained control under uncertainty"};
    app.require_subcommand(1);

    CommonArgs opt_args, est_args, cal_args;
    double est_eps = 1e-2;
    long cal_samples = 8;
    std::string plots_dir;

    CLI::App* optimize = app.add_subcommand("optimize", "run the configured optimizer(s)");
    add_common(optimize, opt_args);

    CLI::App* estimate = app.add_subcommand("estimate", "one gradient estimate at a given RMSE");
    add_common(estimate, est_args);
    estimate->add_option("--eps", est_eps, "requested RMSE")->required();

    CLI::App* calibrate =
        app.add_subcommand("calibrate", "measure per-level sample costs and fit kappa");
    add_common(calibrate, cal_args);
    calibrate->add_option("--samples", cal_samples, "samples per level");

    CLI::App* plots = app.add_subcommand("plots", "derive plot CSVs from a finished run directory");
    plots->add_option("--out", plots_dir, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (optimize->parsed()) {
            mlmcopt::RunConfig config = resolve(opt_args);
            mlmcopt::ExperimentOutput out = mlmcopt::run_experiment(config);
            for (const auto& bundle : out.bundles) {
                std::cout << bundle.method << ": "
                          << (bundle.result.converged ? "converged" : "NOT converged")
                          << ", fresh gradient norm " << bundle.result.fresh_gradient_norm
                          << ", estimator calls " << bundle.result.estimator_calls
                          << ", solve DOFs " << bundle.solve_dofs << "\n";
            }
            std::cout << "outputs in " << out.out_dir << "\n";
        } else if (estimate->parsed()) {
            mlmcopt::RunConfig config = resolve(est_args);
            mlmcopt::EstimateReport rep = mlmcopt::run_estimate(config, est_eps);
            std::cout << "estimate at eps=" << rep.epsilon_requested << ": achieved RMSE "
                      << rep.achieved_rmse << (rep.converged ? "" : " (not converged)")
                      << ", levels " << rep.counts.size() << ", counts";
            for (long n : rep.counts) std::cout << " " << n;
            std::cout << "\noutputs in " << config.out_dir << "\n";
        } else if (calibrate->parsed()) {
            mlmcopt::RunConfig config = resolve(cal_args);
            double kappa = mlmcopt::run_calibrate(config, cal_samples);
            std::cout << "fitted kappa " << kappa << "; calibration.csv in " << config.out_dir
                      << "\n";
        } else if (plots->parsed()) {
            mlmcopt::emit_plots(plots_dir);
            std::cout << "plot CSVs written to " << plots_dir << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
