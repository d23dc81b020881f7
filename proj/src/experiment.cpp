#include "mlmcopt/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mlmcopt {

namespace fs = std::filesystem;

namespace {

struct RunPieces {
    KLBasis basis;
    std::unique_ptr<FieldSampler> sampler;
    CostMeter meter;
    EstimatorContext ctx;
};

std::unique_ptr<RunPieces> build_pieces(const RunConfig& config) {
    auto p = std::make_unique<RunPieces>();
    p->basis = build_basis(config.problem.covariance, config.kl_pool);
    p->sampler = std::make_unique<FieldSampler>(p->basis, config.problem.hierarchy);
    p->ctx.problem = &config.problem;
    p->ctx.sampler = p->sampler.get();
    p->ctx.solver.meter = &p->meter;
    return p;
}

std::ofstream open_csv(const fs::path& path, const RunConfig& config, const std::string& header) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("run_experiment: cannot open " + path.string());
    os << "# seed=" << config.seed << " preset=" << (config.preset.empty() ? "-" : config.preset)
       << "\n";
    os << header << "\n";
    os << std::setprecision(17);
    return os;
}

void write_trace(const fs::path& path, const RunConfig& config, const OptimizeResult& res) {
    int levels = config.problem.hierarchy.finest_level + 1;
    std::ostringstream header;
    header << "step,phase,norm,epsilon,refreshed";
    for (int l = 0; l < levels; ++l) header << ",n" << l;
    header << ",wall_s";
    std::ofstream os = open_csv(path, config, header.str());
    for (const auto& rec : res.trace) {
        os << rec.step << "," << rec.phase << "," << rec.norm << "," << rec.epsilon << ","
           << (rec.refreshed ? 1 : 0);
        for (int l = 0; l < levels; ++l)
            os << "," << (l < static_cast<int>(rec.counts.size()) ? rec.counts[l] : 0);
        os << "," << (config.timing ? rec.wall_seconds : 0.0) << "\n";
    }
}

void write_refresh_table(const fs::path& path, const RunConfig& config, const OptimizeResult& res) {
    int levels = config.problem.hierarchy.finest_level + 1;
    std::ostringstream header;
    header << "step,trigger,epsilon,achieved,rho";
    for (int l = 0; l < levels; ++l) header << ",n" << l;
    for (int l = 0; l < levels; ++l) header << ",var" << l;
    for (int l = 0; l < levels; ++l) header << ",corrected_var" << l;
    header << ",wall_s";
    std::ofstream os = open_csv(path, config, header.str());
    for (const auto& row : res.refreshes) {
        os << row.step << "," << row.trigger << "," << row.epsilon << "," << row.achieved << ","
           << row.rho;
        for (int l = 0; l < levels; ++l)
            os << "," << (l < static_cast<int>(row.counts.size()) ? row.counts[l] : 0);
        for (int l = 0; l < levels; ++l)
            os << "," << (l < static_cast<int>(row.variance_inf.size()) ? row.variance_inf[l] : 0.0);
        for (int l = 0; l < levels; ++l)
            os << ","
               << (l < static_cast<int>(row.corrected_variance_inf.size())
                       ? row.corrected_variance_inf[l]
                       : 0.0);
        os << "," << (config.timing ? row.wall_seconds : 0.0) << "\n";
    }
}

void write_contributions(const fs::path& path, const RunConfig& config, const ResultBundle& bundle) {
    const GridHierarchy& h = config.problem.hierarchy;
    std::ostringstream header;
    header << "index,x1,x2,total";
    for (std::size_t l = 0; l < bundle.level_contributions.size(); ++l) header << ",level" << l;
    std::ofstream os = open_csv(path, config, header.str());
    for (std::size_t i = 0; i < bundle.contributions_total.values.size(); ++i) {
        auto x = h.cell_center(h.finest_level, i);
        os << i << "," << x[0] << "," << (h.dim == 2 ? x[1] : 0.0) << ","
           << bundle.contributions_total.values[i];
        for (const auto& c : bundle.level_contributions) os << "," << c.values[i];
        os << "\n";
    }
}

ResultBundle analyze_run(const RunConfig& config, RunPieces& pieces, std::string method,
                         OptimizeResult res) {
    ResultBundle bundle;
    bundle.method = std::move(method);
    bundle.result = std::move(res);

    const GridHierarchy& h = config.problem.hierarchy;
    const GridFunction& u = bundle.result.control;

    // post-hoc fresh gradient at the floor tolerance, also the source of the
    // per-level contribution fields
    bundle.fresh_epsilon = config.optimizer.q * config.optimizer.tau;
    EstimateReport rep = run_estimator(pieces.ctx, u, bundle.fresh_epsilon,
                                       rng::hash2(config.seed, 0x9e3779b9ULL), config.estimator);
    bundle.fresh_gradient = rep.estimate;
    bundle.frozen = rep.frozen;
    bundle.contributions_total = GridFunction(h, h.finest_level, 0.0);
    for (const auto& st : rep.level_stats) {
        GridFunction c = transfer(st.mean, h.finest_level, h);
        add_scaled(bundle.contributions_total, 1.0, c);
        bundle.level_contributions.push_back(std::move(c));
    }

    // post-hoc state statistics at the final control
    GridFunction beta = discretize(config.problem.control_mask, h, h.finest_level);
    GridFunction mean(h, h.finest_level, 0.0), sq(h, h.finest_level, 0.0);
    std::uint64_t seed = rng::hash2(config.seed, 0x517cc1b7ULL);
    for (long j = 0; j < config.posthoc_samples; ++j) {
        GridFunction k = lognormal_field(
            pieces.sampler->gaussian({seed, static_cast<std::uint64_t>(j)}, h.finest_level));
        DiscreteOperator A(k, h);
        GridFunction y =
            solve_state_nonlinear(A, config.problem.reaction, u, beta, h, pieces.ctx.solver).y;
        for (std::size_t i = 0; i < y.values.size(); ++i) {
            mean.values[i] += y.values[i];
            sq.values[i] += y.values[i] * y.values[i];
        }
    }
    double n = static_cast<double>(config.posthoc_samples);
    bundle.state_mean = mean;
    scale(bundle.state_mean, 1.0 / n);
    bundle.state_variance = GridFunction(h, h.finest_level, 0.0);
    for (std::size_t i = 0; i < sq.values.size(); ++i) {
        double mu = bundle.state_mean.values[i];
        bundle.state_variance.values[i] = std::max(0.0, sq.values[i] / (n - 1.0) - n / (n - 1.0) * mu * mu);
    }
    bundle.solve_dofs = pieces.meter.solve_dofs;
    return bundle;
}

void write_bundle(const RunConfig& config, const ResultBundle& bundle) {
    fs::path dir(config.out_dir);
    const std::string& m = bundle.method;
    write_trace(dir / (m + "_trace.csv"), config, bundle.result);
    write_refresh_table(dir / (m + "_table.csv"), config, bundle.result);
    write_contributions(dir / (m + "_contributions.csv"), config, bundle);

    std::string tag = "seed=" + std::to_string(config.seed) + " method=" + m;
    save_grid_function((dir / (m + "_u_star.csv")).string(), bundle.result.control, tag + " control");
    save_grid_function((dir / (m + "_gradient.csv")).string(), bundle.fresh_gradient,
                       tag + " fresh gradient at eps=" + std::to_string(bundle.fresh_epsilon));
    save_grid_function((dir / (m + "_state_mean.csv")).string(), bundle.state_mean,
                       tag + " posthoc state mean");
    save_grid_function((dir / (m + "_state_variance.csv")).string(), bundle.state_variance,
                       tag + " posthoc state variance");

    std::ofstream frozen(dir / (m + "_frozen.txt"));
    bundle.frozen.write(frozen);

    std::ofstream meta(dir / (m + "_summary.txt"));
    meta << "method " << m << "\n";
    meta << "converged " << (bundle.result.converged ? 1 : 0) << "\n";
    meta << "negative_curvature " << (bundle.result.negative_curvature ? 1 : 0) << "\n";
    meta << std::setprecision(17);
    meta << "fresh_gradient_norm " << bundle.result.fresh_gradient_norm << "\n";
    meta << "posthoc_epsilon " << bundle.fresh_epsilon << "\n";
    meta << "estimator_calls " << bundle.result.estimator_calls << "\n";
    meta << "solve_dofs " << bundle.solve_dofs << "\n";
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path, std::string& header) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("emit_plots: cannot open " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header = line;
            header_seen = true;
            continue;
        }
        rows.push_back(split_csv(line));
    }
    return rows;
}

void plots_for_method(const fs::path& dir, const std::string& method) {
    // (a) convergence curves: step, phase, norm, epsilon
    std::string header;
    auto trace = read_csv(dir / (method + "_trace.csv"), header);
    {
        std::ofstream os(dir / (method + "_plot_convergence.csv"));
        os << "step,phase,norm,epsilon\n";
        for (const auto& row : trace) os << row[0] << "," << row[1] << "," << row[2] << "," << row[3] << "\n";
    }

    // (b) mid-domain cross section of the per-level contributions
    auto contrib = read_csv(dir / (method + "_contributions.csv"), header);
    auto cols = split_csv(header);
    {
        // pick the x2 row closest to 0.5 (or everything in 1D)
        double best = 1e300;
        for (const auto& row : contrib) best = std::min(best, std::abs(std::stod(row[2]) - 0.5));
        std::ofstream os(dir / (method + "_plot_cross_section.csv"));
        os << "x1,total";
        for (std::size_t c = 4; c < cols.size(); ++c) os << "," << cols[c];
        os << "\n";
        os << std::setprecision(17);
        for (const auto& row : contrib) {
            if (std::abs(std::stod(row[2]) - 0.5) > best + 1e-12) continue;
            os << row[1] << "," << row[3];
            for (std::size_t c = 4; c < row.size(); ++c) os << "," << row[c];
            os << "\n";
        }
    }

    // (c) per-level variance evolution over refreshes (long format)
    auto table = read_csv(dir / (method + "_table.csv"), header);
    auto tcols = split_csv(header);
    {
        std::ofstream os(dir / (method + "_plot_variance_evolution.csv"));
        os << "step,level,variance_inf,corrected_variance_inf\n";
        int levels = 0;
        for (const auto& c : tcols)
            if (c.rfind("var", 0) == 0) ++levels;
        int n_base = 5;  // step,trigger,epsilon,achieved,rho
        for (const auto& row : table) {
            if (row[1] != "init" && row[1] != "refresh") continue;
            for (int l = 0; l < levels; ++l) {
                std::string var = row[static_cast<std::size_t>(n_base + levels + l)];
                std::string cvar = row[static_cast<std::size_t>(n_base + 2 * levels + l)];
                if (std::stod(var) == 0.0 && std::stol(row[static_cast<std::size_t>(n_base + l)]) == 0)
                    continue;  // level not opened at this refresh
                os << row[0] << "," << l << "," << var << "," << cvar << "\n";
            }
        }
    }
}

}  // namespace

ExperimentOutput run_experiment(const RunConfig& config) {
    config.validate();
    ExperimentOutput out;
    out.config = config;
    out.out_dir = config.out_dir;
    fs::create_directories(config.out_dir);

    {
        std::ofstream os(fs::path(config.out_dir) / "config.json");
        os << config_to_json(config);
    }

    std::vector<std::string> methods;
    if (config.method == "both") {
        methods = {"ncg", "newton"};
    } else {
        methods = {config.method};
    }

    GridFunction u0(config.problem.hierarchy, config.problem.hierarchy.finest_level, 0.0);
    for (const std::string& m : methods) {
        auto pieces = build_pieces(config);
        OptimizeResult res = m == "ncg"
                                 ? ncg_optimize(pieces->ctx, u0, config.optimizer, config.estimator,
                                                config.seed)
                                 : newton_optimize(pieces->ctx, u0, config.optimizer,
                                                   config.estimator, config.seed);
        ResultBundle bundle = analyze_run(config, *pieces, m, std::move(res));
        write_bundle(config, bundle);
        out.bundles.push_back(std::move(bundle));
    }
    emit_plots(config.out_dir);
    return out;
}

void emit_plots(const std::string& out_dir) {
    fs::path dir(out_dir);
    for (const std::string& method : {std::string("ncg"), std::string("newton")}) {
        if (fs::exists(dir / (method + "_trace.csv"))) plots_for_method(dir, method);
    }
}

EstimateReport run_estimate(const RunConfig& config, double eps) {
    config.validate();
    fs::create_directories(config.out_dir);
    auto pieces = build_pieces(config);
    GridFunction u0(config.problem.hierarchy, config.problem.hierarchy.finest_level, 0.0);
    EstimateReport rep = run_estimator(pieces->ctx, u0, eps, config.seed, config.estimator);

    fs::path dir(config.out_dir);
    std::string tag = "seed=" + std::to_string(config.seed);
    save_grid_function((dir / "estimate_gradient.csv").string(), rep.estimate,
                       tag + " gradient estimate at eps=" + std::to_string(eps));
    std::ofstream frozen(dir / "estimate_frozen.txt");
    rep.frozen.write(frozen);
    std::ofstream meta(dir / "estimate_summary.txt");
    meta << std::setprecision(17);
    meta << "epsilon " << rep.epsilon_requested << "\n";
    meta << "achieved_rmse " << rep.achieved_rmse << "\n";
    meta << "stochastic_inf " << rep.stochastic_inf << "\n";
    meta << "bias_bound " << rep.bias_bound << "\n";
    meta << "rho " << rep.rho << "\n";
    meta << "converged " << (rep.converged ? 1 : 0) << "\n";
    meta << "counts";
    for (long n : rep.counts) meta << " " << n;
    meta << "\n";
    return rep;
}

double run_calibrate(const RunConfig& config, long samples_per_level) {
    config.validate();
    fs::create_directories(config.out_dir);
    auto pieces = build_pieces(config);
    const GridHierarchy& h = config.problem.hierarchy;
    GridFunction u0(h, h.finest_level, 0.0);

    std::ofstream os = open_csv(fs::path(config.out_dir) / "calibration.csv", config,
                                "level,m,samples,seconds_per_sample,dofs_per_sample");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int points = 0;
    for (int level = 0; level <= h.finest_level; ++level) {
        LevelKeys keys{rng::hash2(config.seed, 1000 + static_cast<std::uint64_t>(level)),
                       rng::hash2(config.seed, 2000 + static_cast<std::uint64_t>(level)),
                       samples_per_level};
        std::size_t dofs_before = pieces->meter.solve_dofs;
        auto t0 = std::chrono::steady_clock::now();
        CorrectionStream stream(pieces->ctx, level, u0, keys, config.estimator.variant);
        GridFunction sink(h, level, 0.0);
        for (long j = 0; j < keys.count; ++j) add_scaled(sink, 1.0, stream.next());
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() /
                      static_cast<double>(keys.count);
        double dofs = static_cast<double>(pieces->meter.solve_dofs - dofs_before) /
                      static_cast<double>(keys.count);
        os << level << "," << h.cells_per_axis(level) << "," << keys.count << "," << secs << ","
           << dofs << "\n";
        double x = std::log2(static_cast<double>(h.cells_per_axis(level)));
        double y = std::log2(std::max(secs, 1e-12));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++points;
    }
    double kappa = (points * sxy - sx * sy) / (points * sxx - sx * sx);
    std::ofstream meta(fs::path(config.out_dir) / "calibration_summary.txt");
    meta << "kappa " << kappa << "\n";
    return kappa;
}

}  // namespace mlmcopt
