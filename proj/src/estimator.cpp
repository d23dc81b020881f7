#include "mlmcopt/estimator.hpp"

#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace mlmcopt {

namespace {

std::uint64_t level_seed(std::uint64_t root, int level) {
    return rng::hash2(root, 2 * static_cast<std::uint64_t>(level));
}
std::uint64_t level_pair_seed(std::uint64_t root, int level) {
    return rng::hash2(root, 2 * static_cast<std::uint64_t>(level) + 1);
}

double model_cost(const GridHierarchy& h, int level, double kappa) {
    double c = std::pow(static_cast<double>(h.cells_per_axis(level)), kappa);
    if (level > 0) c += std::pow(static_cast<double>(h.cells_per_axis(level - 1)), kappa);
    return c;
}

LevelStats level_pass(const EstimatorContext& ctx, int level, const GridFunction& u,
                      const LevelKeys& keys, VarianceSampler variant, double kappa) {
    auto t0 = std::chrono::steady_clock::now();
    CorrectionStream stream(ctx, level, u, keys, variant);
    LevelAccumulator acc;
    for (long j = 0; j < keys.count; ++j) acc.push(stream.next());
    LevelStats st = acc.finalize(level);
    st.cost_model = model_cost(ctx.hierarchy(), level, kappa);
    st.measured_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() /
        static_cast<double>(keys.count);
    return st;
}

struct ErrorTerms {
    double stochastic_inf = 0.0;
    double bias_bound = 0.0;
    double rho = 0.0;
    bool no_decay = false;
};

ErrorTerms error_terms(const EstimatorContext& ctx, const std::vector<LevelStats>& stats,
                       const std::vector<long>& counts, const EstimatorOptions& opts) {
    const GridHierarchy& h = ctx.hierarchy();
    ErrorTerms out;
    GridFunction total(h, h.finest_level, 0.0);
    for (std::size_t l = 0; l < stats.size(); ++l) {
        GridFunction v = corrected_variance(stats[l], opts.variance_floor);
        add_scaled(total, 1.0 / static_cast<double>(counts[l]),
                   transfer(v, h.finest_level, h));
    }
    out.stochastic_inf = inf_norm(total);
    if (stats.size() >= 2) {
        std::vector<double> means;
        for (std::size_t l = 1; l < stats.size(); ++l) means.push_back(stats[l].mean_inf_norm);
        RhoBias rb = estimate_rho_bias(means);
        out.bias_bound = rb.bias_bound;
        out.rho = rb.rho;
        out.no_decay = rb.no_decay;
    }
    return out;
}

GridFunction assemble_estimate(const EstimatorContext& ctx, const std::vector<LevelStats>& stats,
                               const GridFunction& u) {
    const GridHierarchy& h = ctx.hierarchy();
    GridFunction g(h, h.finest_level, 0.0);
    for (const auto& st : stats) add_scaled(g, 1.0, transfer(st.mean, h.finest_level, h));
    add_scaled(g, 2.0 * ctx.problem->alpha, u);
    return g;
}

}  // namespace

void FrozenSampleSet::write(std::ostream& os) const {
    os << "frozen-sample-set v1\n";
    os << "epsilon " << epsilon << "\n";
    os << "levels " << level_count << "\n";
    os << "variant " << (variant == VarianceSampler::shifted_chain ? "shifted_chain" : "twoset")
       << "\n";
    os << "dim " << dim << " m0 " << m0 << "\n";
    for (int l = 0; l < level_count; ++l)
        os << l << " " << seeds[static_cast<std::size_t>(l)] << " "
           << pair_seeds[static_cast<std::size_t>(l)] << " " << counts[static_cast<std::size_t>(l)]
           << "\n";
}

FrozenSampleSet FrozenSampleSet::read(std::istream& is) {
    FrozenSampleSet f;
    std::string header, word;
    std::getline(is, header);
    if (header != "frozen-sample-set v1")
        throw std::runtime_error("FrozenSampleSet: unrecognized header '" + header + "'");
    is >> word >> f.epsilon;
    is >> word >> f.level_count;
    std::string variant_name;
    is >> word >> variant_name;
    f.variant =
        variant_name == "twoset" ? VarianceSampler::twoset : VarianceSampler::shifted_chain;
    is >> word >> f.dim >> word >> f.m0;
    for (int l = 0; l < f.level_count; ++l) {
        int lvl;
        std::uint64_t s, ps;
        long n;
        is >> lvl >> s >> ps >> n;
        if (!is || lvl != l) throw std::runtime_error("FrozenSampleSet: malformed level table");
        f.seeds.push_back(s);
        f.pair_seeds.push_back(ps);
        f.counts.push_back(n);
    }
    return f;
}

EstimateReport run_estimator(const EstimatorContext& ctx, const GridFunction& u, double eps,
                             std::uint64_t seed_root, const EstimatorOptions& opts) {
    if (!(eps > 0.0)) throw std::invalid_argument("run_estimator: eps must be > 0");
    const GridHierarchy& h = ctx.hierarchy();
    if (u.level != h.finest_level)
        throw std::invalid_argument("run_estimator: control must live on the return level");

    std::vector<LevelStats> stats;
    std::vector<long> counts;
    std::vector<double> costs;
    ErrorTerms err;
    bool converged = false;
    int top = 0;

    auto keys_for = [&](int level, long n) {
        return LevelKeys{level_seed(seed_root, level), level_pair_seed(seed_root, level), n};
    };

    for (top = 0; top <= h.finest_level; ++top) {
        stats.push_back(
            level_pass(ctx, top, u, keys_for(top, opts.warmup(top)), opts.variant, opts.kappa));
        counts.push_back(opts.warmup(top));
        costs.push_back(stats.back().cost_model);

        // Optimal counts from the corrected pointwise variances. Top-ups grow
        // at most geometrically per stage and the variances are re-estimated
        // in between, so a noisy warm-up spike cannot ratchet the counts far
        // beyond what the settled variance supports.
        for (int stage = 0; stage < 64; ++stage) {
            std::vector<GridFunction> var_at_return;
            for (auto& st : stats)
                var_at_return.push_back(
                    transfer(corrected_variance(st, opts.variance_floor), h.finest_level, h));
            std::vector<long> wanted =
                allocate_samples(var_at_return, costs, counts, eps, opts.theta_split);
            bool settled = true;
            for (std::size_t l = 0; l < wanted.size(); ++l) {
                if (wanted[l] > counts[l]) {
                    long target = std::min(wanted[l], std::max(2 * counts[l], counts[l] + 8));
                    stats[l] = level_pass(ctx, static_cast<int>(l), u,
                                          keys_for(static_cast<int>(l), target), opts.variant,
                                          opts.kappa);
                    counts[l] = target;
                    settled = false;
                }
            }
            if (settled) break;
        }

        // The bias bound needs a fitted decay rate, so certification requires
        // at least two correction levels.
        if (top >= 2) {
            err = error_terms(ctx, stats, counts, opts);
            double stoch = opts.budget_variance_test ? opts.theta_split * eps * eps
                                                     : err.stochastic_inf;
            converged = !err.no_decay && stoch + err.bias_bound * err.bias_bound <= eps * eps;
            if (converged) break;
        }
    }
    if (top > h.finest_level) top = h.finest_level;

    EstimateReport report;
    report.estimate = assemble_estimate(ctx, stats, u);
    report.epsilon_requested = eps;
    err = error_terms(ctx, stats, counts, opts);
    report.stochastic_inf = err.stochastic_inf;
    report.bias_bound = std::isfinite(err.bias_bound) ? err.bias_bound : 0.0;
    report.rho = err.rho;
    report.achieved_rmse = std::sqrt(err.stochastic_inf + report.bias_bound * report.bias_bound);
    report.converged = converged;
    report.counts = counts;
    report.level_stats = stats;

    FrozenSampleSet frozen;
    frozen.epsilon = eps;
    frozen.level_count = static_cast<int>(counts.size());
    frozen.variant = opts.variant;
    frozen.dim = h.dim;
    frozen.m0 = h.m0;
    for (int l = 0; l < frozen.level_count; ++l) {
        frozen.seeds.push_back(level_seed(seed_root, l));
        frozen.pair_seeds.push_back(level_pair_seed(seed_root, l));
        frozen.counts.push_back(counts[static_cast<std::size_t>(l)]);
    }
    report.frozen = frozen;
    return report;
}

std::pair<GridFunction, double> replay_gradient(const EstimatorContext& ctx,
                                                const FrozenSampleSet& frozen, const GridFunction& u,
                                                const EstimatorOptions& opts) {
    const GridHierarchy& h = ctx.hierarchy();
    if (frozen.dim != h.dim || frozen.m0 != h.m0)
        throw std::invalid_argument("replay_gradient: frozen set belongs to another hierarchy");
    std::vector<LevelStats> stats;
    for (int l = 0; l < frozen.level_count; ++l) {
        LevelKeys keys{frozen.seeds[static_cast<std::size_t>(l)],
                       frozen.pair_seeds[static_cast<std::size_t>(l)],
                       frozen.counts[static_cast<std::size_t>(l)]};
        stats.push_back(level_pass(ctx, l, u, keys, frozen.variant, opts.kappa));
    }
    ErrorTerms err = error_terms(ctx, stats, frozen.counts, opts);
    double bias = std::isfinite(err.bias_bound) ? err.bias_bound : 0.0;
    double expected_eps = std::sqrt(err.stochastic_inf + bias * bias);
    return {assemble_estimate(ctx, stats, u), expected_eps};
}

double evaluate_cost(const EstimatorContext& ctx, const FrozenSampleSet& frozen,
                     const GridFunction& u) {
    const GridHierarchy& h = ctx.hierarchy();
    const ProblemSpec& prob = *ctx.problem;

    // per-level sampled cost (tracking mean + gamma * ||sqrt(V1)||^2), level
    // `lvl`, chains of sample set `set`
    auto phi = [&](int lvl, int set) {
        LevelKeys keys{frozen.seeds[static_cast<std::size_t>(set)],
                       frozen.pair_seeds[static_cast<std::size_t>(set)],
                       frozen.counts[static_cast<std::size_t>(set)]};
        QoiStream::Mode mode;
        mode.cost_only = true;
        QoiStream stream(ctx, lvl, transfer(u, lvl, h), keys, frozen.variant, mode);
        double tracking = 0.0, vhat = 0.0;
        for (long j = 0; j < keys.count; ++j) {
            auto [t, v] = stream.next_cost_terms();
            tracking += t;
            vhat += v;
        }
        double n = static_cast<double>(keys.count);
        return tracking / n + prob.gamma * vhat / (2.0 * n);
    };

    double cost = prob.alpha * inner_product(u, u);
    cost += phi(0, 0);
    for (int l = 1; l < frozen.level_count; ++l) cost += phi(l, l) - phi(l - 1, l);
    return cost;
}

GridFunction replay_hessian_vector(const EstimatorContext& ctx, const FrozenSampleSet& frozen,
                                   const GridFunction& u, const GridFunction& du,
                                   RealizationCache* cache) {
    const GridHierarchy& h = ctx.hierarchy();
    GridFunction out(h, h.finest_level, 0.0);
    for (int l = 0; l < frozen.level_count; ++l) {
        LevelKeys keys{frozen.seeds[static_cast<std::size_t>(l)],
                       frozen.pair_seeds[static_cast<std::size_t>(l)],
                       frozen.counts[static_cast<std::size_t>(l)]};
        CorrectionStream stream(ctx, l, u, keys, frozen.variant, &du, cache);
        GridFunction mean(h, l, 0.0);
        for (long j = 0; j < keys.count; ++j) add_scaled(mean, 1.0, stream.next());
        scale(mean, 1.0 / static_cast<double>(keys.count));
        add_scaled(out, 1.0, transfer(mean, h.finest_level, h));
    }
    add_scaled(out, 2.0 * ctx.problem->alpha, du);
    return out;
}

}  // namespace mlmcopt
