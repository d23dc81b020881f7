#include "mlmcopt/optimize.hpp"

#include <chrono>
#include <cmath>

namespace mlmcopt {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

RefreshInfo describe_refresh(long step, const char* trigger, const EstimateReport& rep,
                             double seconds) {
    RefreshInfo info;
    info.step = step;
    info.trigger = trigger;
    info.epsilon = rep.epsilon_requested;
    info.achieved = rep.achieved_rmse;
    info.rho = rep.rho;
    info.counts = rep.counts;
    for (const auto& st : rep.level_stats) {
        info.variance_inf.push_back(inf_norm(st.variance));
        info.corrected_variance_inf.push_back(inf_norm(corrected_variance(st)));
    }
    info.wall_seconds = seconds;
    return info;
}

}  // namespace

std::optional<double> dy_beta(const GridFunction& g_new, const GridFunction& g_old,
                              const GridFunction& d_old) {
    double gg = inner_product(g_new, g_new);
    if (gg == 0.0) return 0.0;
    GridFunction diff = g_new;
    add_scaled(diff, -1.0, g_old);
    double denom = inner_product(d_old, diff);
    if (std::abs(denom) < 1e-300) return std::nullopt;
    return gg / denom;
}

double parabola_linesearch(double dphi0, double dphi_s, double s_prev, long iteration) {
    if (!(dphi0 < 0.0))
        throw std::runtime_error("parabola_linesearch: non-descent direction at iteration " +
                                 std::to_string(iteration));
    if (dphi_s <= dphi0) return s_prev;  // nonpositive curvature along the line
    return s_prev * dphi0 / (dphi0 - dphi_s);
}

CgResult cg_solve(const std::function<GridFunction(const GridFunction&)>& apply_hessian,
                  const GridFunction& rhs, double tol, int max_iterations) {
    CgResult out;
    out.solution = rhs;
    scale(out.solution, 0.0);
    GridFunction r = rhs;
    double rr = inner_product(r, r);
    out.residual_norms.push_back(std::sqrt(rr));
    if (out.residual_norms.back() <= tol) return out;
    GridFunction p = r;
    for (int i = 0; i < max_iterations; ++i) {
        GridFunction hp = apply_hessian(p);
        double php = inner_product(p, hp);
        if (php <= 0.0) {
            out.negative_curvature = true;
            return out;
        }
        double step = rr / php;
        add_scaled(out.solution, step, p);
        add_scaled(r, -step, hp);
        double rr_new = inner_product(r, r);
        out.residual_norms.push_back(std::sqrt(rr_new));
        ++out.iterations;
        if (out.residual_norms.back() <= tol) return out;
        double beta = rr_new / rr;
        rr = rr_new;
        GridFunction p_next = r;
        add_scaled(p_next, beta, p);
        p = std::move(p_next);
    }
    return out;
}

OptimizeResult ncg_optimize(const EstimatorContext& ctx, const GridFunction& u0,
                            const OptimizerConfig& cfg, const EstimatorOptions& est,
                            std::uint64_t master_seed) {
    cfg.validate();
    const Clock::time_point t0 = Clock::now();
    OptimizeResult out;
    out.control = u0;

    long calls = 0;
    auto fresh = [&](const GridFunction& u, double eps) {
        return run_estimator(ctx, u, eps, rng::hash2(master_seed, static_cast<std::uint64_t>(++calls)),
                             est);
    };

    EstimateReport rep = fresh(u0, cfg.eps0);
    out.refreshes.push_back(describe_refresh(0, "init", rep, seconds_since(t0)));
    FrozenSampleSet frozen = rep.frozen;
    std::vector<long> counts = rep.counts;
    GridFunction g = rep.estimate;
    GridFunction d = g;
    scale(d, -1.0);
    double eps_k = cfg.eps0;
    double s_prev = cfg.s_init;
    bool refreshed = true;

    for (long k = 0; k < cfg.k_max; ++k) {
        double gnorm = norm(g);
        out.trace.push_back({k, "ncg", gnorm, eps_k, refreshed, counts, seconds_since(t0)});
        if (cfg.record_iterates) out.iterates.push_back(out.control);
        refreshed = false;

        if (gnorm <= cfg.tau) {
            EstimateReport check = fresh(out.control, eps_k);
            double fresh_norm = norm(check.estimate);
            out.trace.push_back({k, "check", fresh_norm, eps_k, true, check.counts, seconds_since(t0)});
            out.refreshes.push_back(describe_refresh(k, "check", check, seconds_since(t0)));
            if (fresh_norm <= cfg.tau) {
                out.converged = true;
                out.fresh_gradient_norm = fresh_norm;
                out.estimator_calls = calls;
                return out;
            }
        }

        if (inner_product(g, d) >= 0.0) {
            d = g;
            scale(d, -1.0);
        }

        // parabola linesearch on the frozen samples
        double dphi0 = inner_product(g, d);
        GridFunction trial = out.control;
        add_scaled(trial, s_prev, d);
        GridFunction g_trial = replay_gradient(ctx, frozen, trial, est).first;
        double dphi_s = inner_product(g_trial, d);
        double s = parabola_linesearch(dphi0, dphi_s, s_prev, k);
        add_scaled(out.control, s, d);
        s_prev = s;

        GridFunction g_next;
        bool want_refresh = eps_k > std::max(cfg.q * cfg.tau, cfg.q * gnorm) ||
                            eps_k < cfg.eta * cfg.eta * cfg.q * gnorm;
        if (cfg.refresh && want_refresh) {
            eps_k = std::max(cfg.q * cfg.tau, cfg.eta * cfg.q * gnorm);
            rep = fresh(out.control, eps_k);
            out.refreshes.push_back(describe_refresh(k + 1, "refresh", rep, seconds_since(t0)));
            frozen = rep.frozen;
            counts = rep.counts;
            g_next = rep.estimate;
            refreshed = true;
        } else {
            auto [replayed, eps_expected] = replay_gradient(ctx, frozen, out.control, est);
            g_next = std::move(replayed);
            eps_k = eps_expected;
        }

        auto beta = dy_beta(g_next, g, d);
        if (beta) {
            GridFunction d_next = g_next;
            scale(d_next, -1.0);
            add_scaled(d_next, *beta, d);
            d = std::move(d_next);
        } else {
            d = g_next;
            scale(d, -1.0);
        }
        g = std::move(g_next);
    }

    out.converged = false;
    EstimateReport last = fresh(out.control, eps_k);
    out.refreshes.push_back(
        describe_refresh(static_cast<long>(cfg.k_max), "final", last, seconds_since(t0)));
    out.fresh_gradient_norm = norm(last.estimate);
    out.estimator_calls = calls;
    return out;
}

OptimizeResult newton_optimize(const EstimatorContext& ctx, const GridFunction& u0,
                               const OptimizerConfig& cfg, const EstimatorOptions& est,
                               std::uint64_t master_seed) {
    cfg.validate();
    const Clock::time_point t0 = Clock::now();
    OptimizeResult out;
    out.control = u0;

    long calls = 0;
    auto fresh = [&](const GridFunction& u, double eps) {
        return run_estimator(ctx, u, eps, rng::hash2(master_seed, static_cast<std::uint64_t>(++calls)),
                             est);
    };

    double eps_k = cfg.eps0;
    long cg_step = 0;
    for (long k = 0; k < cfg.k_max; ++k) {
        EstimateReport rep = fresh(out.control, eps_k);
        out.refreshes.push_back(
            describe_refresh(cg_step, k == 0 ? "init" : "refresh", rep, seconds_since(t0)));
        double gnorm = norm(rep.estimate);
        out.trace.push_back({k, "newton", gnorm, eps_k, true, rep.counts, seconds_since(t0)});

        if (gnorm <= cfg.tau) {
            EstimateReport check = fresh(out.control, eps_k);
            double fresh_norm = norm(check.estimate);
            out.trace.push_back({k, "check", fresh_norm, eps_k, true, check.counts, seconds_since(t0)});
            out.refreshes.push_back(describe_refresh(cg_step, "check", check, seconds_since(t0)));
            if (fresh_norm <= cfg.tau) {
                out.converged = true;
                out.fresh_gradient_norm = fresh_norm;
                out.estimator_calls = calls;
                return out;
            }
        }

        RealizationCache cache(cfg.hessian_cache_bytes);
        auto apply = [&](const GridFunction& v) {
            return replay_hessian_vector(ctx, rep.frozen, out.control, v, &cache);
        };
        GridFunction neg_g = rep.estimate;
        scale(neg_g, -1.0);
        CgResult cg = cg_solve(apply, neg_g, eps_k / cfg.q);
        for (std::size_t i = 1; i < cg.residual_norms.size(); ++i)
            out.trace.push_back({cg_step + static_cast<long>(i), "cg", cg.residual_norms[i], eps_k,
                                 false, rep.counts, seconds_since(t0)});
        cg_step += static_cast<long>(cg.residual_norms.size() > 0 ? cg.residual_norms.size() - 1 : 0);
        if (cg.negative_curvature) {
            out.negative_curvature = true;
            out.converged = false;
            out.fresh_gradient_norm = gnorm;
            out.estimator_calls = calls;
            return out;
        }
        add_scaled(out.control, 1.0, cg.solution);
        eps_k = std::max(cfg.q * cfg.tau, cfg.eta * eps_k);
    }

    out.converged = false;
    EstimateReport last = fresh(out.control, eps_k);
    out.refreshes.push_back(describe_refresh(cg_step, "final", last, seconds_since(t0)));
    out.fresh_gradient_norm = norm(last.estimate);
    out.estimator_calls = calls;
    return out;
}

}  // namespace mlmcopt
