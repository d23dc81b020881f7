#include "mlmcopt/chains.hpp"

#include <cmath>

namespace mlmcopt {

const RealizationCache::Entry* RealizationCache::find(int level, std::uint64_t seed,
                                                      std::uint64_t index) const {
    auto it = entries_.find(Key{level, seed, index});
    return it == entries_.end() ? nullptr : &it->second;
}

void RealizationCache::store_state(int level, std::uint64_t seed, std::uint64_t index,
                                   const GridFunction& y) {
    Key key{level, seed, index};
    if (entries_.count(key)) return;
    Entry e;
    e.y = y;
    bytes_ += y.values.size() * sizeof(double);
    entries_.emplace(key, std::move(e));
    order_.push_back(key);
    trim();
}

void RealizationCache::store_adjoint(int level, std::uint64_t seed, std::uint64_t index,
                                     const GridFunction& p) {
    auto it = entries_.find(Key{level, seed, index});
    if (it == entries_.end() || it->second.has_p) return;
    it->second.p = p;
    it->second.has_p = true;
    bytes_ += p.values.size() * sizeof(double);
    trim();
}

void RealizationCache::clear() {
    entries_.clear();
    order_.clear();
    bytes_ = 0;
}

void RealizationCache::trim() {
    std::size_t drop = 0;
    while (bytes_ > max_bytes_ && drop < order_.size()) {
        auto it = entries_.find(order_[drop]);
        if (it != entries_.end()) {
            bytes_ -= it->second.y.values.size() * sizeof(double);
            if (it->second.has_p) bytes_ -= it->second.p.values.size() * sizeof(double);
            entries_.erase(it);
        }
        ++drop;
    }
    if (drop > 0) order_.erase(order_.begin(), order_.begin() + static_cast<long>(drop));
}

namespace {

GridFunction masked(const GridFunction& beta, const GridFunction& p) {
    GridFunction out = p;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] *= beta.values[i];
    return out;
}

}  // namespace

struct QoiStream::Impl {
    const EstimatorContext& ctx;
    const GridHierarchy& hier;
    int level;
    long n;
    VarianceSampler variant;
    Mode mode;
    std::uint64_t seed, pair_seed;

    GridFunction control;          // drives the primal solves (u, or du in hessian mode)
    GridFunction support_control;  // frozen u behind a hessian stream (nonlinear support)
    GridFunction target;           // y_D at this level (zero in hessian mode)
    GridFunction support_target;   // y_D for the nonlinear support adjoint
    GridFunction beta;
    double gamma = 0.0;
    bool chain = false;
    bool nonlinear = false;

    long j = 0;

    struct Slot {
        GridFunction primal;                 // y_j, or dy_j in hessian mode
        std::optional<DiscreteOperator> op;  // self-adjoint operator of sample j
        GridFunction y_sup;                  // nonlinear hessian: underlying state
    };
    Slot cur, nxt;
    GridFunction prev_primal, prev_ysup;
    GridFunction first_primal, first_ysup;

    Impl(const EstimatorContext& c, int lvl, GridFunction u, const LevelKeys& keys,
         VarianceSampler var, const Mode& m)
        : ctx(c),
          hier(c.hierarchy()),
          level(lvl),
          n(keys.count),
          variant(var),
          mode(m),
          seed(keys.seed),
          pair_seed(keys.pair_seed) {
        if (n < 1) throw std::invalid_argument("QoiStream: empty sample set");
        hier.require_level(level);
        const ProblemSpec& prob = *ctx.problem;
        gamma = prob.gamma;
        nonlinear = prob.reaction.enabled();
        beta = discretize(prob.control_mask, hier, level);
        if (mode.hessian) {
            if (!mode.direction)
                throw std::invalid_argument("QoiStream: hessian mode needs a direction");
            control = *mode.direction;
            support_control = std::move(u);
            target = GridFunction(hier, level, 0.0);
            if (nonlinear) support_target = discretize(prob.target, hier, level);
        } else {
            control = std::move(u);
            target = discretize(prob.target, hier, level);
        }
        mode.direction = nullptr;  // copied above; do not keep the borrow
        chain = gamma > 0.0 && variant == VarianceSampler::shifted_chain && n > 1;

        if (chain) {
            Slot last = solve_slot(static_cast<std::uint64_t>(n - 1), false);
            prev_primal = std::move(last.primal);
            prev_ysup = std::move(last.y_sup);
        }
        cur = solve_slot(0, !mode.cost_only);
        first_primal = cur.primal;
        first_ysup = cur.y_sup;
        if (chain && !mode.cost_only && n > 1) nxt = solve_slot(1, true);
    }

    Slot solve_slot(std::uint64_t index, bool want_op) {
        SampleKey key{seed, index};
        GridFunction k = lognormal_field(ctx.sampler->gaussian(key, level));
        DiscreteOperator A(k, hier);
        Slot slot;
        if (!mode.hessian) {
            if (nonlinear) {
                slot.primal =
                    solve_state_nonlinear(A, ctx.problem->reaction, control, beta, hier, ctx.solver).y;
                if (want_op) slot.op = linearized_operator(A, ctx.problem->reaction, slot.primal, hier);
            } else {
                slot.primal = solve_state(A, control, beta, hier, ctx.solver).y;
                if (want_op) slot.op = std::move(A);
            }
            return slot;
        }
        if (nonlinear) {
            if (mode.cache) {
                if (const auto* e = mode.cache->find(level, seed, index)) slot.y_sup = e->y;
            }
            if (slot.y_sup.values.empty()) {
                slot.y_sup = solve_state_nonlinear(A, ctx.problem->reaction, support_control, beta,
                                                   hier, ctx.solver)
                                 .y;
                if (mode.cache) mode.cache->store_state(level, seed, index, slot.y_sup);
            }
            DiscreteOperator lin = linearized_operator(A, ctx.problem->reaction, slot.y_sup, hier);
            slot.primal = solve_state(lin, control, beta, hier, ctx.solver).y;
            if (want_op) slot.op = std::move(lin);
        } else {
            slot.primal = solve_state(A, control, beta, hier, ctx.solver).y;
            if (want_op) slot.op = std::move(A);
        }
        return slot;
    }

    // Adjoint of the underlying gradient problem at the current sample
    // (nonlinear hessian only); consumed by the f'' term.
    GridFunction support_adjoint() {
        std::uint64_t index = static_cast<std::uint64_t>(j);
        if (mode.cache) {
            const auto* e = mode.cache->find(level, seed, index);
            if (e && e->has_p) return e->p;
        }
        GridFunction rhs = cur.y_sup;
        add_scaled(rhs, -1.0, support_target);
        scale(rhs, 2.0);
        if (chain) {
            const GridFunction& y_next = (j == n - 1) ? first_ysup : nxt.y_sup;
            for (std::size_t i = 0; i < rhs.values.size(); ++i)
                rhs.values[i] +=
                    gamma * (2.0 * cur.y_sup.values[i] - y_next.values[i] - prev_ysup.values[i]);
        } else if (gamma > 0.0 && variant == VarianceSampler::twoset) {
            GridFunction ypair = pair_state(index);
            for (std::size_t i = 0; i < rhs.values.size(); ++i)
                rhs.values[i] += gamma * (cur.y_sup.values[i] - ypair.values[i]);
        }
        GridFunction p = solve_adjoint(*cur.op, rhs, hier, ctx.solver);
        if (mode.cache) mode.cache->store_adjoint(level, seed, index, p);
        return p;
    }

    // Paired-realization primal (two-set variant) for the current mode.
    GridFunction pair_primal(std::uint64_t index) {
        SampleKey key{pair_seed, index};
        GridFunction k = lognormal_field(ctx.sampler->gaussian(key, level));
        DiscreteOperator A(k, hier);
        if (!nonlinear) return solve_state(A, control, beta, hier, ctx.solver).y;
        if (!mode.hessian)
            return solve_state_nonlinear(A, ctx.problem->reaction, control, beta, hier, ctx.solver).y;
        GridFunction ysup =
            solve_state_nonlinear(A, ctx.problem->reaction, support_control, beta, hier, ctx.solver).y;
        DiscreteOperator lin = linearized_operator(A, ctx.problem->reaction, ysup, hier);
        return solve_state(lin, control, beta, hier, ctx.solver).y;
    }

    // Paired-realization state of the underlying problem (nonlinear hessian).
    GridFunction pair_state(std::uint64_t index) {
        SampleKey key{pair_seed, index};
        GridFunction k = lognormal_field(ctx.sampler->gaussian(key, level));
        DiscreteOperator A(k, hier);
        return solve_state_nonlinear(A, ctx.problem->reaction, support_control, beta, hier, ctx.solver)
            .y;
    }

    void advance(bool want_op) {
        prev_primal = std::move(cur.primal);
        prev_ysup = std::move(cur.y_sup);
        if (j + 1 < n) {
            if (!nxt.primal.values.empty()) {
                cur = std::move(nxt);
                nxt = Slot{};
            } else {
                cur = solve_slot(static_cast<std::uint64_t>(j + 1), want_op);
            }
            if (chain && want_op && j + 2 < n) nxt = solve_slot(static_cast<std::uint64_t>(j + 2), true);
        }
        ++j;
    }

    GridFunction next_qoi() {
        if (j >= n) throw std::logic_error("QoiStream: exhausted");
        if (mode.cost_only) throw std::logic_error("QoiStream: stream is cost-only");

        GridFunction rhs = cur.primal;
        add_scaled(rhs, -1.0, target);
        scale(rhs, 2.0);
        if (chain) {
            const GridFunction& nxt_primal = (j == n - 1) ? first_primal : nxt.primal;
            for (std::size_t i = 0; i < rhs.values.size(); ++i)
                rhs.values[i] +=
                    gamma * (2.0 * cur.primal.values[i] - nxt_primal.values[i] - prev_primal.values[i]);
        } else if (gamma > 0.0 && variant == VarianceSampler::twoset) {
            GridFunction pair = pair_primal(static_cast<std::uint64_t>(j));
            for (std::size_t i = 0; i < rhs.values.size(); ++i)
                rhs.values[i] += gamma * (cur.primal.values[i] - pair.values[i]);
        }
        if (mode.hessian && nonlinear) {
            GridFunction p = support_adjoint();
            const Reaction& f = ctx.problem->reaction;
            for (std::size_t i = 0; i < rhs.values.size(); ++i)
                rhs.values[i] -= f.fpp(cur.y_sup.values[i]) * p.values[i] * cur.primal.values[i];
        }
        GridFunction p = solve_adjoint(*cur.op, rhs, hier, ctx.solver);
        GridFunction qoi = masked(beta, p);
        advance(true);
        return qoi;
    }

    std::pair<double, double> next_cost() {
        if (j >= n) throw std::logic_error("QoiStream: exhausted");
        if (mode.hessian) throw std::logic_error("QoiStream: cost terms need gradient mode");
        GridFunction diff = cur.primal;
        add_scaled(diff, -1.0, target);
        double tracking = inner_product(diff, diff);
        double vhat = 0.0;
        if (chain) {
            GridFunction d = cur.primal;
            add_scaled(d, -1.0, prev_primal);
            vhat = inner_product(d, d);
        } else if (gamma > 0.0 && variant == VarianceSampler::twoset) {
            GridFunction pair = pair_primal(static_cast<std::uint64_t>(j));
            GridFunction d = cur.primal;
            add_scaled(d, -1.0, pair);
            vhat = inner_product(d, d);
        }
        advance(false);
        return {tracking, vhat};
    }
};

QoiStream::QoiStream(const EstimatorContext& ctx, int level, GridFunction control_at_level,
                     const LevelKeys& keys, VarianceSampler variant, Mode mode)
    : impl_(std::make_unique<Impl>(ctx, level, std::move(control_at_level), keys, variant, mode)) {}

QoiStream::~QoiStream() = default;
QoiStream::QoiStream(QoiStream&&) noexcept = default;

GridFunction QoiStream::next() { return impl_->next_qoi(); }

std::pair<double, double> QoiStream::next_cost_terms() { return impl_->next_cost(); }

long QoiStream::count() const { return impl_->n; }

CorrectionStream::CorrectionStream(const EstimatorContext& ctx, int level,
                                   const GridFunction& u_at_return, const LevelKeys& keys,
                                   VarianceSampler variant, const GridFunction* du_at_return,
                                   RealizationCache* cache)
    : ctx_(&ctx), level_(level), keys_count_(keys.count) {
    const GridHierarchy& h = ctx.hierarchy();
    h.require_level(level);
    QoiStream::Mode mode;
    mode.hessian = du_at_return != nullptr;
    mode.cache = cache;
    if (mode.hessian) {
        GridFunction du_fine = transfer(*du_at_return, level, h);
        mode.direction = &du_fine;
        fine_.emplace(ctx, level, transfer(u_at_return, level, h), keys, variant, mode);
        if (level > 0) {
            GridFunction du_coarse = transfer(*du_at_return, level - 1, h);
            mode.direction = &du_coarse;
            coarse_.emplace(ctx, level - 1, transfer(u_at_return, level - 1, h), keys, variant, mode);
        }
    } else {
        fine_.emplace(ctx, level, transfer(u_at_return, level, h), keys, variant, mode);
        if (level > 0)
            coarse_.emplace(ctx, level - 1, transfer(u_at_return, level - 1, h), keys, variant, mode);
    }
}

GridFunction CorrectionStream::next() {
    GridFunction y = fine_->next();
    if (coarse_) {
        GridFunction qc = coarse_->next();
        add_scaled(y, -1.0, prolong(qc, ctx_->hierarchy()));
    }
    return y;
}

}  // namespace mlmcopt
