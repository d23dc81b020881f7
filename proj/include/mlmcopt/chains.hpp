#ifndef MLMCOPT_CHAINS_HPP
#define MLMCOPT_CHAINS_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <optional>

#include "mlmcopt/problem.hpp"
#include "mlmcopt/sampling.hpp"
#include "mlmcopt/solver.hpp"
#include "mlmcopt/transfer.hpp"

namespace mlmcopt {

/// Everything a sampling pass needs, wired once per run.
struct EstimatorContext {
    const ProblemSpec* problem = nullptr;
    const FieldSampler* sampler = nullptr;
    SolverOptions solver;

    const GridHierarchy& hierarchy() const { return problem->hierarchy; }
};

/// Which estimator drives the variance penalty term. The shifted chain is the
/// single-set estimator whose gradient samples reuse neighboring states in a
/// circular order (one new state solve per sample); the two-set variant pairs
/// every sample with an independent realization (two state solves per sample,
/// fully independent samples).
enum class VarianceSampler { shifted_chain, twoset };

/// Ordered sample set of one level: keys are (seed, 0..count-1); the paired
/// seed feeds the second set of the two-set variant.
struct LevelKeys {
    std::uint64_t seed = 0;
    std::uint64_t pair_seed = 0;
    long count = 0;
};

/// Cache of per-realization states (and adjoints once known) for frozen-set
/// Hessian replays at a fixed control. Keyed by (level, seed, index); oldest
/// entries are evicted once the byte budget is exceeded and recomputed on
/// miss. Valid only while the frozen set and the control stay fixed.
class RealizationCache {
public:
    struct Entry {
        GridFunction y;
        GridFunction p;
        bool has_p = false;
    };

    explicit RealizationCache(std::size_t max_bytes = 256ULL << 20) : max_bytes_(max_bytes) {}

    const Entry* find(int level, std::uint64_t seed, std::uint64_t index) const;
    void store_state(int level, std::uint64_t seed, std::uint64_t index, const GridFunction& y);
    void store_adjoint(int level, std::uint64_t seed, std::uint64_t index, const GridFunction& p);
    void clear();
    std::size_t bytes() const { return bytes_; }

private:
    using Key = std::tuple<int, std::uint64_t, std::uint64_t>;
    void trim();
    std::map<Key, Entry> entries_;
    std::vector<Key> order_;
    std::size_t max_bytes_;
    std::size_t bytes_ = 0;
};

/// Streams the per-sample gradient quantity beta .* p_j of one level in chain
/// order, solving each state once and reusing the circular neighbors for the
/// variance-penalty term of the adjoint right-hand side:
///   A'_j p_j = h^d [ 2(y_j - y_D) + gamma (2 y_j - y_{j+1} - y_{j-1}) ]
/// (shifted chain) or gamma (y_j - y'_j) for the two-set variant. The
/// deterministic 2 alpha u part of the gradient is never sampled here.
///
/// In hessian mode the same structure produces beta .* dp_j for a direction
/// du: the "states" are the linearized solves driven by du, the tracking term
/// is 2 dy_j, and for a reaction term the extra -f''(y_j) p_j dy_j enters the
/// right-hand side, with (y_j, p_j) recomputed at the frozen keys or served
/// from the cache.
struct QoiMode {
    bool hessian = false;
    const GridFunction* direction = nullptr;  // du at the stream level (hessian)
    RealizationCache* cache = nullptr;
    bool cost_only = false;  // next_cost_terms() path; skips all adjoint work
};

class QoiStream {
public:
    using Mode = QoiMode;

    QoiStream(const EstimatorContext& ctx, int level, GridFunction control_at_level,
              const LevelKeys& keys, VarianceSampler variant, Mode mode = Mode());
    ~QoiStream();
    QoiStream(QoiStream&&) noexcept;

    /// QoI sample of the next chain position; callable count() times.
    GridFunction next();

    /// Per-sample cost contributions instead of the QoI (gradient mode only):
    /// returns (||y_j - y_D||^2, ||y_j - y_{j-1}||^2 or ||y_j - y'_j||^2).
    std::pair<double, double> next_cost_terms();

    long count() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Streams correction samples Y_l = Q_l(omega_j) - I Q_{l-1}(omega_j) at one
/// level (plain level-0 QoI when level == 0), with the same realization keys
/// driving both grids. Controls are given at the return level and transferred
/// down internally.
class CorrectionStream {
public:
    CorrectionStream(const EstimatorContext& ctx, int level, const GridFunction& u_at_return,
                     const LevelKeys& keys, VarianceSampler variant,
                     const GridFunction* du_at_return = nullptr, RealizationCache* cache = nullptr);

    GridFunction next();
    long count() const { return keys_count_; }

private:
    const EstimatorContext* ctx_;
    int level_;
    long keys_count_;
    std::optional<QoiStream> fine_;
    std::optional<QoiStream> coarse_;
};

}  // namespace mlmcopt

#endif
