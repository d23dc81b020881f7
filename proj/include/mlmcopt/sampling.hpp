#ifndef MLMCOPT_SAMPLING_HPP
#define MLMCOPT_SAMPLING_HPP

#include <cstdint>
#include <vector>

#include "mlmcopt/covariance.hpp"
#include "mlmcopt/grid.hpp"

namespace mlmcopt {

/// Identifies one realization inside an ordered sample set. The mapping
/// (base_seed, index) -> xi-vector is a pure function, so any sample can be
/// regenerated in isolation, in any order, from any thread.
struct SampleKey {
    std::uint64_t base_seed = 0;
    std::uint64_t index = 0;
};

/// Counter-based generators: stateless hashes of (seed, counter) words.
namespace rng {

/// SplitMix64 finalizer; bijective avalanche on 64 bits.
inline std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

inline std::uint64_t hash2(std::uint64_t a, std::uint64_t b) {
    std::uint64_t h = mix(a + 0x9e3779b97f4a7c15ULL);
    return mix(h ^ (b * 0xbf58476d1ce4e5b9ULL + 0x94d049bb133111ebULL));
}

inline std::uint64_t hash3(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix(hash2(a, b) ^ (c * 0x2545f4914f6cdd1dULL + 0x9e3779b97f4a7c15ULL));
}

/// Uniform in (0,1]; never returns exactly 0 so it is safe under log().
inline double uniform_open(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

/// Standard normal via Box-Muller from two counter-hashed uniforms.
inline double standard_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    double u1 = uniform_open(hash3(seed, a, 2 * b));
    double u2 = uniform_open(hash3(seed, a, 2 * b + 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace rng

/// The iid standard-normal coefficient vector of one realization.
inline std::vector<double> xi_vector(const SampleKey& key, int n_kl) {
    std::vector<double> xi(static_cast<std::size_t>(n_kl));
    for (int n = 0; n < n_kl; ++n)
        xi[static_cast<std::size_t>(n)] =
            rng::standard_normal(key.base_seed, key.index, static_cast<std::uint64_t>(n));
    return xi;
}

/// Evaluates truncated-KL realizations of the Gaussian log-field at the cell
/// centers of any hierarchy level. Immutable after construction; all sampling
/// entry points are const and safe to call concurrently.
class FieldSampler {
public:
    FieldSampler(KLBasis basis, GridHierarchy hierarchy);

    const KLBasis& basis() const { return basis_; }
    const GridHierarchy& hierarchy() const { return hierarchy_; }

    /// z(x) = sum_n sqrt(theta_n) xi_n(key) f_n(x) at the cell centers of
    /// `level`. The xi-vector depends on the key only, never on the level.
    GridFunction gaussian(const SampleKey& key, int level) const;

    /// Same field from a caller-supplied xi-vector (tests, reuse).
    GridFunction gaussian_from_xi(const std::vector<double>& xi, int level) const;

private:
    KLBasis basis_;
    GridHierarchy hierarchy_;
    // tables_[level][factor_index][cell_1d] = f1d(cell center), per axis grid
    std::vector<std::vector<std::vector<double>>> tables_;
};

/// k = exp(z), pointwise; strictly positive for finite z.
GridFunction lognormal_field(const GridFunction& z);

}  // namespace mlmcopt

#endif
