#include "mlmcopt/sampling.hpp"

#include <cmath>

namespace mlmcopt {

FieldSampler::FieldSampler(KLBasis basis, GridHierarchy hierarchy)
    : basis_(std::move(basis)), hierarchy_(std::move(hierarchy)) {
    hierarchy_.validate();
    tables_.resize(static_cast<std::size_t>(hierarchy_.finest_level) + 1);
    for (int lvl = 0; lvl <= hierarchy_.finest_level; ++lvl) {
        int m = hierarchy_.cells_per_axis(lvl);
        double h = hierarchy_.spacing(lvl);
        auto& table = tables_[static_cast<std::size_t>(lvl)];
        table.resize(basis_.factors.size());
        for (std::size_t f = 0; f < basis_.factors.size(); ++f) {
            table[f].resize(static_cast<std::size_t>(m));
            for (int c = 0; c < m; ++c) table[f][static_cast<std::size_t>(c)] = basis_.factors[f].evaluate((c + 0.5) * h);
        }
    }
}

GridFunction FieldSampler::gaussian(const SampleKey& key, int level) const {
    return gaussian_from_xi(xi_vector(key, basis_.spec.n_kl), level);
}

GridFunction FieldSampler::gaussian_from_xi(const std::vector<double>& xi, int level) const {
    hierarchy_.require_level(level);
    if (xi.size() != basis_.terms.size())
        throw std::invalid_argument("FieldSampler: xi-vector length does not match basis");
    const auto& table = tables_[static_cast<std::size_t>(level)];
    int m = hierarchy_.cells_per_axis(level);
    GridFunction z(hierarchy_, level);

    if (hierarchy_.dim == 1) {
        for (std::size_t n = 0; n < basis_.terms.size(); ++n) {
            const KLTerm& t = basis_.terms[n];
            double coef = std::sqrt(t.theta) * xi[n];
            const auto& fx = table[static_cast<std::size_t>(t.factor_x)];
            for (int c = 0; c < m; ++c) z.values[static_cast<std::size_t>(c)] += coef * fx[static_cast<std::size_t>(c)];
        }
        return z;
    }

    // Separable evaluation: collapse the terms sharing an x1-factor into a
    // partial field over x2 first, then expand along x1.
    std::size_t n_factors = basis_.factors.size();
    std::vector<double> partial(n_factors * static_cast<std::size_t>(m), 0.0);
    std::vector<char> used(n_factors, 0);
    for (std::size_t n = 0; n < basis_.terms.size(); ++n) {
        const KLTerm& t = basis_.terms[n];
        double coef = std::sqrt(t.theta) * xi[n];
        used[static_cast<std::size_t>(t.factor_x)] = 1;
        const auto& fy = table[static_cast<std::size_t>(t.factor_y)];
        double* row = partial.data() + static_cast<std::size_t>(t.factor_x) * m;
        for (int cy = 0; cy < m; ++cy) row[cy] += coef * fy[static_cast<std::size_t>(cy)];
    }
    for (std::size_t i = 0; i < n_factors; ++i) {
        if (!used[i]) continue;
        const auto& fx = table[i];
        const double* row = partial.data() + i * static_cast<std::size_t>(m);
        for (int cy = 0; cy < m; ++cy) {
            double s = row[cy];
            if (s == 0.0) continue;
            double* out = z.values.data() + static_cast<std::size_t>(cy) * m;
            for (int cx = 0; cx < m; ++cx) out[cx] += fx[static_cast<std::size_t>(cx)] * s;
        }
    }
    return z;
}

GridFunction lognormal_field(const GridFunction& z) {
    GridFunction k = z;
    for (double& v : k.values) v = std::exp(v);
    return k;
}

}  // namespace mlmcopt
