#include "mlmcopt/transfer.hpp"

namespace mlmcopt {

namespace {

// 1D interpolation of cell-center values from m to 2m cells. Fine center f
// sits a quarter cell away from its parent coarse center p = f/2; the second
// stencil entry is the coarse neighbor on the near side. The outermost fine
// centers extrapolate the boundary-adjacent line linearly, which keeps the
// interpolation second-order accurate up to the walls (a constant clamp
// would cut the per-level decay of the correction means to first order).
void prolong_line(const double* in, int m, double* out) {
    for (int f = 0; f < 2 * m; ++f) {
        int p = f / 2;
        if (f % 2 == 0) {
            out[f] = (p == 0) ? 1.25 * in[0] - 0.25 * in[1] : 0.25 * in[p - 1] + 0.75 * in[p];
        } else {
            out[f] = (p == m - 1) ? 1.25 * in[m - 1] - 0.25 * in[m - 2]
                                  : 0.75 * in[p] + 0.25 * in[p + 1];
        }
    }
}

// Transpose of prolong_line scaled by 1/2 (the per-axis share of c = 2^d).
void restrict_line(const double* in, int m_fine, double* out) {
    int m = m_fine / 2;
    for (int c = 0; c < m; ++c) out[c] = 0.0;
    for (int f = 0; f < m_fine; ++f) {
        int p = f / 2;
        if (f % 2 == 0) {
            if (p == 0) {
                out[0] += 1.25 * in[f];
                out[1] -= 0.25 * in[f];
            } else {
                out[p - 1] += 0.25 * in[f];
                out[p] += 0.75 * in[f];
            }
        } else {
            if (p == m - 1) {
                out[m - 1] += 1.25 * in[f];
                out[m - 2] -= 0.25 * in[f];
            } else {
                out[p] += 0.75 * in[f];
                out[p + 1] += 0.25 * in[f];
            }
        }
    }
    for (int c = 0; c < m; ++c) out[c] *= 0.5;
}

}  // namespace

GridFunction prolong(const GridFunction& v, const GridHierarchy& h) {
    if (v.values.size() != v.expected_size())
        throw std::invalid_argument("prolong: malformed grid function");
    if (v.level + 1 > h.finest_level)
        throw std::invalid_argument("prolong: target level exceeds finest level");
    int m = v.cells_per_axis();
    GridFunction out(h, v.level + 1);
    if (h.dim == 1) {
        prolong_line(v.values.data(), m, out.values.data());
        return out;
    }
    // x pass then y pass
    int mf = 2 * m;
    std::vector<double> tmp(static_cast<std::size_t>(mf) * m);
    for (int row = 0; row < m; ++row)
        prolong_line(v.values.data() + static_cast<std::size_t>(row) * m, m,
                     tmp.data() + static_cast<std::size_t>(row) * mf);
    std::vector<double> col_in(m), col_out(mf);
    for (int col = 0; col < mf; ++col) {
        for (int row = 0; row < m; ++row) col_in[row] = tmp[static_cast<std::size_t>(row) * mf + col];
        prolong_line(col_in.data(), m, col_out.data());
        for (int row = 0; row < mf; ++row)
            out.values[static_cast<std::size_t>(row) * mf + col] = col_out[row];
    }
    return out;
}

GridFunction restrict(const GridFunction& v, const GridHierarchy& h) {
    if (v.values.size() != v.expected_size())
        throw std::invalid_argument("restrict: malformed grid function");
    if (v.level < 1) throw std::invalid_argument("restrict: cannot restrict below level 0");
    int mf = v.cells_per_axis();
    int m = mf / 2;
    GridFunction out(h, v.level - 1);
    if (h.dim == 1) {
        restrict_line(v.values.data(), mf, out.values.data());
        return out;
    }
    std::vector<double> tmp(static_cast<std::size_t>(m) * mf);
    for (int row = 0; row < mf; ++row)
        restrict_line(v.values.data() + static_cast<std::size_t>(row) * mf, mf,
                      tmp.data() + static_cast<std::size_t>(row) * m);
    std::vector<double> col_in(mf), col_out(m);
    for (int col = 0; col < m; ++col) {
        for (int row = 0; row < mf; ++row) col_in[row] = tmp[static_cast<std::size_t>(row) * m + col];
        restrict_line(col_in.data(), mf, col_out.data());
        for (int row = 0; row < m; ++row)
            out.values[static_cast<std::size_t>(row) * m + col] = col_out[row];
    }
    return out;
}

GridFunction transfer(const GridFunction& v, int target_level, const GridHierarchy& h) {
    h.require_level(target_level);
    h.require_level(v.level);
    GridFunction out = v;
    while (out.level < target_level) out = prolong(out, h);
    while (out.level > target_level) out = restrict(out, h);
    return out;
}

}  // namespace mlmcopt
