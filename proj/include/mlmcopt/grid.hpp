#ifndef MLMCOPT_GRID_HPP
#define MLMCOPT_GRID_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlmcopt {

/// Uniform cell-centered grid hierarchy on [0,1]^d with m_l = m0 * 2^l cells
/// per axis. Level 0 is the coarsest, finest_level the return level of the
/// estimator. The transfer constant c = 2^d ties restriction to the transpose
/// of prolongation.
struct GridHierarchy {
    int m0 = 8;
    int dim = 2;
    int finest_level = 3;

    void validate() const {
        if (m0 < 2) throw std::invalid_argument("GridHierarchy: m0 must be >= 2");
        if (dim != 1 && dim != 2) throw std::invalid_argument("GridHierarchy: dim must be 1 or 2");
        if (finest_level < 0) throw std::invalid_argument("GridHierarchy: finest_level must be >= 0");
    }

    int cells_per_axis(int level) const { return m0 << level; }

    std::size_t cell_count(int level) const {
        std::size_t m = static_cast<std::size_t>(cells_per_axis(level));
        return dim == 1 ? m : m * m;
    }

    double spacing(int level) const { return 1.0 / cells_per_axis(level); }

    /// Cell measure h^d.
    double cell_volume(int level) const { return std::pow(spacing(level), dim); }

    int transfer_constant() const { return 1 << dim; }

    bool has_level(int level) const { return level >= 0 && level <= finest_level; }

    void require_level(int level) const {
        if (!has_level(level))
            throw std::invalid_argument("GridHierarchy: level " + std::to_string(level) +
                                        " outside [0," + std::to_string(finest_level) + "]");
    }

    /// Center coordinates of the cell with lexicographic index (x1 fastest).
    std::array<double, 2> cell_center(int level, std::size_t index) const {
        int m = cells_per_axis(level);
        double h = spacing(level);
        std::array<double, 2> x{0.0, 0.0};
        x[0] = (static_cast<double>(index % m) + 0.5) * h;
        if (dim == 2) x[1] = (static_cast<double>(index / m) + 0.5) * h;
        return x;
    }
};

/// Values at the cell centers of one hierarchy level, ordered
/// lexicographically (x1 fastest). Carries enough metadata to be
/// self-describing in files and across module boundaries.
struct GridFunction {
    int dim = 2;
    int m0 = 8;
    int level = 0;
    std::vector<double> values;

    GridFunction() = default;
    GridFunction(const GridHierarchy& h, int lvl, double fill = 0.0)
        : dim(h.dim), m0(h.m0), level(lvl), values(h.cell_count(lvl), fill) {}

    int cells_per_axis() const { return m0 << level; }

    std::size_t expected_size() const {
        std::size_t m = static_cast<std::size_t>(cells_per_axis());
        return dim == 1 ? m : m * m;
    }

    bool shape_matches(const GridFunction& other) const {
        return dim == other.dim && m0 == other.m0 && level == other.level &&
               values.size() == other.values.size();
    }

    void require_shape(const GridFunction& other, const char* what) const {
        if (!shape_matches(other))
            throw std::invalid_argument(std::string(what) + ": grid function shape/level mismatch");
    }
};

/// Discrete inner product (u,v) = u^T v / m^d; level-independent for
/// constant fields, approximates the L2(D) inner product.
inline double inner_product(const GridFunction& a, const GridFunction& b) {
    a.require_shape(b, "inner_product");
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
    return s / static_cast<double>(a.values.size());
}

inline double norm(const GridFunction& a) { return std::sqrt(inner_product(a, a)); }

inline double inf_norm(const GridFunction& a) {
    double s = 0.0;
    for (double v : a.values) s = std::max(s, std::abs(v));
    return s;
}

/// a += c*b
inline void add_scaled(GridFunction& a, double c, const GridFunction& b) {
    a.require_shape(b, "add_scaled");
    for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] += c * b.values[i];
}

inline void scale(GridFunction& a, double c) {
    for (double& v : a.values) v *= c;
}

inline GridFunction axpy(double c, const GridFunction& a, const GridFunction& b) {
    GridFunction r = b;
    add_scaled(r, c, a);
    return r;
}

/// Pointwise scalar field descriptor: a constant or an axis-aligned box
/// indicator with inside/outside values. Enough to express the target states
/// and control masks of the model problems, and round-trips through config
/// files.
struct FieldSpec {
    enum class Kind { constant, box };
    Kind kind = Kind::constant;
    double value = 0.0;                  // constant
    std::array<double, 2> lo{0.0, 0.0};  // box
    std::array<double, 2> hi{1.0, 1.0};
    double inside = 1.0;
    double outside = 0.0;

    static FieldSpec constant(double v) {
        FieldSpec f;
        f.kind = Kind::constant;
        f.value = v;
        return f;
    }

    static FieldSpec box(std::array<double, 2> lo, std::array<double, 2> hi, double inside,
                         double outside) {
        FieldSpec f;
        f.kind = Kind::box;
        f.lo = lo;
        f.hi = hi;
        f.inside = inside;
        f.outside = outside;
        return f;
    }

    double operator()(const std::array<double, 2>& x, int dim) const {
        if (kind == Kind::constant) return value;
        for (int a = 0; a < dim; ++a)
            if (x[a] < lo[a] || x[a] > hi[a]) return outside;
        return inside;
    }
};

/// Evaluate a field descriptor at the cell centers of a level.
inline GridFunction discretize(const FieldSpec& f, const GridHierarchy& h, int level) {
    h.require_level(level);
    GridFunction g(h, level);
    for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] = f(h.cell_center(level, i), h.dim);
    return g;
}

}  // namespace mlmcopt

#endif
