#ifndef MLMCOPT_OPERATOR_HPP
#define MLMCOPT_OPERATOR_HPP

#include <Eigen/Sparse>
#include <memory>

#include "mlmcopt/grid.hpp"

namespace mlmcopt {

/// Counts work in degrees-of-freedom units (cells per linear solve), the
/// machine-independent cost measure used for the tolerance-vs-cost law.
struct CostMeter {
    std::size_t solve_dofs = 0;
    std::size_t solves = 0;
    void add_solve(std::size_t dofs) {
        solve_dofs += dofs;
        ++solves;
    }
};

enum class LinearBackend { direct, cg };

struct SolverOptions {
    LinearBackend backend = LinearBackend::direct;
    double cg_tolerance = 1e-12;
    CostMeter* meter = nullptr;
};

/// Finite-volume discretization of -div(k grad .) on [0,1]^d with homogeneous
/// Dirichlet data, cell-centered, plus an optional diagonal reaction part.
/// The matrix is symmetric positive definite for any strictly positive k.
/// Face conductances use the harmonic mean of the adjacent cell values;
/// boundary faces see the wall at distance h/2.
class DiscreteOperator {
public:
    /// Assemble from a conductivity field at its level.
    DiscreteOperator(const GridFunction& k, const GridHierarchy& hierarchy);

    // Copies drop the cached factorization.
    DiscreteOperator(const DiscreteOperator& other)
        : level_(other.level_), dim_(other.dim_), m0_(other.m0_), matrix_(other.matrix_) {}
    DiscreteOperator& operator=(const DiscreteOperator& other) {
        level_ = other.level_;
        dim_ = other.dim_;
        m0_ = other.m0_;
        matrix_ = other.matrix_;
        factor_.reset();
        return *this;
    }
    DiscreteOperator(DiscreteOperator&&) = default;
    DiscreteOperator& operator=(DiscreteOperator&&) = default;

    int level() const { return level_; }
    std::size_t size() const { return static_cast<std::size_t>(matrix_.rows()); }
    const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }

    /// Add a pointwise reaction Jacobian h^d * diag(w); invalidates any
    /// previous factorization.
    void add_diagonal(const GridFunction& w, double weight);

    /// y = A^{-1} rhs. Factorizes lazily on first use.
    GridFunction solve(const GridFunction& rhs, const SolverOptions& opts = {}) const;

    /// v -> A v.
    GridFunction apply(const GridFunction& v) const;

    /// Relative residual ||A y - rhs|| / max(||rhs||, tiny).
    double residual(const GridFunction& y, const GridFunction& rhs) const;

private:
    int level_ = 0;
    int dim_ = 2;
    int m0_ = 8;
    Eigen::SparseMatrix<double> matrix_;
    mutable std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> factor_;

    GridFunction make_field(double fill = 0.0) const;
};

}  // namespace mlmcopt

#endif
