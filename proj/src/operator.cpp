#include "mlmcopt/operator.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <cassert>

namespace mlmcopt {

namespace {

double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

}  // namespace

DiscreteOperator::DiscreteOperator(const GridFunction& k, const GridHierarchy& hierarchy)
    : level_(k.level), dim_(hierarchy.dim), m0_(hierarchy.m0) {
    hierarchy.require_level(k.level);
    if (k.values.size() != hierarchy.cell_count(k.level))
        throw std::invalid_argument("assemble: conductivity field has wrong size");
    for (double v : k.values)
        if (!(v > 0.0)) throw std::invalid_argument("assemble: conductivity must be strictly positive");

    const int m = hierarchy.cells_per_axis(level_);
    const double h = hierarchy.spacing(level_);
    // Transmissibility of an interior face: k_face * (face area) / (center
    // distance) = k_face * h^{d-2}. A boundary face has half the distance.
    const double tfac = std::pow(h, dim_ - 2);
    const std::size_t n = k.values.size();

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(n * (2 * dim_ + 1));
    std::vector<double> diag(n, 0.0);

    auto couple = [&](std::size_t a, std::size_t b) {
        double t = harmonic(k.values[a], k.values[b]) * tfac;
        diag[a] += t;
        diag[b] += t;
        trip.emplace_back(static_cast<int>(a), static_cast<int>(b), -t);
        trip.emplace_back(static_cast<int>(b), static_cast<int>(a), -t);
    };
    auto wall = [&](std::size_t a) { diag[a] += 2.0 * k.values[a] * tfac; };

    if (dim_ == 1) {
        for (int i = 0; i + 1 < m; ++i) couple(i, i + 1);
        wall(0);
        wall(static_cast<std::size_t>(m - 1));
    } else {
        for (int cy = 0; cy < m; ++cy) {
            for (int cx = 0; cx < m; ++cx) {
                std::size_t idx = static_cast<std::size_t>(cy) * m + cx;
                if (cx + 1 < m) couple(idx, idx + 1);
                if (cy + 1 < m) couple(idx, idx + static_cast<std::size_t>(m));
                if (cx == 0 || cx == m - 1) wall(idx);
                if (cy == 0 || cy == m - 1) wall(idx);
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) trip.emplace_back(static_cast<int>(i), static_cast<int>(i), diag[i]);

    matrix_.resize(static_cast<int>(n), static_cast<int>(n));
    matrix_.setFromTriplets(trip.begin(), trip.end());
#ifndef NDEBUG
    Eigen::SparseMatrix<double> t = matrix_.transpose();
    assert((matrix_ - t).coeffs().cwiseAbs().maxCoeff() < 1e-14);
#endif
}

GridFunction DiscreteOperator::make_field(double fill) const {
    GridFunction g;
    g.dim = dim_;
    g.m0 = m0_;
    g.level = level_;
    g.values.assign(size(), fill);
    return g;
}

void DiscreteOperator::add_diagonal(const GridFunction& w, double weight) {
    if (w.values.size() != size()) throw std::invalid_argument("add_diagonal: size mismatch");
    for (std::size_t i = 0; i < w.values.size(); ++i)
        matrix_.coeffRef(static_cast<int>(i), static_cast<int>(i)) += weight * w.values[i];
    factor_.reset();
}

GridFunction DiscreteOperator::solve(const GridFunction& rhs, const SolverOptions& opts) const {
    if (rhs.values.size() != size()) throw std::invalid_argument("solve: rhs size mismatch");
    Eigen::Map<const Eigen::VectorXd> b(rhs.values.data(), static_cast<long>(rhs.values.size()));
    GridFunction y = make_field();
    Eigen::VectorXd x;
    if (opts.backend == LinearBackend::direct) {
        if (!factor_) {
            factor_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
            factor_->compute(matrix_);
            if (factor_->info() != Eigen::Success)
                throw std::runtime_error("DiscreteOperator: factorization failed at level " +
                                         std::to_string(level_));
        }
        x = factor_->solve(b);
        // one step of iterative refinement keeps the residual contract intact
        // on badly conditioned realizations
        double bnorm = std::max(b.norm(), 1e-300);
        Eigen::VectorXd r = b - matrix_ * x;
        if (r.norm() > 1e-13 * bnorm) x += factor_->solve(r);
    } else {
        Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
        cg.setTolerance(opts.cg_tolerance);
        cg.compute(matrix_);
        x = cg.solve(b);
        if (cg.info() != Eigen::Success)
            throw std::runtime_error("DiscreteOperator: CG did not converge at level " +
                                     std::to_string(level_));
    }
    for (std::size_t i = 0; i < y.values.size(); ++i) y.values[i] = x[static_cast<long>(i)];
    if (opts.meter) opts.meter->add_solve(size());
    return y;
}

GridFunction DiscreteOperator::apply(const GridFunction& v) const {
    if (v.values.size() != size()) throw std::invalid_argument("apply: size mismatch");
    Eigen::Map<const Eigen::VectorXd> x(v.values.data(), static_cast<long>(v.values.size()));
    Eigen::VectorXd r = matrix_ * x;
    GridFunction out = make_field();
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = r[static_cast<long>(i)];
    return out;
}

double DiscreteOperator::residual(const GridFunction& y, const GridFunction& rhs) const {
    Eigen::Map<const Eigen::VectorXd> x(y.values.data(), static_cast<long>(y.values.size()));
    Eigen::Map<const Eigen::VectorXd> b(rhs.values.data(), static_cast<long>(rhs.values.size()));
    double denom = std::max(b.norm(), 1e-300);
    return (matrix_ * x - b).norm() / denom;
}

}  // namespace mlmcopt
