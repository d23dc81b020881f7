#include "mlmcopt/solver.hpp"

#include <cmath>
#include <sstream>

namespace mlmcopt {

namespace {

double l2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

GridFunction scaled_mask_rhs(const GridFunction& u, const GridFunction& beta, double hd) {
    u.require_shape(beta, "solve_state");
    GridFunction rhs = u;
    for (std::size_t i = 0; i < rhs.values.size(); ++i) rhs.values[i] = hd * beta.values[i] * u.values[i];
    return rhs;
}

}  // namespace

StateSolution solve_state(const DiscreteOperator& A, const GridFunction& u, const GridFunction& beta,
                          const GridHierarchy& h, const SolverOptions& opts) {
    GridFunction rhs = scaled_mask_rhs(u, beta, h.cell_volume(u.level));
    StateSolution sol;
    sol.y = A.solve(rhs, opts);
    sol.residual = A.residual(sol.y, rhs);
    return sol;
}

StateSolution solve_state_nonlinear(const DiscreteOperator& A, const Reaction& reaction,
                                    const GridFunction& u, const GridFunction& beta,
                                    const GridHierarchy& h, const SolverOptions& opts) {
    if (!reaction.enabled()) return solve_state(A, u, beta, h, opts);
    const double hd = h.cell_volume(u.level);
    GridFunction rhs = scaled_mask_rhs(u, beta, hd);

    GridFunction y(h, u.level);
    auto residual_vec = [&](const GridFunction& yy) {
        GridFunction r = A.apply(yy);
        for (std::size_t i = 0; i < r.values.size(); ++i)
            r.values[i] += hd * reaction.f(yy.values[i]) - rhs.values[i];
        return r;
    };

    GridFunction r = residual_vec(y);
    double rnorm = l2(r.values);
    const double res_scale = std::max(rnorm, 1e-300);
    const double tol = 1e-10 * res_scale;
    std::vector<double> history{rnorm};

    int it = 0;
    for (; it < 50 && rnorm > tol; ++it) {
        DiscreteOperator jac = A;
        GridFunction fp(h, u.level);
        for (std::size_t i = 0; i < fp.values.size(); ++i) fp.values[i] = reaction.fp(y.values[i]);
        jac.add_diagonal(fp, hd);
        GridFunction neg_r = r;
        scale(neg_r, -1.0);
        GridFunction step = jac.solve(neg_r, opts);

        double s = 1.0;
        GridFunction y_try = y;
        double rnorm_try = rnorm;
        for (int halving = 0; halving <= 30; ++halving) {
            y_try = y;
            add_scaled(y_try, s, step);
            GridFunction r_try = residual_vec(y_try);
            rnorm_try = l2(r_try.values);
            if (rnorm_try < rnorm || halving == 30) {
                y = y_try;
                r = r_try;
                rnorm = rnorm_try;
                break;
            }
            s *= 0.5;
        }
        history.push_back(rnorm);
    }
    if (rnorm > tol) {
        std::ostringstream msg;
        msg << "solve_state_nonlinear: Newton did not converge within 50 iterations; residuals:";
        for (double v : history) msg << " " << v;
        throw std::runtime_error(msg.str());
    }

    StateSolution sol;
    sol.y = std::move(y);
    sol.iterations = it;
    sol.residual = rnorm / res_scale;
    return sol;
}

GridFunction solve_adjoint(const DiscreteOperator& Aprime, const GridFunction& rhs,
                           const GridHierarchy& h, const SolverOptions& opts) {
    GridFunction scaled_rhs = rhs;
    scale(scaled_rhs, h.cell_volume(rhs.level));
    return Aprime.solve(scaled_rhs, opts);
}

DiscreteOperator linearized_operator(const DiscreteOperator& A, const Reaction& reaction,
                                     const GridFunction& y, const GridHierarchy& h) {
    DiscreteOperator op = A;
    if (reaction.enabled()) {
        GridFunction fp(h, y.level);
        for (std::size_t i = 0; i < fp.values.size(); ++i) fp.values[i] = reaction.fp(y.values[i]);
        op.add_diagonal(fp, h.cell_volume(y.level));
    }
    return op;
}

}  // namespace mlmcopt
