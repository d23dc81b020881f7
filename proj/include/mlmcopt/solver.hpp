#ifndef MLMCOPT_SOLVER_HPP
#define MLMCOPT_SOLVER_HPP

#include "mlmcopt/operator.hpp"
#include "mlmcopt/problem.hpp"

namespace mlmcopt {

struct StateSolution {
    GridFunction y;
    int iterations = 0;     // Newton iterations (0 for the linear path)
    double residual = 0.0;  // relative residual of the discrete system
};

/// Linear state solve A y = h^d * beta .* u.
StateSolution solve_state(const DiscreteOperator& A, const GridFunction& u, const GridFunction& beta,
                          const GridHierarchy& h, const SolverOptions& opts = {});

/// Damped Newton iteration on A y + h^d f(y) = h^d beta .* u. Steps are halved
/// (up to 30 times) whenever the residual norm fails to decrease; more than 50
/// iterations is a hard error carrying the residual history.
StateSolution solve_state_nonlinear(const DiscreteOperator& A, const Reaction& reaction,
                                    const GridFunction& u, const GridFunction& beta,
                                    const GridHierarchy& h, const SolverOptions& opts = {});

/// Adjoint (or linearized) solve A' p = h^d * rhs; A' must already carry the
/// reaction Jacobian when the nonlinear term is active. For the linear model
/// A' = A and the state operator can be passed directly.
GridFunction solve_adjoint(const DiscreteOperator& Aprime, const GridFunction& rhs,
                           const GridHierarchy& h, const SolverOptions& opts = {});

/// A + h^d diag(f'(y)), the self-adjoint operator of the adjoint and
/// linearized equations at a nonlinear state.
DiscreteOperator linearized_operator(const DiscreteOperator& A, const Reaction& reaction,
                                     const GridFunction& y, const GridHierarchy& h);

}  // namespace mlmcopt

#endif
