#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "mlmcopt/operator.hpp"
#include "mlmcopt/solver.hpp"

using namespace mlmcopt;

namespace {

GridFunction random_positive_field(const GridHierarchy& h, int level, std::mt19937& gen) {
    std::uniform_real_distribution<double> dist(0.2, 5.0);
    GridFunction g(h, level);
    for (double& v : g.values) v = dist(gen);
    return g;
}

GridFunction random_field(const GridHierarchy& h, int level, std::mt19937& gen) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    GridFunction g(h, level);
    for (double& v : g.values) v = dist(gen);
    return g;
}

}  // namespace

TEST_CASE("two-cell 1D assembly matches the hand computation") {
    GridHierarchy h{2, 1, 0};
    GridFunction k(h, 0, 1.0);
    DiscreteOperator A(k, h);

    GridFunction e0(h, 0), e1(h, 0);
    e0.values = {1.0, 0.0};
    e1.values = {0.0, 1.0};
    GridFunction c0 = A.apply(e0);
    GridFunction c1 = A.apply(e1);
    CHECK(c0.values[0] == doctest::Approx(6.0));
    CHECK(c0.values[1] == doctest::Approx(-2.0));
    CHECK(c1.values[0] == doctest::Approx(-2.0));
    CHECK(c1.values[1] == doctest::Approx(6.0));

    // A y = (1/2) u and the solution for u = 1
    GridFunction u(h, 0, 1.0);
    GridFunction beta(h, 0, 1.0);
    StateSolution sol = solve_state(A, u, beta, h);
    CHECK(sol.y.values[0] == doctest::Approx(0.125));
    CHECK(sol.y.values[1] == doctest::Approx(0.125));
    CHECK(sol.residual < 1e-10);
}

TEST_CASE("assembly is linear in a constant conductivity") {
    GridHierarchy h{4, 2, 0};
    std::mt19937 gen(3);
    GridFunction k1(h, 0, 1.0);
    GridFunction kc(h, 0, 3.25);
    DiscreteOperator A1(k1, h);
    DiscreteOperator Ac(kc, h);
    GridFunction v = random_field(h, 0, gen);
    GridFunction a1 = A1.apply(v);
    GridFunction ac = Ac.apply(v);
    for (std::size_t i = 0; i < a1.values.size(); ++i)
        CHECK(ac.values[i] == doctest::Approx(3.25 * a1.values[i]).epsilon(1e-13));
}

TEST_CASE("assembled operator is symmetric positive definite") {
    std::mt19937 gen(17);
    for (int dim : {1, 2}) {
        GridHierarchy h{dim == 1 ? 8 : 4, dim, 0};
        GridFunction k = random_positive_field(h, 0, gen);
        DiscreteOperator A(k, h);
        Eigen::MatrixXd dense = Eigen::MatrixXd(A.matrix());
        CHECK((dense - dense.transpose()).cwiseAbs().maxCoeff() < 1e-14);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() > 0.0);
    }
}

TEST_CASE("assembly rejects nonpositive conductivity") {
    GridHierarchy h{2, 1, 0};
    GridFunction k(h, 0, 1.0);
    k.values[1] = 0.0;
    CHECK_THROWS_AS((DiscreteOperator{k, h}), std::invalid_argument);
}

TEST_CASE("zero source gives the zero state") {
    GridHierarchy h{8, 2, 0};
    std::mt19937 gen(5);
    GridFunction k = random_positive_field(h, 0, gen);
    DiscreteOperator A(k, h);
    GridFunction u(h, 0, 0.0);
    GridFunction beta(h, 0, 1.0);
    StateSolution sol = solve_state(A, u, beta, h);
    for (double v : sol.y.values) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("manufactured solution converges at second order") {
    GridHierarchy h{8, 2, 3};
    const double pi = 3.14159265358979323846;
    std::vector<double> errors;
    for (int level = 0; level <= 3; ++level) {
        GridFunction k(h, level, 1.0);
        DiscreteOperator A(k, h);
        GridFunction u(h, level), exact(h, level), beta(h, level, 1.0);
        for (std::size_t i = 0; i < u.values.size(); ++i) {
            auto x = h.cell_center(level, i);
            exact.values[i] = std::sin(pi * x[0]) * std::sin(pi * x[1]);
            u.values[i] = 2.0 * pi * pi * exact.values[i];
        }
        StateSolution sol = solve_state(A, u, beta, h);
        add_scaled(sol.y, -1.0, exact);
        errors.push_back(norm(sol.y));
    }
    // least squares slope of log2(error) against level
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < 4; ++i) {
        double x = i, y = std::log2(errors[static_cast<std::size_t>(i)]);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    double slope = (4 * sxy - sx * sy) / (4 * sxx - sx * sx);
    double order = -slope;
    CHECK(order == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("disabled reaction falls back to the linear solve") {
    GridHierarchy h{4, 2, 0};
    std::mt19937 gen(23);
    GridFunction k = random_positive_field(h, 0, gen);
    DiscreteOperator A(k, h);
    GridFunction u = random_field(h, 0, gen);
    GridFunction beta(h, 0, 1.0);
    StateSolution lin = solve_state(A, u, beta, h);
    StateSolution non = solve_state_nonlinear(A, Reaction{}, u, beta, h);
    for (std::size_t i = 0; i < lin.y.values.size(); ++i)
        CHECK(non.y.values[i] == doctest::Approx(lin.y.values[i]).epsilon(1e-10));
}

TEST_CASE("linear reaction equals the direct shifted solve") {
    GridHierarchy h{2, 1, 0};
    GridFunction k(h, 0, 1.0);
    DiscreteOperator A(k, h);
    GridFunction u(h, 0);
    u.values = {1.0, -2.0};
    GridFunction beta(h, 0, 1.0);

    StateSolution newton = solve_state_nonlinear(A, Reaction::parse("linear"), u, beta, h);

    DiscreteOperator shifted = A;
    GridFunction ones(h, 0, 1.0);
    shifted.add_diagonal(ones, h.cell_volume(0));
    StateSolution direct = solve_state(shifted, u, beta, h);
    for (std::size_t i = 0; i < 2; ++i)
        CHECK(newton.y.values[i] == doctest::Approx(direct.y.values[i]).epsilon(1e-10));
}

TEST_CASE("exponential reaction with zero source has a negative state") {
    GridHierarchy h{8, 2, 0};
    std::mt19937 gen(29);
    GridFunction k = random_positive_field(h, 0, gen);
    DiscreteOperator A(k, h);
    GridFunction u(h, 0, 0.0);
    GridFunction beta(h, 0, 1.0);
    StateSolution sol = solve_state_nonlinear(A, Reaction::parse("exp"), u, beta, h);
    CHECK(sol.residual <= 1e-10);
    for (double v : sol.y.values) CHECK(v < 0.0);
}

TEST_CASE("zero right-hand side gives the zero adjoint") {
    GridHierarchy h{4, 2, 0};
    std::mt19937 gen(31);
    GridFunction k = random_positive_field(h, 0, gen);
    DiscreteOperator A(k, h);
    GridFunction rhs(h, 0, 0.0);
    GridFunction p = solve_adjoint(A, rhs, h);
    for (double v : p.values) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("state and adjoint solves are mutually adjoint") {
    GridHierarchy h{8, 2, 0};
    std::mt19937 gen(37);
    for (int probe = 0; probe < 10; ++probe) {
        GridFunction k = random_positive_field(h, 0, gen);
        DiscreteOperator A(k, h);
        GridFunction u = random_field(h, 0, gen);
        GridFunction r = random_field(h, 0, gen);
        GridFunction beta(h, 0, 1.0);
        StateSolution sol = solve_state(A, u, beta, h);
        GridFunction p = solve_adjoint(A, r, h);
        double lhs = inner_product(sol.y, r);
        GridFunction bu = u;
        for (std::size_t i = 0; i < bu.values.size(); ++i) bu.values[i] *= beta.values[i];
        double rhs_v = inner_product(bu, p);
        CHECK(lhs == doctest::Approx(rhs_v).epsilon(1e-10));
    }
}

TEST_CASE("single-realization hessian map is linear and symmetric") {
    GridHierarchy h{4, 2, 0};
    std::mt19937 gen(41);
    GridFunction k = random_positive_field(h, 0, gen);
    DiscreteOperator A(k, h);
    GridFunction beta(h, 0, 1.0);
    const double alpha = 1e-3;

    auto hess = [&](const GridFunction& du) {
        // gamma = 0, single realization: dp solves A dp = h^d * 2 dy
        StateSolution dy = solve_state(A, du, beta, h);
        GridFunction rhs = dy.y;
        scale(rhs, 2.0);
        GridFunction dp = solve_adjoint(A, rhs, h);
        GridFunction out = du;
        scale(out, 2.0 * alpha);
        for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += beta.values[i] * dp.values[i];
        return out;
    };

    GridFunction zero(h, 0, 0.0);
    GridFunction hz = hess(zero);
    for (double v : hz.values) CHECK(v == doctest::Approx(0.0));

    GridFunction du = random_field(h, 0, gen);
    GridFunction h1 = hess(du);
    GridFunction du3 = du;
    scale(du3, 3.0);
    GridFunction h3 = hess(du3);
    for (std::size_t i = 0; i < h1.values.size(); ++i)
        CHECK(h3.values[i] == doctest::Approx(3.0 * h1.values[i]).epsilon(1e-12));

    for (int probe = 0; probe < 5; ++probe) {
        GridFunction a = random_field(h, 0, gen);
        GridFunction b = random_field(h, 0, gen);
        CHECK(inner_product(hess(a), b) == doctest::Approx(inner_product(a, hess(b))).epsilon(1e-10));
    }
}

TEST_CASE("iterative backend agrees with the direct factorization") {
    GridHierarchy h{8, 2, 0};
    std::mt19937 gen(43);
    GridFunction k = random_positive_field(h, 0, gen);
    DiscreteOperator A(k, h);
    GridFunction u = random_field(h, 0, gen);
    GridFunction beta(h, 0, 1.0);
    SolverOptions cg;
    cg.backend = LinearBackend::cg;
    StateSolution direct = solve_state(A, u, beta, h);
    StateSolution iter = solve_state(A, u, beta, h, cg);
    for (std::size_t i = 0; i < direct.y.values.size(); ++i)
        CHECK(iter.y.values[i] == doctest::Approx(direct.y.values[i]).epsilon(1e-8));
}
