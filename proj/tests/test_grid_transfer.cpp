#include <doctest.h>

#include <cmath>
#include <random>

#include "mlmcopt/grid.hpp"
#include "mlmcopt/transfer.hpp"

using namespace mlmcopt;

namespace {

GridFunction random_field(const GridHierarchy& h, int level, std::mt19937& gen) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    GridFunction g(h, level);
    for (double& v : g.values) v = dist(gen);
    return g;
}

// Explicit prolongation matrix built by probing unit vectors.
std::vector<std::vector<double>> prolong_matrix(const GridHierarchy& h, int level) {
    std::size_t nc = h.cell_count(level);
    std::size_t nf = h.cell_count(level + 1);
    std::vector<std::vector<double>> P(nf, std::vector<double>(nc, 0.0));
    for (std::size_t j = 0; j < nc; ++j) {
        GridFunction e(h, level);
        e.values[j] = 1.0;
        GridFunction col = prolong(e, h);
        for (std::size_t i = 0; i < nf; ++i) P[i][j] = col.values[i];
    }
    return P;
}

}  // namespace

TEST_CASE("inner product matches the mean-weighted dot product") {
    GridHierarchy h{2, 1, 3};
    GridFunction ones(h, 2, 1.0);
    CHECK(inner_product(ones, ones) == doctest::Approx(1.0));

    GridFunction a(h, 0), b(h, 0);
    a.values = {1.0, 3.0};
    b.values = {2.0, 0.0};
    CHECK(inner_product(a, b) == doctest::Approx(1.0));

    // constants keep unit norm on every level
    GridFunction ones0(h, 0, 1.0);
    CHECK(norm(ones0) == doctest::Approx(1.0));
    CHECK(norm(prolong(ones0, h)) == doctest::Approx(1.0));
}

TEST_CASE("inner product rejects level mismatch") {
    GridHierarchy h{2, 1, 2};
    GridFunction a(h, 0), b(h, 1);
    CHECK_THROWS_AS((void)inner_product(a, b), std::invalid_argument);
}

TEST_CASE("1D prolongation interpolates with linear boundary extrapolation") {
    GridHierarchy h{2, 1, 1};
    GridFunction c(h, 0, 1.0);
    GridFunction cf = prolong(c, h);
    for (double v : cf.values) CHECK(v == doctest::Approx(1.0));

    // hand evaluation: coarse centers 1/4, 3/4 carry (0,1); the straight line
    // through them is 2x - 1/2 at the fine centers 1/8, 3/8, 5/8, 7/8
    GridFunction v(h, 0);
    v.values = {0.0, 1.0};
    GridFunction f = prolong(v, h);
    REQUIRE(f.values.size() == 4);
    CHECK(f.values[0] == doctest::Approx(-0.25));
    CHECK(f.values[1] == doctest::Approx(0.25));
    CHECK(f.values[2] == doctest::Approx(0.75));
    CHECK(f.values[3] == doctest::Approx(1.25));
}

TEST_CASE("prolongation reproduces linear profiles exactly on every level") {
    GridHierarchy h1{4, 1, 2};
    GridFunction lin(h1, 0);
    for (std::size_t i = 0; i < lin.values.size(); ++i)
        lin.values[i] = 0.3 + 1.7 * h1.cell_center(0, i)[0];
    GridFunction f = prolong(prolong(lin, h1), h1);
    for (std::size_t i = 0; i < f.values.size(); ++i)
        CHECK(f.values[i] == doctest::Approx(0.3 + 1.7 * h1.cell_center(2, i)[0]).epsilon(1e-14));

    GridHierarchy h2{4, 2, 1};
    GridFunction plane(h2, 0);
    for (std::size_t i = 0; i < plane.values.size(); ++i) {
        auto x = h2.cell_center(0, i);
        plane.values[i] = 1.0 - 0.4 * x[0] + 2.2 * x[1];
    }
    GridFunction pf = prolong(plane, h2);
    for (std::size_t i = 0; i < pf.values.size(); ++i) {
        auto x = h2.cell_center(1, i);
        CHECK(pf.values[i] == doctest::Approx(1.0 - 0.4 * x[0] + 2.2 * x[1]).epsilon(1e-14));
    }
}

TEST_CASE("2D prolongation preserves constants; round trip is constant inside") {
    GridHierarchy h{8, 2, 2};
    GridFunction c(h, 0, 3.5);
    GridFunction cf = prolong(c, h);
    for (double v : cf.values) CHECK(v == doctest::Approx(3.5));
    // restriction is the scaled transpose, so the round trip reproduces the
    // constant away from the two-cell extrapolation band at the boundary
    GridFunction back = restrict(cf, h);
    int m = h.cells_per_axis(0);
    for (int cy = 2; cy + 2 < m; ++cy)
        for (int cx = 2; cx + 2 < m; ++cx)
            CHECK(back.values[static_cast<std::size_t>(cy) * m + cx] == doctest::Approx(3.5));
}

TEST_CASE("adjoint identity holds to 1e-12 on random probes, both dimensions") {
    std::mt19937 gen(817);
    for (int dim : {1, 2}) {
        GridHierarchy h{4, dim, 4};
        for (int level = 0; level < h.finest_level; ++level) {
            for (int probe = 0; probe < 100; ++probe) {
                GridFunction v = random_field(h, level, gen);
                GridFunction w = random_field(h, level + 1, gen);
                double lhs = inner_product(prolong(v, h), w);
                double rhs = inner_product(v, restrict(w, h));
                CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("restriction is the scaled transpose of prolongation, entry by entry") {
    GridHierarchy h{4, 1, 1};
    auto P = prolong_matrix(h, 0);
    double c = h.transfer_constant();
    std::size_t nf = h.cell_count(1);
    std::size_t nc = h.cell_count(0);
    for (std::size_t i = 0; i < nf; ++i) {
        GridFunction e(h, 1);
        e.values[i] = 1.0;
        GridFunction r = restrict(e, h);
        for (std::size_t j = 0; j < nc; ++j) CHECK(r.values[j] == doctest::Approx(P[i][j] / c));
    }

    // spot check the fine indicator from a 4-cell fine grid on m0=2: the
    // first fine cell prolongates from (1.25, -0.25), so its transposed
    // restriction scatters (1.25, -0.25)/2
    GridHierarchy h2{2, 1, 1};
    GridFunction ind(h2, 1);
    ind.values = {1.0, 0.0, 0.0, 0.0};
    GridFunction r = restrict(ind, h2);
    CHECK(r.values[0] == doctest::Approx(0.625));
    CHECK(r.values[1] == doctest::Approx(-0.125));
}

TEST_CASE("transfer composes single-level hops and is the identity in place") {
    std::mt19937 gen(5);
    GridHierarchy h{4, 2, 2};
    GridFunction v = random_field(h, 0, gen);
    GridFunction same = transfer(v, 0, h);
    CHECK(same.values == v.values);

    GridFunction up = transfer(v, 2, h);
    GridFunction up_manual = prolong(prolong(v, h), h);
    for (std::size_t i = 0; i < up.values.size(); ++i)
        CHECK(up.values[i] == doctest::Approx(up_manual.values[i]));

    GridFunction w = random_field(h, 2, gen);
    GridFunction down = transfer(w, 0, h);
    GridFunction down_manual = restrict(restrict(w, h), h);
    for (std::size_t i = 0; i < down.values.size(); ++i)
        CHECK(down.values[i] == doctest::Approx(down_manual.values[i]));
}

TEST_CASE("inner-product factor identity c^l m_L^d = c^L m_l^d") {
    for (int dim : {1, 2}) {
        GridHierarchy h{8, dim, 5};
        double c = h.transfer_constant();
        double mLd = std::pow(h.cells_per_axis(h.finest_level), dim);
        for (int l = 0; l <= h.finest_level; ++l) {
            double mld = std::pow(h.cells_per_axis(l), dim);
            double ratio = std::pow(c, l) * mLd / (std::pow(c, h.finest_level) * mld);
            CHECK(ratio == doctest::Approx(1.0).epsilon(1e-14));
        }
    }
}

TEST_CASE("prolong and restrict enforce hierarchy bounds") {
    GridHierarchy h{2, 1, 1};
    GridFunction top(h, 1, 1.0);
    CHECK_THROWS_AS((void)prolong(top, h), std::invalid_argument);
    GridFunction bottom(h, 0, 1.0);
    CHECK_THROWS_AS((void)restrict(bottom, h), std::invalid_argument);
}
