#include <doctest.h>

#include <cmath>
#include <random>

#include "mlmcopt/stats.hpp"

using namespace mlmcopt;

TEST_CASE("v_hat1 and its chain gradient on the two-sample surrogate") {
    std::vector<double> y{1.0, 3.0};
    CHECK(v_hat1(y) == doctest::Approx(2.0));

    auto g = v_hat1_gradient_chain(y);
    CHECK(g[0] == doctest::Approx(-4.0));
    CHECK(g[1] == doctest::Approx(4.0));
    CHECK(g[0] + g[1] == doctest::Approx(0.0));

    // finite difference of ||sqrt(V1)||^2 in the (.,.)_{D,Omega0} sense:
    // d/dy_j V1 = g_j / n
    const double d = 1e-6;
    for (std::size_t j = 0; j < y.size(); ++j) {
        auto hi = y, lo = y;
        hi[j] += d;
        lo[j] -= d;
        double fd = (v_hat1(hi) - v_hat1(lo)) / (2.0 * d);
        CHECK(fd == doctest::Approx(g[j] / 2.0).epsilon(1e-6));
    }
}

TEST_CASE("v_hat1 is unbiased with variance 3/n on standard normals") {
    const int n = 32;
    const int reps = 100000;
    std::mt19937 gen(2718);
    std::normal_distribution<double> normal(0.0, 1.0);
    double s = 0.0, s2 = 0.0;
    std::vector<double> y(n);
    for (int r = 0; r < reps; ++r) {
        for (double& v : y) v = normal(gen);
        double est = v_hat1(y);
        s += est;
        s2 += est * est;
    }
    double mean = s / reps;
    double var = s2 / reps - mean * mean;
    double se = std::sqrt(3.0 / n / reps);
    CHECK(std::abs(mean - 1.0) < 4.0 * se);
    CHECK(var == doctest::Approx(3.0 / n).epsilon(0.05));
}

TEST_CASE("two-set estimator is unbiased with variance 2/n") {
    const int n = 32;
    const int reps = 100000;
    std::mt19937 gen(577);
    std::normal_distribution<double> normal(0.0, 1.0);
    double s = 0.0, s2 = 0.0;
    std::vector<double> a(n), b(n);
    for (int r = 0; r < reps; ++r) {
        for (double& v : a) v = normal(gen);
        for (double& v : b) v = normal(gen);
        double est = v_hat_twoset(a, b);
        s += est;
        s2 += est * est;
    }
    double mean = s / reps;
    double var = s2 / reps - mean * mean;
    double se = std::sqrt(2.0 / n / reps);
    CHECK(std::abs(mean - 1.0) < 4.0 * se);
    CHECK(var == doctest::Approx(2.0 / n).epsilon(0.05));
}

TEST_CASE("corrected variance applies the floor and the covariance shift") {
    GridHierarchy h{2, 1, 0};
    LevelStats st;
    st.count = 16;
    st.variance = GridFunction(h, 0, 1.0);
    st.cov_lag1 = GridFunction(h, 0, -0.2);
    st.cov_lag2 = GridFunction(h, 0, -0.1);
    GridFunction c = corrected_variance(st);
    CHECK(c.values[0] == doctest::Approx(0.5));  // 0.4 floored at 0.5

    st.cov_lag1 = GridFunction(h, 0, 0.1);
    st.cov_lag2 = GridFunction(h, 0, 0.0);
    c = corrected_variance(st);
    CHECK(c.values[0] == doctest::Approx(1.2));

    st.cov_lag1 = GridFunction(h, 0, 0.0);
    c = corrected_variance(st);
    CHECK(c.values[0] == doctest::Approx(1.0));

    st.count = 1;
    CHECK_THROWS_AS((void)corrected_variance(st), std::invalid_argument);
}

TEST_CASE("sample allocation follows the Lagrange formula") {
    GridHierarchy h{2, 1, 0};  // one-cell-free tiny grid: 2 cells
    SUBCASE("single level") {
        std::vector<GridFunction> v{GridFunction(h, 0, 1.0)};
        auto n = allocate_samples(v, {1.0}, {0}, std::sqrt(2.0), 0.5);
        CHECK(n[0] == 1);
    }
    SUBCASE("two levels hit the budget exactly") {
        std::vector<GridFunction> v{GridFunction(h, 0, 1.0), GridFunction(h, 0, 0.25)};
        auto n = allocate_samples(v, {1.0, 4.0}, {0, 0}, 1.0, 0.5);
        CHECK(n[0] == 4);
        CHECK(n[1] == 1);
        // achieved stochastic error
        double err = 1.0 / n[0] + 0.25 / n[1];
        CHECK(err == doctest::Approx(0.5));
    }
    SUBCASE("zero variance keeps the warm-up count") {
        std::vector<GridFunction> v{GridFunction(h, 0, 0.0)};
        auto n = allocate_samples(v, {1.0}, {20}, 0.1, 0.5);
        CHECK(n[0] == 20);
    }
    SUBCASE("zero cost is a hard error") {
        std::vector<GridFunction> v{GridFunction(h, 0, 1.0)};
        CHECK_THROWS_AS((void)allocate_samples(v, {0.0}, {0}, 1.0, 0.5), std::invalid_argument);
    }
}

TEST_CASE("rho and bias estimation") {
    RhoBias two = estimate_rho_bias({0.4, 0.1});
    CHECK(two.rho == doctest::Approx(2.0));
    CHECK(two.bias_bound == doctest::Approx(0.1 / 3.0));

    RhoBias rho1 = estimate_rho_bias({0.2, 0.1});
    CHECK(rho1.rho == doctest::Approx(1.0));
    CHECK(rho1.bias_bound == doctest::Approx(0.1));

    RhoBias flat = estimate_rho_bias({0.1, 0.2});
    CHECK(flat.no_decay);

    RhoBias single = estimate_rho_bias({0.25});
    CHECK(single.rho == doctest::Approx(1.0));
    CHECK(single.bias_bound == doctest::Approx(0.25));
}

TEST_CASE("level accumulator reproduces the direct circular statistics") {
    GridHierarchy h{4, 1, 0};
    std::mt19937 gen(99);
    std::normal_distribution<double> normal(0.5, 2.0);
    const int n = 37;
    std::vector<GridFunction> samples;
    LevelAccumulator acc;
    for (int j = 0; j < n; ++j) {
        GridFunction y(h, 0);
        for (double& v : y.values) v = normal(gen);
        samples.push_back(y);
        acc.push(y);
    }
    LevelStats st = acc.finalize(0);
    REQUIRE(st.count == n);

    for (std::size_t x = 0; x < h.cell_count(0); ++x) {
        double mu = 0.0;
        for (const auto& s : samples) mu += s.values[x];
        mu /= n;
        double var = 0.0, c1 = 0.0, c2 = 0.0;
        for (int j = 0; j < n; ++j) {
            double a = samples[static_cast<std::size_t>(j)].values[x] - mu;
            double b1 = samples[static_cast<std::size_t>((j + 1) % n)].values[x] - mu;
            double b2 = samples[static_cast<std::size_t>((j + 2) % n)].values[x] - mu;
            var += a * a;
            c1 += a * b1;
            c2 += a * b2;
        }
        CHECK(st.mean.values[x] == doctest::Approx(mu).epsilon(1e-12));
        CHECK(st.variance.values[x] == doctest::Approx(var / (n - 1)).epsilon(1e-10));
        CHECK(st.cov_lag1.values[x] == doctest::Approx(c1 / (n - 1)).epsilon(1e-10));
        CHECK(st.cov_lag2.values[x] == doctest::Approx(c2 / (n - 1)).epsilon(1e-10));
    }
}

TEST_CASE("robust and average cost forms coincide when gamma' = 1 + gamma") {
    GridHierarchy h{4, 2, 0};
    std::mt19937 gen(123);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 3 + trial % 7;
        std::vector<GridFunction> states;
        for (int j = 0; j < n; ++j) {
            GridFunction y(h, 0);
            for (double& v : y.values) v = normal(gen);
            states.push_back(y);
        }
        GridFunction target(h, 0, 0.7);
        GridFunction control(h, 0);
        for (double& v : control.values) v = normal(gen);
        double gamma = 0.25 * trial;
        double rob = robust_cost(states, target, control, 1e-4, gamma);
        double avg = average_cost(states, target, control, 1e-4, 1.0 + gamma);
        CHECK(rob == doctest::Approx(avg).epsilon(1e-12));
    }
}
