#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "mlmcopt/covariance.hpp"
#include "mlmcopt/sampling.hpp"

using namespace mlmcopt;

namespace {

// Nystrom oracle: discretize C(x,y) = exp(-|x-y|/lambda) on an N-point
// midpoint grid and take the dominant eigenvalue of (1/N) C by power
// iteration with Rayleigh quotients.
double nystrom_top_eigenvalue(double lambda, int n) {
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = (i + 0.5) / n;
    std::vector<double> v(n, 1.0), w(n);
    double prev = 0.0;
    for (int it = 0; it < 500; ++it) {
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += std::exp(-std::abs(x[i] - x[j]) / lambda) * v[j];
            w[i] = s / n;
        }
        double num = 0.0, den = 0.0, nrm = 0.0;
        for (int i = 0; i < n; ++i) {
            num += v[i] * w[i];
            den += v[i] * v[i];
            nrm += w[i] * w[i];
        }
        double mu = num / den;
        nrm = std::sqrt(nrm);
        for (int i = 0; i < n; ++i) v[i] = w[i] / nrm;
        if (it > 3 && std::abs(mu - prev) < 1e-11 * std::abs(mu)) return mu;
        prev = mu;
    }
    return prev;
}

}  // namespace

TEST_CASE("leading 1D eigenvalue matches the Nystrom oracle to 4 digits") {
    auto pairs = solve_1d_eigenpairs(0.3, 10);
    double oracle = nystrom_top_eigenvalue(0.3, 2048);
    CHECK(pairs[0].eigenvalue == doctest::Approx(oracle).epsilon(5e-4));
}

TEST_CASE("1D eigenvalues are strictly descending, positive, and trace to 1") {
    auto pairs = solve_1d_eigenpairs(0.3, 2000);
    double sum = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        CHECK(pairs[i].eigenvalue > 0.0);
        if (i > 0) CHECK(pairs[i].eigenvalue < pairs[i - 1].eigenvalue);
        sum += pairs[i].eigenvalue;
        CHECK(sum <= 1.0 + 1e-12);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(5e-4));

    // partial sums approach the trace monotonically
    double sum500 = 0.0;
    for (int i = 0; i < 500; ++i) sum500 += pairs[i].eigenvalue;
    CHECK(sum500 < sum);
}

TEST_CASE("1D eigenfunctions have unit L2 norm") {
    auto pairs = solve_1d_eigenpairs(0.3, 6);
    const int n = 20000;
    for (const auto& ep : pairs) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            double f = ep.evaluate((i + 0.5) / n);
            s += f * f;
        }
        CHECK(s / n == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("eigenvalues scale linearly in sigma2") {
    CovarianceSpec s1{1.0, 0.3, 1, 20};
    CovarianceSpec s2{2.0, 0.3, 1, 20};
    KLBasis b1 = build_basis(s1);
    KLBasis b2 = build_basis(s2);
    for (int i = 0; i < 20; ++i) CHECK(b2.terms[i].theta == doctest::Approx(2.0 * b1.terms[i].theta));
}

TEST_CASE("1D basis with one term is the largest eigenpair") {
    CovarianceSpec spec{0.7, 0.3, 1, 1};
    KLBasis b = build_basis(spec);
    auto pairs = solve_1d_eigenpairs(0.3, 1);
    REQUIRE(b.terms.size() == 1);
    CHECK(b.terms[0].theta == doctest::Approx(0.7 * pairs[0].eigenvalue));
    CHECK(b.terms[0].factor_x == 0);
}

TEST_CASE("2D basis equals the brute-force product enumeration") {
    CovarianceSpec spec{1.0, 0.3, 2, 4};
    KLBasis b = build_basis(spec);
    auto pairs = solve_1d_eigenpairs(0.3, 12);
    std::vector<double> products;
    for (const auto& a : pairs)
        for (const auto& c : pairs) products.push_back(a.eigenvalue * c.eigenvalue);
    std::sort(products.rbegin(), products.rend());
    REQUIRE(b.terms.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(b.terms[i].theta == doctest::Approx(products[i]).epsilon(1e-12));
}

TEST_CASE("500-term 2D basis captures 92-96 percent of the variance") {
    CovarianceSpec spec{1.0, 0.3, 2, 500};
    KLBasis b = build_basis(spec);
    double captured = b.capture_fraction();
    CHECK(captured >= 0.92);
    CHECK(captured <= 0.96);
}

TEST_CASE("insufficient explicit 1D pool is a hard error") {
    CovarianceSpec spec{1.0, 0.3, 2, 500};
    CHECK_THROWS_AS((void)build_basis(spec, 12), std::runtime_error);
}

TEST_CASE("coverage certification reflects the pool bound") {
    CovarianceSpec spec{1.0, 0.3, 2, 4};
    CHECK(build_basis(spec, 32).coverage_certified);
    CHECK_FALSE(build_basis(spec, 2).coverage_certified);
}

TEST_CASE("xi vectors are deterministic and order independent") {
    SampleKey key{1234567ULL, 42ULL};
    auto a = xi_vector(key, 64);
    auto b = xi_vector(key, 64);
    CHECK(a == b);
    auto c = xi_vector({1234567ULL, 43ULL}, 64);
    CHECK(a != c);
}

TEST_CASE("gaussian field is the truncated series on every level") {
    CovarianceSpec spec{0.5, 0.3, 2, 40};
    GridHierarchy h{4, 2, 3};
    FieldSampler sampler(build_basis(spec), h);
    SampleKey key{99ULL, 7ULL};
    auto xi = xi_vector(key, spec.n_kl);
    for (int level : {0, 3}) {
        GridFunction z = sampler.gaussian(key, level);
        for (std::size_t i = 0; i < z.values.size(); i += 3) {
            auto x = h.cell_center(level, i);
            double direct = 0.0;
            for (std::size_t n = 0; n < sampler.basis().terms.size(); ++n)
                direct += std::sqrt(sampler.basis().terms[n].theta) * xi[n] *
                          sampler.basis().evaluate_term(n, x);
            CHECK(z.values[i] == doctest::Approx(direct).epsilon(1e-12));
        }
    }
}

TEST_CASE("sample moments reproduce the truncated series statistics") {
    CovarianceSpec spec{1.0, 0.3, 2, 100};
    GridHierarchy h{8, 2, 0};
    FieldSampler sampler(build_basis(spec), h);
    const int reps = 100000;

    std::size_t ix = 27;  // fixed cell
    auto x = h.cell_center(0, ix);
    double expected_var = sampler.basis().truncated_variance(x);

    double s = 0.0, s2 = 0.0;
    for (int r = 0; r < reps; ++r) {
        GridFunction z = sampler.gaussian({2024ULL, static_cast<std::uint64_t>(r)}, 0);
        double v = z.values[ix];
        s += v;
        s2 += v * v;
    }
    double mean = s / reps;
    double var = s2 / reps - mean * mean;
    double se_mean = std::sqrt(expected_var / reps);
    CHECK(std::abs(mean) < 4.0 * se_mean);
    CHECK(var == doctest::Approx(expected_var).epsilon(0.05));
}

TEST_CASE("empirical covariance matches the truncated series at point pairs") {
    CovarianceSpec spec{1.0, 0.3, 2, 100};
    GridHierarchy h{8, 2, 0};
    FieldSampler sampler(build_basis(spec), h);
    const KLBasis& basis = sampler.basis();
    const int reps = 100000;

    // pick 10 nearby pairs so the covariance stays well away from zero
    std::mt19937 gen(31);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(h.cell_count(0)) - 1);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    while (pairs.size() < 10) {
        std::size_t a = static_cast<std::size_t>(pick(gen));
        std::size_t b = static_cast<std::size_t>(pick(gen));
        auto xa = h.cell_center(0, a);
        auto xb = h.cell_center(0, b);
        double dist = std::abs(xa[0] - xb[0]) + std::abs(xa[1] - xb[1]);
        if (a != b && dist <= 0.3) pairs.emplace_back(a, b);
    }

    std::vector<double> sa(10, 0.0), sb(10, 0.0), sab(10, 0.0);
    for (int r = 0; r < reps; ++r) {
        GridFunction z = sampler.gaussian({77ULL, static_cast<std::uint64_t>(r)}, 0);
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            double va = z.values[pairs[p].first];
            double vb = z.values[pairs[p].second];
            sa[p] += va;
            sb[p] += vb;
            sab[p] += va * vb;
        }
    }
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        double cov = sab[p] / reps - (sa[p] / reps) * (sb[p] / reps);
        auto xa = h.cell_center(0, pairs[p].first);
        auto xb = h.cell_center(0, pairs[p].second);
        double expected = 0.0;
        for (std::size_t n = 0; n < basis.terms.size(); ++n)
            expected += basis.terms[n].theta * basis.evaluate_term(n, xa) * basis.evaluate_term(n, xb);
        CHECK(cov == doctest::Approx(expected).epsilon(0.05));
    }
}

TEST_CASE("lognormal transform is pointwise exp") {
    GridHierarchy h{4, 2, 0};
    GridFunction z(h, 0, 0.0);
    GridFunction k = lognormal_field(z);
    for (double v : k.values) CHECK(v == doctest::Approx(1.0));

    GridFunction z2(h, 0, std::log(2.0));
    GridFunction k2 = lognormal_field(z2);
    for (double v : k2.values) CHECK(v == doctest::Approx(2.0));

    GridFunction z3(h, 0);
    std::mt19937 gen(11);
    std::normal_distribution<double> dist(0.0, 3.0);
    for (double& v : z3.values) v = dist(gen);
    GridFunction k3 = lognormal_field(z3);
    for (double v : k3.values) CHECK(v > 0.0);
}
