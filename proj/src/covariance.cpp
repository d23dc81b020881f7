#include "mlmcopt/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mlmcopt {

namespace {

constexpr double kPi = std::numbers::pi;

// Root functions for the exponential kernel on [-1/2, 1/2], c = 1/lambda.
// Even modes: c - omega*tan(omega/2) = 0, one root per (2k*pi, (2k+1)*pi).
// Odd modes: omega + c*tan(omega/2) = 0, one root per ((2k+1)*pi, (2k+2)*pi).
double even_eq(double omega, double c) { return c - omega * std::tan(0.5 * omega); }
double odd_eq(double omega, double c) { return omega + c * std::tan(0.5 * omega); }

double bisect(double lo, double hi, bool even, double c, int index) {
    auto f = [&](double w) { return even ? even_eq(w, c) : odd_eq(w, c); };
    double flo = f(lo);
    double fhi = f(hi);
    if (!(flo * fhi < 0.0))
        throw std::runtime_error("solve_1d_eigenpairs: bisection bracket has no sign change at index " +
                                 std::to_string(index));
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (fm == 0.0) return mid;
        if (flo * fm < 0.0) {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
        if ((hi - lo) <= 1e-12 * hi) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

std::vector<Eigenpair1D> solve_1d_eigenpairs(double lambda, int count) {
    if (count < 1) throw std::invalid_argument("solve_1d_eigenpairs: count must be >= 1");
    if (lambda <= 0.0) throw std::invalid_argument("solve_1d_eigenpairs: lambda must be > 0");
    const double c = 1.0 / lambda;
    std::vector<Eigenpair1D> out;
    out.reserve(count);
    for (int n = 1; n <= count; ++n) {
        // The n-th frequency lives in ((n-1)pi, n*pi); the interval endpoints
        // are singular/zero points of tan, nudge inward.
        bool even = (n % 2 == 1);
        double lo = (n - 1) * kPi;
        double hi = n * kPi;
        double shift = 1e-9 * hi + 1e-12;
        double omega = bisect(lo + shift, hi - shift, even, c, n);
        Eigenpair1D ep;
        ep.omega = omega;
        ep.even = even;
        ep.eigenvalue = 2.0 * c / (omega * omega + c * c);
        double half = even ? 0.5 + std::sin(omega) / (2.0 * omega)
                           : 0.5 - std::sin(omega) / (2.0 * omega);
        ep.norm_const = 1.0 / std::sqrt(half);
        out.push_back(ep);
    }
    for (std::size_t i = 1; i < out.size(); ++i)
        if (!(out[i].eigenvalue < out[i - 1].eigenvalue))
            throw std::runtime_error("solve_1d_eigenpairs: eigenvalues not strictly descending at index " +
                                     std::to_string(i));
    return out;
}

KLBasis build_basis(const CovarianceSpec& spec, int pool_1d) {
    spec.validate();
    KLBasis basis;
    basis.spec = spec;

    if (spec.dim == 1) {
        basis.factors = solve_1d_eigenpairs(spec.lambda, spec.n_kl);
        basis.terms.reserve(spec.n_kl);
        for (int i = 0; i < spec.n_kl; ++i)
            basis.terms.push_back({spec.sigma2 * basis.factors[i].eigenvalue, i, -1});
        return basis;
    }

    int pool = pool_1d > 0 ? pool_1d
                           : static_cast<int>(std::ceil(std::sqrt(double(spec.n_kl)))) + 2;
    if (static_cast<long>(pool) * pool < spec.n_kl)
        throw std::runtime_error("build_basis: 1D pool of " + std::to_string(pool) +
                                 " eigenpairs yields fewer than " + std::to_string(spec.n_kl) +
                                 " 2D products; increase the pool size");

    auto factors = solve_1d_eigenpairs(spec.lambda, pool);
    std::vector<KLTerm> products;
    products.reserve(static_cast<std::size_t>(pool) * pool);
    for (int i = 0; i < pool; ++i)
        for (int j = 0; j < pool; ++j)
            products.push_back({factors[i].eigenvalue * factors[j].eigenvalue, i, j});
    std::sort(products.begin(), products.end(), [](const KLTerm& a, const KLTerm& b) {
        if (a.theta != b.theta) return a.theta > b.theta;
        if (a.factor_x != b.factor_x) return a.factor_x < b.factor_x;
        return a.factor_y < b.factor_y;
    });

    // Any product outside the pool grid involves an index >= pool and is
    // strictly smaller than factors[pool-1] * factors[0]; clearing that bound
    // means no outside product could displace a retained term.
    basis.coverage_certified =
        products[static_cast<std::size_t>(spec.n_kl) - 1].theta >=
        factors[static_cast<std::size_t>(pool) - 1].eigenvalue * factors[0].eigenvalue;

    basis.factors = std::move(factors);
    basis.terms.assign(products.begin(), products.begin() + spec.n_kl);
    for (auto& t : basis.terms) t.theta *= spec.sigma2;
    return basis;
}

}  // namespace mlmcopt
