#include "mlmcopt/stats.hpp"

#include <cmath>
#include <limits>

namespace mlmcopt {

double v_hat1(std::span<const double> samples) {
    std::size_t n = samples.size();
    if (n < 2) throw std::invalid_argument("v_hat1: need at least 2 samples");
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double d = samples[j] - samples[(j + n - 1) % n];
        s += d * d;
    }
    return s / (2.0 * static_cast<double>(n));
}

double v_hat_twoset(std::span<const double> samples, std::span<const double> paired) {
    if (samples.size() != paired.size() || samples.empty())
        throw std::invalid_argument("v_hat_twoset: paired sets must have equal nonzero size");
    double s = 0.0;
    for (std::size_t j = 0; j < samples.size(); ++j) {
        double d = samples[j] - paired[j];
        s += d * d;
    }
    return s / (2.0 * static_cast<double>(samples.size()));
}

std::vector<double> v_hat1_gradient_chain(std::span<const double> samples) {
    std::size_t n = samples.size();
    if (n < 2) throw std::invalid_argument("v_hat1_gradient_chain: need at least 2 samples");
    std::vector<double> g(n);
    for (std::size_t j = 0; j < n; ++j)
        g[j] = 2.0 * samples[j] - samples[(j + 1) % n] - samples[(j + n - 1) % n];
    return g;
}

namespace {

double tracking_term(const GridFunction& y, const GridFunction& target) {
    GridFunction d = y;
    add_scaled(d, -1.0, target);
    return inner_product(d, d);
}

GridFunction ensemble_mean(const std::vector<GridFunction>& states) {
    GridFunction m = states.front();
    for (std::size_t i = 1; i < states.size(); ++i) add_scaled(m, 1.0, states[i]);
    scale(m, 1.0 / static_cast<double>(states.size()));
    return m;
}

double ensemble_variance_integral(const std::vector<GridFunction>& states, const GridFunction& mean) {
    double s = 0.0;
    for (const auto& y : states) s += tracking_term(y, mean);
    return s / static_cast<double>(states.size());
}

}  // namespace

double robust_cost(const std::vector<GridFunction>& states, const GridFunction& target,
                   const GridFunction& control, double alpha, double gamma) {
    if (states.empty()) throw std::invalid_argument("robust_cost: empty ensemble");
    double track = 0.0;
    for (const auto& y : states) track += tracking_term(y, target);
    track /= static_cast<double>(states.size());
    GridFunction m = ensemble_mean(states);
    return track + gamma * ensemble_variance_integral(states, m) +
           alpha * inner_product(control, control);
}

double average_cost(const std::vector<GridFunction>& states, const GridFunction& target,
                    const GridFunction& control, double alpha, double gamma_prime) {
    if (states.empty()) throw std::invalid_argument("average_cost: empty ensemble");
    GridFunction m = ensemble_mean(states);
    return tracking_term(m, target) + gamma_prime * ensemble_variance_integral(states, m) +
           alpha * inner_product(control, control);
}

void LevelAccumulator::push(const GridFunction& y) {
    if (count_ == 0) {
        sum_ = y;
        sum_sq_ = y;
        for (double& v : sum_sq_.values) v *= v;
        sum_lag1_ = y;
        scale(sum_lag1_, 0.0);
        sum_lag2_ = sum_lag1_;
        first_ = y;
        prev_ = y;
        count_ = 1;
        return;
    }
    sum_.require_shape(y, "LevelAccumulator");
    for (std::size_t i = 0; i < y.values.size(); ++i) {
        double v = y.values[i];
        sum_.values[i] += v;
        sum_sq_.values[i] += v * v;
        sum_lag1_.values[i] += prev_.values[i] * v;
        if (count_ >= 2) sum_lag2_.values[i] += prev2_.values[i] * v;
    }
    if (count_ == 1) second_ = y;
    prev2_ = prev_;
    prev_ = y;
    ++count_;
}

LevelStats LevelAccumulator::finalize(int level) const {
    if (count_ < 2) throw std::invalid_argument("LevelAccumulator: need at least 2 samples");
    const double n = static_cast<double>(count_);
    LevelStats st;
    st.level = level;
    st.count = count_;
    st.mean = sum_;
    scale(st.mean, 1.0 / n);
    st.mean_inf_norm = inf_norm(st.mean);

    // close the circle: lag-1 wrap (last,first); lag-2 wraps (last-1,first)
    // and (last,second)
    GridFunction lag1 = sum_lag1_;
    GridFunction lag2 = sum_lag2_;
    for (std::size_t i = 0; i < lag1.values.size(); ++i) {
        lag1.values[i] += prev_.values[i] * first_.values[i];
        if (count_ >= 3) {
            lag2.values[i] += prev2_.values[i] * first_.values[i];
            lag2.values[i] += prev_.values[i] * second_.values[i];
        }
    }

    st.variance = sum_sq_;
    st.cov_lag1 = lag1;
    st.cov_lag2 = lag2;
    const double denom = n - 1.0;
    for (std::size_t i = 0; i < st.variance.values.size(); ++i) {
        double mu = st.mean.values[i];
        st.variance.values[i] = std::max(0.0, (sum_sq_.values[i] - n * mu * mu) / denom);
        st.cov_lag1.values[i] = (lag1.values[i] - n * mu * mu) / denom;
        st.cov_lag2.values[i] = count_ >= 3 ? (lag2.values[i] - n * mu * mu) / denom : 0.0;
    }
    return st;
}

GridFunction corrected_variance(const LevelStats& stats, double floor) {
    if (stats.count < 2) throw std::invalid_argument("corrected_variance: need at least 2 samples");
    GridFunction out = stats.variance;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        double v = stats.variance.values[i];
        double corrected = v + 2.0 * (stats.cov_lag1.values[i] + stats.cov_lag2.values[i]);
        out.values[i] = std::max(floor * v, corrected);
    }
    return out;
}

std::vector<long> allocate_samples(const std::vector<GridFunction>& corrected_var_at_return,
                                   const std::vector<double>& cost_per_sample,
                                   const std::vector<long>& already_taken, double eps,
                                   double theta_split) {
    std::size_t levels = corrected_var_at_return.size();
    if (cost_per_sample.size() != levels || already_taken.size() != levels)
        throw std::invalid_argument("allocate_samples: level vectors must have equal length");
    if (!(eps > 0.0)) throw std::invalid_argument("allocate_samples: eps must be > 0");
    for (double c : cost_per_sample)
        if (!(c > 0.0)) throw std::invalid_argument("allocate_samples: zero cost estimate");

    std::size_t points = corrected_var_at_return.front().values.size();
    std::vector<long> n(levels, 0);
    const double budget = theta_split * eps * eps;
    for (std::size_t x = 0; x < points; ++x) {
        double total = 0.0;
        for (std::size_t l = 0; l < levels; ++l) {
            double v = std::max(0.0, corrected_var_at_return[l].values[x]);
            total += std::sqrt(v * cost_per_sample[l]);
        }
        if (total == 0.0) continue;
        for (std::size_t l = 0; l < levels; ++l) {
            double v = std::max(0.0, corrected_var_at_return[l].values[x]);
            double ideal = std::sqrt(v / cost_per_sample[l]) * total / budget;
            long count = static_cast<long>(std::ceil(ideal - 1e-12));
            n[l] = std::max(n[l], count);
        }
    }
    for (std::size_t l = 0; l < levels; ++l) n[l] = std::max(n[l], already_taken[l]);
    return n;
}

RhoBias estimate_rho_bias(const std::vector<double>& mean_inf_norms_from_level1) {
    if (mean_inf_norms_from_level1.empty())
        throw std::invalid_argument("estimate_rho_bias: need at least level 1 data");
    RhoBias out;
    std::size_t count = mean_inf_norms_from_level1.size();
    double tail = mean_inf_norms_from_level1.back();
    if (tail == 0.0) {
        // exact telescoping (deterministic field); no bias left
        out.rho = 1.0;
        out.bias_bound = 0.0;
        return out;
    }
    if (count == 1) {
        out.rho = 1.0;  // single point cannot support a fit; unit decay assumed
        out.bias_bound = tail;
        return out;
    }
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        double x = static_cast<double>(i + 1);
        double y = std::log2(std::max(mean_inf_norms_from_level1[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double m = static_cast<double>(count);
    double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    out.rho = -slope;
    if (out.rho <= 0.0) {
        out.no_decay = true;
        out.bias_bound = std::numeric_limits<double>::infinity();
        return out;
    }
    out.bias_bound = tail / (std::pow(2.0, out.rho) - 1.0);
    return out;
}

}  // namespace mlmcopt
