#pragma once

// Reference computations used as independent oracles in tests. Nothing here
// calls into the library's numerical code.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Bisection to the last representable bit. The upper tail goes through
// symmetry since 1 - p is exact for p >= 0.5 but normal_cdf near 1 is not.
inline double normal_quantile(double p) {
    if (p > 0.5) return -normal_quantile(1.0 - p);
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 400 && hi - lo > 0.0; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (normal_cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Composite Simpson on [a, b] with `intervals` (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int intervals) {
    const double h = (b - a) / intervals;
    double s = f(a) + f(b);
    for (int i = 1; i < intervals; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// Regularized incomplete beta by quadrature of the density (alpha, beta >= 1).
inline double beta_cdf(double x, double alpha, double beta) {
    const double norm = std::beta(alpha, beta);
    return simpson([&](double t) { return std::pow(t, alpha - 1) * std::pow(1 - t, beta - 1); }, 0.0,
                   x, 20000) /
           norm;
}

inline double bisect(const std::function<double(double)>& increasing, double target, double lo,
                     double hi) {
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (increasing(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Restricted log-likelihood of the random-effects model, up to a constant.
inline double restricted_loglik(const std::vector<double>& y, const std::vector<double>& v,
                                double tau2) {
    double sw = 0.0, swy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        sw += 1.0 / (v[i] + tau2);
        swy += y[i] / (v[i] + tau2);
    }
    const double mu = swy / sw;
    double ll = -0.5 * std::log(sw);
    for (std::size_t i = 0; i < y.size(); ++i) {
        ll -= 0.5 * std::log(v[i] + tau2) + 0.5 * (y[i] - mu) * (y[i] - mu) / (v[i] + tau2);
    }
    return ll;
}

// Golden-section maximisation of the restricted likelihood on [0, hi].
inline double reml_tau2(const std::vector<double>& y, const std::vector<double>& v, double hi) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 0.0, b = hi;
    double c = b - g * (b - a), d = a + g * (b - a);
    for (int i = 0; i < 300; ++i) {
        if (restricted_loglik(y, v, c) > restricted_loglik(y, v, d)) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    return 0.5 * (a + b);
}

struct McMoments {
    double mean = 0.0;
    double sd = 0.0;
    double mean_se = 0.0;
};

// Brute-force moments of inverse-Box-Cox(X), X ~ N(mu, sigma^2) restricted to
// [-1/lambda, 2 mu + 1/lambda], using the standard library's generator.
inline McMoments truncated_bc_moments(double lambda, double mu, double sigma, std::size_t draws,
                                      std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd(mu, sigma);
    const double lo = -1.0 / lambda, hi = 2.0 * mu + 1.0 / lambda;
    double s = 0.0, ss = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < draws; ++i) {
        const double x = nd(gen);
        if (x < lo || x > hi) continue;
        const double y = std::pow(lambda * x + 1.0, 1.0 / lambda);
        s += y;
        ss += y * y;
        ++k;
    }
    McMoments m;
    m.mean = s / k;
    const double var = (ss - k * m.mean * m.mean) / (k - 1);
    m.sd = std::sqrt(var);
    m.mean_se = m.sd / std::sqrt(static_cast<double>(k));
    return m;
}

}  // namespace oracle
