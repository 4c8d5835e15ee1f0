#include "qmest/bc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qmest/errors.hpp"
#include "qmest/formula.hpp"
#include "qmest/optim.hpp"
#include "qmest/rng.hpp"

namespace qmest {

namespace {

constexpr double kLambdaLo = -5.0;
constexpr double kLambdaHi = 5.0;
constexpr double kLambdaTol = 1e-8;

// Unchecked inverse used at the truncation edge, where lambda*y + 1 == 0.
double inv_box_cox_raw(double y, double lambda) {
    if (lambda == 0.0) return std::exp(y);
    const double base = std::max(0.0, lambda * y + 1.0);
    if (base == 0.0) return 0.0;
    return std::exp(std::log(base) / lambda);
}

double ratio_term(double lo, double mid, double hi, double lambda) {
    const double r = (box_cox(hi, lambda) - box_cox(mid, lambda)) /
                     (box_cox(mid, lambda) - box_cox(lo, lambda));
    return (r - 1.0) * (r - 1.0);
}

}  // namespace

double box_cox(double x, double lambda) {
    if (!(x > 0.0)) throw DomainError("box_cox needs x > 0");
    if (lambda == 0.0) return std::log(x);
    return std::expm1(lambda * std::log(x)) / lambda;
}

double inv_box_cox(double y, double lambda) {
    if (lambda == 0.0) return std::exp(y);
    if (!(lambda * y + 1.0 > 0.0)) throw DomainError("inv_box_cox needs lambda*y + 1 > 0");
    return std::exp(std::log1p(lambda * y) / lambda);
}

double bc_symmetry_objective(const QuantileSummary& s, double lambda) {
    switch (s.scenario) {
        case Scenario::s1: return ratio_term(*s.q_min, s.q2, *s.q_max, lambda);
        case Scenario::s2: return ratio_term(*s.q1, s.q2, *s.q3, lambda);
        case Scenario::s3:
            return ratio_term(*s.q1, s.q2, *s.q3, lambda) +
                   ratio_term(*s.q_min, s.q2, *s.q_max, lambda);
    }
    return 0.0;
}

LambdaSearch find_lambda_detail(const QuantileSummary& s) {
    require_valid(s);
    for (double v : s.values()) {
        if (!(v > 0.0)) throw EstimationFailed("Box-Cox needs strictly positive quantiles");
    }
    const auto strict = [](double a, double b, double c) { return a < b && b < c; };
    const bool ok = s.scenario == Scenario::s2 ? strict(*s.q1, s.q2, *s.q3)
                    : s.scenario == Scenario::s1
                        ? strict(*s.q_min, s.q2, *s.q_max)
                        : strict(*s.q1, s.q2, *s.q3) && strict(*s.q_min, s.q2, *s.q_max);
    if (!ok) throw EstimationFailed("Box-Cox needs strictly ordered quantiles around the median");

    const auto m = optim::brent_minimize(
        [&](double l) { return bc_symmetry_objective(s, l); }, kLambdaLo, kLambdaHi, kLambdaTol);
    return {std::max(0.0, m.x), m.x, m.value};
}

double find_lambda(const QuantileSummary& summary) { return find_lambda_detail(summary).lambda; }

Moments truncated_moments_integral(double lambda, double mu, double sigma) {
    if (!(lambda > 0.0)) throw DomainError("truncated_moments_integral needs lambda > 0");
    if (!(sigma > 0.0)) throw DomainError("truncated_moments_integral needs sigma > 0");
    const double a = -1.0 / lambda;
    const double b = 2.0 * mu + 1.0 / lambda;
    if (!(a < b)) throw EstimationFailed("truncation interval is empty");
    const double mass = normal_cdf((b - mu) / sigma) - normal_cdf((a - mu) / sigma);
    if (!(mass > 0.0)) throw EstimationFailed("truncation removes all probability mass");

    // The density is negligible beyond 40 sigma; clip so the adaptive rule
    // cannot step over a narrow peak on a wide interval.
    const double lo = std::max(a, mu - 40.0 * sigma);
    const double hi = std::min(b, mu + 40.0 * sigma);
    const auto density = [&](double x) { return normal_pdf((x - mu) / sigma) / (sigma * mass); };
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    const auto integrate = [&](auto&& g) {
        double err = 0.0;
        double total = 0.0;
        // Split at the mode so each half is unimodal.
        const double mid = std::clamp(mu, lo, hi);
        if (mid > lo) total += GK::integrate(g, lo, mid, 20, 1e-13, &err);
        if (hi > mid) total += GK::integrate(g, mid, hi, 20, 1e-13, &err);
        return total;
    };
    const double mean =
        integrate([&](double x) { return density(x) * inv_box_cox_raw(x, lambda); });
    const double var = integrate([&](double x) {
        const double d = inv_box_cox_raw(x, lambda) - mean;
        return density(x) * d * d;
    });
    return {mean, std::sqrt(std::max(0.0, var))};
}

McMoments truncated_moments_mc(double lambda, double mu, double sigma, std::size_t draws,
                               std::uint64_t seed) {
    if (!(lambda > 0.0)) throw DomainError("truncated_moments_mc needs lambda > 0");
    const double a = -1.0 / lambda;
    const double b = 2.0 * mu + 1.0 / lambda;
    Rng rng(seed);
    McMoments out;
    out.drawn = draws;
    // Welford accumulation in draw order.
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
        const double r = mu + sigma * rng.normal();
        if (r < a || r > b) continue;
        const double x = inv_box_cox_raw(r, lambda);
        ++out.kept;
        const double delta = x - mean;
        mean += delta / static_cast<double>(out.kept);
        m2 += delta * (x - mean);
    }
    out.moments.mean = mean;
    out.moments.sd = out.kept > 1 ? std::sqrt(m2 / static_cast<double>(out.kept - 1)) : 0.0;
    return out;
}

BcResult bc_estimate(const QuantileSummary& summary, const BcOptions& options) {
    require_valid(summary);
    const auto [shifted, record] = apply_shift(summary, options.shift);

    BcResult out;
    out.shift = record;
    out.lambda = find_lambda(shifted);

    QuantileSummary t = shifted;
    for (auto* f : {&t.q_min, &t.q1, &t.q3, &t.q_max}) {
        if (*f) **f = box_cox(**f, out.lambda);
    }
    t.q2 = box_cox(t.q2, out.lambda);
    out.mu = luo_mean(t);
    out.sigma = wan_sd(t);

    if (out.lambda == 0.0) {
        // f_0(0) = -inf, so the truncation vanishes and the back-transform is log-normal.
        const auto m = moments({Family::log_normal, out.mu, out.sigma});
        out.mean = m.mean;
        out.sd = m.sd;
    } else {
        if (!(out.sigma > 0.0)) throw EstimationFailed("Box-Cox: zero spread on transformed scale");
        const auto mc =
            truncated_moments_mc(out.lambda, out.mu, out.sigma, options.mc_draws, options.seed);
        out.mc_draws = mc.drawn;
        out.mc_kept = mc.kept;
        if (mc.kept == 0) throw EstimationFailed("Box-Cox: every Monte Carlo draw was truncated");
        out.heavy_truncation = 2 * mc.kept < mc.drawn;
        out.mean = mc.moments.mean;
        out.sd = mc.moments.sd;
    }
    out.mean -= record.c;
    return out;
}

}  // namespace qmest
