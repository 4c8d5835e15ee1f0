#include "qmest/dists.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/policies/policy.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "qmest/errors.hpp"

namespace qmest {

namespace {

namespace bm = boost::math;

// Quantile evaluation inside the optimizers must never throw: parameters at
// the edges of the search box can push the special functions into overflow.
using QuietPolicy = bm::policies::policy<
    bm::policies::domain_error<bm::policies::errno_on_error>,
    bm::policies::pole_error<bm::policies::errno_on_error>,
    bm::policies::overflow_error<bm::policies::errno_on_error>,
    bm::policies::evaluation_error<bm::policies::errno_on_error>,
    bm::policies::promote_double<false>>;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

void check_probability(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("probability must lie in (0, 1)");
}

// log(1 + CV^2) for a Weibull with the given shape; strictly decreasing.
double weibull_log1p_cv2(double shape) {
    return std::lgamma(1.0 + 2.0 / shape) - 2.0 * std::lgamma(1.0 + 1.0 / shape);
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_quantile(double p) {
    check_probability(p);
    // Acklam's rational approximation (relative error ~1e-9).
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double z;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        z = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        z = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        z = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // Halley refinement. The residual is taken on the nearer tail so it keeps
    // full relative precision.
    const double e = (z <= 0.0) ? normal_cdf(z) - p : (1.0 - p) - normal_cdf(-z);
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * z * z);
    z -= u / (1.0 + 0.5 * z * u);
    return z;
}

std::string_view family_name(Family f) {
    switch (f) {
        case Family::normal: return "normal";
        case Family::log_normal: return "log_normal";
        case Family::gamma: return "gamma";
        case Family::beta: return "beta";
        case Family::weibull: return "weibull";
        case Family::exponential: return "exponential";
    }
    return "unknown";
}

std::optional<Family> parse_family(std::string_view name) {
    if (name == "normal") return Family::normal;
    if (name == "log_normal" || name == "lognormal") return Family::log_normal;
    if (name == "gamma") return Family::gamma;
    if (name == "beta") return Family::beta;
    if (name == "weibull") return Family::weibull;
    if (name == "exponential") return Family::exponential;
    return std::nullopt;
}

bool params_valid(const FamilyParams& params) {
    switch (params.family) {
        case Family::normal:
        case Family::log_normal:
            return std::isfinite(params.theta1) && positive_finite(params.theta2);
        case Family::gamma:
        case Family::beta:
        case Family::weibull:
            return positive_finite(params.theta1) && positive_finite(params.theta2);
        case Family::exponential:
            return positive_finite(params.theta1);
    }
    return false;
}

void check_params(const FamilyParams& params) {
    if (!params_valid(params)) {
        throw DomainError("invalid parameters for " + std::string(family_name(params.family)));
    }
}

std::pair<double, double> support(Family family) {
    switch (family) {
        case Family::normal: return {-kInf, kInf};
        case Family::beta: return {0.0, 1.0};
        default: return {0.0, kInf};
    }
}

double quantile(const FamilyParams& params, double p) {
    check_params(params);
    check_probability(p);
    const double t1 = params.theta1;
    const double t2 = params.theta2;
    switch (params.family) {
        case Family::normal: return t1 + t2 * normal_quantile(p);
        case Family::log_normal: return std::exp(t1 + t2 * normal_quantile(p));
        case Family::gamma: return bm::gamma_p_inv(t1, p, QuietPolicy()) / t2;
        case Family::beta: return bm::ibeta_inv(t1, t2, p, QuietPolicy());
        case Family::weibull: return t2 * std::pow(-std::log1p(-p), 1.0 / t1);
        case Family::exponential: return -std::log1p(-p) / t1;
    }
    return kNaN;
}

Moments moments(const FamilyParams& params) {
    check_params(params);
    const double t1 = params.theta1;
    const double t2 = params.theta2;
    switch (params.family) {
        case Family::normal: return {t1, t2};
        case Family::log_normal: {
            const double m = std::exp(t1 + 0.5 * t2 * t2);
            return {m, m * std::sqrt(std::expm1(t2 * t2))};
        }
        case Family::gamma: return {t1 / t2, std::sqrt(t1) / t2};
        case Family::beta: {
            const double s = t1 + t2;
            return {t1 / s, std::sqrt(t1 * t2 / (s * s * (s + 1.0)))};
        }
        case Family::weibull: {
            const double g1 = std::exp(std::lgamma(1.0 + 1.0 / t1));
            // Gamma(1+2/k) - Gamma(1+1/k)^2 cancels for large shapes; go through the CV.
            const double cv2 = std::expm1(weibull_log1p_cv2(t1));
            return {t2 * g1, t2 * g1 * std::sqrt(cv2)};
        }
        case Family::exponential: return {1.0 / t1, 1.0 / t1};
    }
    return {kNaN, kNaN};
}

FamilyParams mom_fit(Family family, double mean, double sd) {
    if (!(sd > 0.0) || !std::isfinite(sd) || !std::isfinite(mean)) {
        throw FitInfeasible("method of moments needs a finite mean and sd > 0");
    }
    const auto infeasible = [&](const char* why) {
        return FitInfeasible(std::string(family_name(family)) + ": " + why);
    };
    switch (family) {
        case Family::normal: return {family, mean, sd};
        case Family::log_normal: {
            if (mean <= 0.0) throw infeasible("mean must be positive");
            const double cv = sd / mean;
            const double s2 = std::log1p(cv * cv);
            return {family, std::log(mean) - 0.5 * s2, std::sqrt(s2)};
        }
        case Family::gamma: {
            if (mean <= 0.0) throw infeasible("mean must be positive");
            const double v = sd * sd;
            return {family, mean * mean / v, mean / v};
        }
        case Family::beta: {
            const double v = sd * sd;
            if (!(mean > 0.0 && mean < 1.0) || !(v < mean * (1.0 - mean))) {
                throw infeasible("need 0 < mean < 1 and sd^2 < mean(1 - mean)");
            }
            const double common = mean * (1.0 - mean) / v - 1.0;
            return {family, mean * common, (1.0 - mean) * common};
        }
        case Family::weibull: {
            if (mean <= 0.0) throw infeasible("mean must be positive");
            constexpr double lo = 1e-3;
            constexpr double hi = 100.0;
            const double cv = sd / mean;
            const double target = std::log1p(cv * cv);
            const auto f = [&](double k) { return weibull_log1p_cv2(k) - target; };
            const double f_lo = f(lo);
            const double f_hi = f(hi);
            if (!(f_lo >= 0.0 && f_hi <= 0.0)) throw infeasible("CV outside the shape range");
            double shape;
            if (f_lo == 0.0) {
                shape = lo;
            } else if (f_hi == 0.0) {
                shape = hi;
            } else {
                std::uintmax_t iters = 200;
                // Bracket on log(shape): CV varies over many decades.
                const auto g = [&](double u) { return f(std::exp(u)); };
                const auto r = bm::tools::toms748_solve(
                    g, std::log(lo), std::log(hi), f_lo, f_hi,
                    bm::tools::eps_tolerance<double>(50), iters);
                shape = std::exp(0.5 * (r.first + r.second));
            }
            const double scale = mean / std::exp(std::lgamma(1.0 + 1.0 / shape));
            return {family, shape, scale};
        }
        case Family::exponential: {
            if (mean <= 0.0) throw infeasible("mean must be positive");
            return {family, 1.0 / mean, 0.0};
        }
    }
    throw infeasible("unknown family");
}

double draw(const FamilyParams& params, Rng& rng) {
    const double t1 = params.theta1;
    const double t2 = params.theta2;
    switch (params.family) {
        case Family::normal: return t1 + t2 * rng.normal();
        case Family::log_normal: return std::exp(t1 + t2 * rng.normal());
        case Family::gamma: return rng.gamma(t1) / t2;
        case Family::beta: {
            const double x = rng.gamma(t1);
            const double y = rng.gamma(t2);
            return x / (x + y);
        }
        case Family::weibull: return t2 * std::pow(-std::log(rng.uniform()), 1.0 / t1);
        case Family::exponential: return -std::log(rng.uniform()) / t1;
    }
    return kNaN;
}

std::vector<double> sample(const FamilyParams& params, std::size_t n, std::uint64_t seed) {
    check_params(params);
    if (n == 0) throw DomainError("sample size must be at least 1");
    Rng rng(seed);
    std::vector<double> out(n);
    for (auto& x : out) x = draw(params, rng);
    return out;
}

}  // namespace qmest
