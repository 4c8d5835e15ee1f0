#pragma once

#include <cstddef>
#include <cstdint>

#include "qmest/dists.hpp"
#include "qmest/summaries.hpp"

namespace qmest {

/// f_lambda(x) = (x^lambda - 1)/lambda, or ln x at lambda = 0. Throws DomainError for x <= 0.
double box_cox(double x, double lambda);

/// Inverse of box_cox. Throws DomainError when lambda*y + 1 <= 0 (lambda != 0).
double inv_box_cox(double y, double lambda);

/// Squared departure from symmetry of the transformed quantiles:
///   s1: ((f(max)-f(q2)) / (f(q2)-f(min)) - 1)^2
///   s2: same on the quartiles
///   s3: sum of both terms.
double bc_symmetry_objective(const QuantileSummary& summary, double lambda);

struct LambdaSearch {
    double lambda = 0.0;          // clamped at 0
    double unconstrained = 0.0;   // minimiser over [-5, 5] before clamping
    double objective = 0.0;       // objective at `unconstrained`
};

/// Minimise the symmetry objective over lambda in [-5, 5]. Requires strictly
/// positive quantiles and strict ordering of the quantiles the criterion
/// uses; throws EstimationFailed for a degenerate summary.
LambdaSearch find_lambda_detail(const QuantileSummary& summary);
double find_lambda(const QuantileSummary& summary);

/// Mean and SD of f_lambda^{-1}(X) for X ~ N(mu, sigma^2) truncated to
/// [f_lambda(0), 2 mu - f_lambda(0)], by adaptive Gauss-Kronrod quadrature.
Moments truncated_moments_integral(double lambda, double mu, double sigma);

struct McMoments {
    Moments moments;
    std::size_t kept = 0;
    std::size_t drawn = 0;
};

/// Same quantity by Monte Carlo: draw, discard outside the support, back-transform.
McMoments truncated_moments_mc(double lambda, double mu, double sigma, std::size_t draws,
                               std::uint64_t seed);

struct BcOptions {
    std::size_t mc_draws = 100000;
    std::uint64_t seed = 20190312;
    ShiftPolicy shift;
};

struct BcResult {
    double mean = 0.0;
    double sd = 0.0;
    double lambda = 0.0;
    double mu = 0.0;     // Luo mean on the transformed scale
    double sigma = 0.0;  // Wan SD on the transformed scale
    std::size_t mc_draws = 0;
    std::size_t mc_kept = 0;
    bool heavy_truncation = false;  // more than half the draws were discarded
    ShiftRecord shift;
};

BcResult bc_estimate(const QuantileSummary& summary, const BcOptions& options = {});

}  // namespace qmest
