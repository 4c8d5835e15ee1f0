#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qmest/rng.hpp"

namespace qmest {

/// Standard normal CDF.
double normal_cdf(double z);

/// Standard normal density.
double normal_pdf(double z);

/// Inverse of the standard normal CDF. Rational approximation polished by a
/// Halley step on the CDF; absolute error well below 1e-9 on (0, 1).
/// Throws DomainError unless 0 < p < 1.
double normal_quantile(double p);

enum class Family { normal, log_normal, gamma, beta, weibull, exponential };

/// Candidate families for model selection, in tie-break order.
inline constexpr std::array<Family, 5> kCandidateFamilies{
    Family::normal, Family::log_normal, Family::gamma, Family::beta, Family::weibull};

std::string_view family_name(Family f);
std::optional<Family> parse_family(std::string_view name);

/// A family plus its parameter vector.
///
///   normal       theta1 = mu,    theta2 = sigma
///   log_normal   theta1 = mu,    theta2 = sigma (of the log)
///   gamma        theta1 = shape, theta2 = rate
///   beta         theta1 = alpha, theta2 = beta
///   weibull      theta1 = shape, theta2 = scale
///   exponential  theta1 = rate   (theta2 unused)
struct FamilyParams {
    Family family = Family::normal;
    double theta1 = 0.0;
    double theta2 = 1.0;

    bool operator==(const FamilyParams&) const = default;
};

struct Moments {
    double mean = 0.0;
    double sd = 0.0;
};

bool params_valid(const FamilyParams& params);

/// Throws DomainError when params violate the family's constraints.
void check_params(const FamilyParams& params);

/// Lower/upper edge of the support (may be infinite).
std::pair<double, double> support(Family family);

double quantile(const FamilyParams& params, double p);
Moments moments(const FamilyParams& params);

/// Method-of-moments parameters reproducing (mean, sd).
/// Throws FitInfeasible when no member of the family has those moments.
FamilyParams mom_fit(Family family, double mean, double sd);

/// Draw a single variate.
double draw(const FamilyParams& params, Rng& rng);

/// n iid draws; deterministic in (params, n, seed). Throws DomainError for n == 0.
std::vector<double> sample(const FamilyParams& params, std::size_t n, std::uint64_t seed);

}  // namespace qmest
