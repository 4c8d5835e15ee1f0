#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "qmest/estimate.hpp"
#include "qmest/summaries.hpp"

namespace qmest {

struct StudyEffect {
    std::string study_id;
    double mean = 0.0;
    double sd = 1.0;
    long n = 1;

    /// Within-study variance of the mean, sd^2 / n.
    double variance() const;
};

struct MetaResult {
    double pooled_mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double se = 0.0;
    double tau2 = 0.0;
    double q_stat = 0.0;
    double i2 = 0.0;  // percent
    std::size_t k = 0;
    int reml_iterations = 0;
};

/// Restricted-ML between-study variance by Fisher scoring from the
/// DerSimonian-Laird value. Throws ContractError for fewer than 2 studies and
/// DomainError for a non-positive within-study variance.
double reml_tau2(const std::vector<StudyEffect>& effects);

/// Random-effects pooling with REML tau^2 and a Wald 95% interval.
/// The result does not depend on the order of `effects`.
MetaResult pool(std::vector<StudyEffect> effects);

/// Quartile skewness (q3 + q1 - 2 q2) / (q3 - q1). Requires q1 and q3;
/// throws DomainError when q3 == q1.
double bowley(const QuantileSummary& summary);

struct DerivedStudy {
    StudyEffect effect;
    EstimateResult estimate;
};

struct SkippedStudy {
    std::string study_id;
    std::string reason;
};

struct PooledAnalysis {
    MetaResult result;
    std::vector<DerivedStudy> studies;  // input order
    std::vector<SkippedStudy> skipped;  // only with FailurePolicy::skip
};

enum class FailurePolicy { raise, skip };

/// Estimate each study's mean and SD from its `scenario` slice, then pool.
/// Study i uses seed derive_seed(config.seed, i). Under FailurePolicy::raise a
/// failing study raises EstimationFailed naming it; under skip it is left out
/// of the pool and listed in `skipped`.
PooledAnalysis derive_and_pool(const std::vector<StudyRow>& studies, Method method,
                               Scenario scenario, const EstimatorConfig& config,
                               FailurePolicy failures = FailurePolicy::raise);

/// Shift policy used for pooling: c is added to every study.
EstimatorConfig pooling_config(std::uint64_t seed = kDefaultSeed);

nlohmann::json to_json(const EstimateResult& r);
nlohmann::json to_json(const MetaResult& r);
nlohmann::json to_json(const PooledAnalysis& a, Method method, Scenario scenario);

}  // namespace qmest
