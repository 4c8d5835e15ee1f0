#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qmest/dists.hpp"
#include "qmest/estimate.hpp"
#include "qmest/summaries.hpp"

namespace qmest {

/// Sample-quantile convention for the inner quantiles; q_min/q_max are
/// always the sample extremes.
enum class QuantileRule {
    linear,  // interpolate order statistics at h = (n - 1) p + 1
    hazen,   // interpolate at h = n p + 1/2
};

/// Scenario summary of a sample. Throws DomainError for empty data.
QuantileSummary sample_summary(std::span<const double> data, Scenario scenario,
                               QuantileRule rule = QuantileRule::linear);

/// (estimate - truth) / truth. Throws DomainError when truth == 0.
double relative_error(double estimate, double truth);

enum class Target { mean, sd };
std::string_view target_name(Target t);

/// "family:theta1[:theta2]", e.g. "log_normal:5:1" or "exponential:10".
std::string distribution_tag(const FamilyParams& params);
/// Accepts distribution_tag output; "lognormal" is accepted for log_normal.
std::optional<FamilyParams> parse_distribution_tag(std::string_view tag);

struct SimCell {
    FamilyParams distribution;
    Scenario scenario = Scenario::s3;
    long n = 100;
    std::size_t reps = 1000;
    std::vector<Method> methods{Method::luo_wan};
    std::uint64_t master_seed = kDefaultSeed;
    EstimatorConfig config;  // seed is replaced per repetition
    QuantileRule rule = QuantileRule::linear;
    bool keep_errors = false;
    unsigned threads = 1;
};

struct AreRecord {
    std::string method;
    Target target = Target::mean;
    Scenario scenario = Scenario::s3;
    FamilyParams distribution;
    long n = 0;
    std::size_t reps = 0;      // repetitions contributing to the average
    std::size_t failures = 0;  // repetitions where the estimator threw
    double are_mean = 0.0;     // NaN when every repetition failed
    double are_sd = 0.0;       // SD of the per-repetition relative errors (n - 1)
    std::vector<double> errors;

    /// are_sd / sqrt(reps).
    double standard_error() const;
};

/// What a custom estimator sees in one repetition. `summary` is already
/// shifted; the harness subtracts `shift.c` from the returned mean.
struct RepContext {
    const QuantileSummary& summary;
    std::span<const double> data;
    ShiftRecord shift;
    std::uint64_t seed;
};

struct NamedEstimator {
    std::string name;
    std::function<Moments(const RepContext&)> run;
};

/// Records for every method in cell.methods, mean target then sd target.
std::vector<AreRecord> run_cell(const SimCell& cell);

/// Same harness with caller-supplied estimators; cell.methods is ignored.
std::vector<AreRecord> run_cell_with(const SimCell& cell,
                                     const std::vector<NamedEstimator>& estimators);

enum class GridSet { primary, sensitivity };

std::vector<FamilyParams> grid_distributions(GridSet set);

/// 25, 50, 75, 100, then 150 to 1000 in steps of 50.
std::vector<long> grid_sample_sizes();

struct GridOptions {
    GridSet set = GridSet::primary;
    std::size_t reps = 1000;
    std::vector<Method> methods{Method::luo_wan, Method::qe, Method::bc};
    std::uint64_t master_seed = kDefaultSeed;
    std::vector<long> n_values = grid_sample_sizes();
    std::vector<Scenario> scenarios{Scenario::s1, Scenario::s2, Scenario::s3};
    EstimatorConfig config;
    QuantileRule rule = QuantileRule::linear;
    unsigned threads = 1;
};

/// Every distribution x scenario x n cell, in that nesting order.
std::vector<AreRecord> run_grid(const GridOptions& options);

/// Header: method,target,scenario,distribution,n,reps,failures,are,are_sd
void write_are_csv(std::ostream& out, const std::vector<AreRecord>& records);

}  // namespace qmest
