#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "qmest/dists.hpp"
#include "qmest/optim.hpp"
#include "qmest/summaries.hpp"

namespace qmest {

/// ABC model-choice candidates. Unlike quantile matching, the exponential
/// takes the gamma's place.
inline constexpr std::array<Family, 5> kAbcCandidateFamilies{
    Family::normal, Family::log_normal, Family::exponential, Family::beta, Family::weibull};

struct AbcConfig {
    std::size_t n_iter = 50000;     // prior draws per candidate family
    double accept_fraction = 0.001; // of all draws, pooled across families
    std::uint64_t seed = 20190312;
    std::vector<Family> candidates{kAbcCandidateFamilies.begin(), kAbcCandidateFamilies.end()};
    ShiftPolicy shift;
    unsigned threads = 1;
    bool keep_accepted = false;  // fill AbcResult::accepted
};

struct AbcDraw {
    FamilyParams params;
    double distance = 0.0;
};

struct AbcFamilyPosterior {
    Family family;
    std::size_t accepted = 0;
    double probability = 0.0;
    FamilyParams posterior_mean;  // coordinate-wise mean of accepted draws
};

struct AbcResult {
    double mean = 0.0;
    double sd = 0.0;
    Family selected = Family::normal;
    FamilyParams params;       // posterior-mean parameters of the selected family
    double posterior_prob = 0.0;
    std::size_t accepted_total = 0;
    std::vector<AbcFamilyPosterior> families;  // in candidate order
    std::vector<AbcDraw> accepted;             // by increasing distance; only with keep_accepted
    ShiftRecord shift;
};

/// Uniform prior box for one candidate: the quantile-matching box, plus a
/// rate box for the exponential.
optim::Box abc_prior_box(const QuantileSummary& summary, Family family);

/// Euclidean distance between the scenario quantile vectors, each coordinate
/// divided by the observed spread (q_max - q_min for s1/s3, q3 - q1 for s2).
/// Throws ContractError when scenario or n differ.
double abc_distance(const QuantileSummary& observed, const QuantileSummary& pseudo);

/// ABC rejection sampler with model choice. Priors are uniform on
/// abc_prior_box.
AbcResult abc_estimate(const QuantileSummary& summary, const AbcConfig& config = {});

}  // namespace qmest
