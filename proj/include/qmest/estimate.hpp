#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "qmest/abc.hpp"
#include "qmest/dists.hpp"
#include "qmest/summaries.hpp"

namespace qmest {

enum class Method { luo_wan, qe, bc, abc };

inline constexpr Method kAllMethods[] = {Method::luo_wan, Method::qe, Method::bc, Method::abc};

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);

inline constexpr std::uint64_t kDefaultSeed = 20190312;

struct EstimatorConfig {
    ShiftPolicy shift;
    std::uint64_t seed = kDefaultSeed;  // BC Monte Carlo and ABC
    std::size_t mc_draws = 100000;
    std::size_t abc_n_iter = 50000;
    double abc_accept_fraction = 0.001;
    unsigned threads = 1;  // ABC workers
};

/// Method-independent view of one estimate plus the diagnostics each method has.
struct EstimateResult {
    Method method = Method::luo_wan;
    double mean = 0.0;
    double sd = 0.0;
    ShiftRecord shift;
    std::optional<FamilyParams> selected;     // qe, abc
    std::optional<double> objective;          // qe
    std::optional<double> lambda;             // bc
    std::optional<bool> heavy_truncation;     // bc
    std::optional<double> posterior_prob;     // abc
};

EstimateResult estimate(const QuantileSummary& summary, Method method,
                        const EstimatorConfig& config = {});

}  // namespace qmest
