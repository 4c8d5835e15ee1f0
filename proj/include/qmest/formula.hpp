#pragma once

#include <array>

#include "qmest/summaries.hpp"

namespace qmest {

/// Weights of the Luo et al. mean estimator, applied to
/// {(q_min+q_max)/2, (q1+q3)/2, q2}. Unused terms carry weight 0.
std::array<double, 3> luo_weights(Scenario scenario, double n);

/// Luo et al. sample-mean estimate. Throws ValidationError on an invalid summary.
double luo_mean(const QuantileSummary& summary);

/// Wan et al. sample-SD estimate. Throws ValidationError on an invalid summary.
double wan_sd(const QuantileSummary& summary);

}  // namespace qmest
