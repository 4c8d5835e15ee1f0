#pragma once

#include <vector>

#include "qmest/summaries.hpp"

namespace qmest {

/// Five-number summaries of PHQ-9 scores from the 58 primary studies of the
/// DEPRESSD individual participant data meta-analysis, in publication order.
/// Every row is an S3 summary; slice with QuantileSummary::as().
const std::vector<StudyRow>& table_s1();

}  // namespace qmest
