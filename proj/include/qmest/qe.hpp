#pragma once

#include <string>
#include <vector>

#include "qmest/dists.hpp"
#include "qmest/optim.hpp"
#include "qmest/summaries.hpp"

namespace qmest {

/// One candidate family's least-squares quantile fit.
struct QeFit {
    FamilyParams params;
    double objective = 0.0;
    bool converged = false;
    std::string note;  // why the candidate was excluded, when it was
};

struct QeResult {
    double mean = 0.0;
    double sd = 0.0;
    FamilyParams selected;
    double objective = 0.0;
    std::vector<QeFit> fits;  // one per candidate, in kCandidateFamilies order
    ShiftRecord shift;
};

/// Probability points matched in each scenario:
/// s1 {1/n, .5, 1-1/n}; s2 {.25, .5, .75}; s3 {1/n, .25, .5, .75, 1-1/n}.
std::vector<double> qe_probabilities(Scenario scenario, long n);

/// Sum of squared differences between the family's quantiles and the
/// reported ones. Never throws for quantiles outside the family's support.
double qe_objective(const QuantileSummary& summary, const FamilyParams& params);

/// Parameter box for a family given the summary (open intervals shrunk by 1e-9).
/// Empty (lower > upper) when the summary makes the box degenerate.
optim::Box qe_box(const QuantileSummary& summary, Family family);

/// Fit one family by box-constrained minimisation from its method-of-moments
/// start. Excluded candidates come back with converged == false.
QeFit qe_fit(const QuantileSummary& summary, Family family);

/// Fit every candidate, select the smallest converged objective, report its
/// moments. Throws EstimationFailed when no candidate converges.
QeResult qe_estimate(const QuantileSummary& summary, const ShiftPolicy& shift = {});

}  // namespace qmest
