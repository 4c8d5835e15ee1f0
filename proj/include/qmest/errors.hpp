#pragma once

#include <stdexcept>
#include <string>

namespace qmest {

// Argument outside the mathematical domain of a function (p outside (0,1),
// non-positive Box-Cox input, invalid distribution parameters).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A summary failed validation; what() lists every violation.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Method-of-moments system has no solution for the requested family.
class FitInfeasible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An estimator could not produce a mean/SD for a summary.
class EstimationFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller broke an interface contract (mismatched scenarios, too few studies).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace qmest
