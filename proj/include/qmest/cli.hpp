#pragma once

#include <iosfwd>

namespace qmest::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 2;     // bad flags, invalid summaries, unreadable input
inline constexpr int kExitEstimation = 3;  // an estimator could not produce a result

/// Worker count: hardware concurrency, capped by QM_THREADS when it is set.
unsigned thread_budget();

/// Entry point behind the qmest executable. `in` serves `--input -`.
int run(int argc, const char* const* argv, std::istream& in, std::ostream& out,
        std::ostream& err);

}  // namespace qmest::cli
