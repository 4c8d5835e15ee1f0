#pragma once

#include <functional>
#include <limits>
#include <vector>

namespace qmest::optim {

using Objective = std::function<double(const std::vector<double>&)>;

struct Box {
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t dim() const { return lower.size(); }
    std::vector<double> clamp(std::vector<double> x) const;
    bool contains(const std::vector<double>& x) const;
};

struct MinimizeResult {
    std::vector<double> x;
    double value = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
    int evaluations = 0;
};

struct QuasiNewtonOptions {
    // Stop when (f_k - f_{k+1}) <= factr * eps * max(|f_k|, |f_{k+1}|, 1).
    double factr = 1e7;
    // Stop when the projected gradient's max-norm falls below this.
    double pgtol = 0.0;
    // Central-difference step is rel_step * max(1, |x_i|).
    double rel_step = 1e-6;
    int max_iterations = 500;
};

/// Box-constrained quasi-Newton (projected BFGS with an Armijo search along
/// the projected path) using central-difference gradients. Non-finite
/// objective values are treated as +inf. `converged` is false when the line
/// search cannot make progress or the iteration limit is reached.
MinimizeResult quasi_newton_box(const Objective& f, std::vector<double> x0, const Box& box,
                                const QuasiNewtonOptions& options = {});

struct NelderMeadOptions {
    double initial_step = 0.1;  // relative to max(|x_i|, 1e-3 * box width)
    double x_tol = 1e-10;
    double f_tol = 1e-14;
    int max_evaluations = 4000;
};

/// Nelder-Mead with every trial point projected onto the box.
MinimizeResult nelder_mead_box(const Objective& f, std::vector<double> x0, const Box& box,
                               const NelderMeadOptions& options = {});

struct ScalarMinimum {
    double x = 0.0;
    double value = 0.0;
    int evaluations = 0;
};

/// Brent's derivative-free minimizer on [a, b]: golden-section steps mixed
/// with successive parabolic interpolation. `tol` is the absolute tolerance
/// on x (plus the usual sqrt(eps)-relative term).
ScalarMinimum brent_minimize(const std::function<double(double)>& f, double a, double b,
                             double tol = 1e-8);

}  // namespace qmest::optim
