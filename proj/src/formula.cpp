#include "qmest/formula.hpp"

#include <cmath>

#include "qmest/dists.hpp"

namespace qmest {

std::array<double, 3> luo_weights(Scenario scenario, double n) {
    switch (scenario) {
        case Scenario::s1: {
            const double w = 4.0 / (4.0 + std::pow(n, 0.75));
            return {w, 0.0, 1.0 - w};
        }
        case Scenario::s2: {
            const double w = 0.7 + 0.39 / n;
            return {0.0, w, 0.3 - 0.39 / n};
        }
        case Scenario::s3: {
            const double w_ext = 2.2 / (2.2 + std::pow(n, 0.75));
            const double w_quart = 0.7 - 0.72 / std::pow(n, 0.55);
            return {w_ext, w_quart, 0.3 + 0.72 / std::pow(n, 0.55) - w_ext};
        }
    }
    return {0.0, 0.0, 1.0};
}

double luo_mean(const QuantileSummary& s) {
    require_valid(s);
    const auto w = luo_weights(s.scenario, static_cast<double>(s.n));
    double mean = w[2] * s.q2;
    if (s.scenario != Scenario::s2) mean += w[0] * (*s.q_min + *s.q_max) / 2.0;
    if (s.scenario != Scenario::s1) mean += w[1] * (*s.q1 + *s.q3) / 2.0;
    return mean;
}

double wan_sd(const QuantileSummary& s) {
    require_valid(s);
    const double n = static_cast<double>(s.n);
    const auto range_term = [&](double denom) {
        return (*s.q_max - *s.q_min) / (denom * normal_quantile((n - 0.375) / (n + 0.25)));
    };
    const auto iqr_term = [&](double denom) {
        return (*s.q3 - *s.q1) / (denom * normal_quantile((0.75 * n - 0.125) / (n + 0.25)));
    };
    switch (s.scenario) {
        case Scenario::s1: return range_term(2.0);
        case Scenario::s2: return iqr_term(2.0);
        case Scenario::s3: return range_term(4.0) + iqr_term(4.0);
    }
    return 0.0;
}

}  // namespace qmest
