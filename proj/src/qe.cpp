#include "qmest/qe.hpp"

#include <cmath>
#include <limits>

#include "qmest/errors.hpp"
#include "qmest/formula.hpp"

namespace qmest {

namespace {

constexpr double kShrink = 1e-9;

FamilyParams make(Family f, const std::vector<double>& x) { return {f, x[0], x[1]}; }

// Starting point for a beta fit whose method-of-moments system has no
// solution (reported values outside (0, 1)): the uniform distribution.
constexpr double kBetaFallbackStart = 1.0;

}  // namespace

std::vector<double> qe_probabilities(Scenario scenario, long n) {
    const double lo = 1.0 / static_cast<double>(n);
    switch (scenario) {
        case Scenario::s1: return {lo, 0.5, 1.0 - lo};
        case Scenario::s2: return {0.25, 0.5, 0.75};
        case Scenario::s3: return {lo, 0.25, 0.5, 0.75, 1.0 - lo};
    }
    return {};
}

double qe_objective(const QuantileSummary& summary, const FamilyParams& params) {
    check_params(params);
    const auto probs = qe_probabilities(summary.scenario, summary.n);
    const auto vals = summary.values();
    double s = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double d = quantile(params, probs[i]) - vals[i];
        s += d * d;
    }
    return s;
}

optim::Box qe_box(const QuantileSummary& s, Family family) {
    const bool s1 = s.scenario == Scenario::s1;
    const double lo = s1 ? *s.q_min : *s.q1;
    const double hi = s1 ? *s.q_max : *s.q3;
    const auto open = [](double a, double b) {
        return std::pair{a + kShrink, b - kShrink};
    };
    std::pair<double, double> a, b;
    switch (family) {
        case Family::normal:
            a = open(lo, hi);
            b = open(1e-3, 50.0);
            break;
        case Family::log_normal:
            if (lo > 0.0) {
                a = open(std::log(lo), std::log(hi));
            } else {
                a = {1.0, 0.0};  // log of a non-positive quantile: no box
            }
            b = open(1e-3, 50.0);
            break;
        case Family::gamma:
            a = b = open(1e-3, 100.0);
            break;
        case Family::beta:
            a = b = open(1e-3, 40.0);
            break;
        case Family::weibull:
            a = b = open(1e-3, 100.0);
            break;
        case Family::exponential:
            throw ContractError("exponential is not a quantile-matching candidate");
    }
    return {{a.first, b.first}, {a.second, b.second}};
}

QeFit qe_fit(const QuantileSummary& summary, Family family) {
    require_valid(summary);
    QeFit fit;
    fit.params.family = family;
    fit.objective = std::numeric_limits<double>::infinity();

    const optim::Box box = qe_box(summary, family);
    for (std::size_t i = 0; i < box.dim(); ++i) {
        if (!(box.lower[i] < box.upper[i])) {
            fit.note = "parameter box is empty for this summary";
            return fit;
        }
    }

    std::vector<double> start;
    try {
        const auto init = mom_fit(family, luo_mean(summary), wan_sd(summary));
        start = {init.theta1, init.theta2};
    } catch (const FitInfeasible& e) {
        if (family != Family::beta) {
            fit.note = e.what();
            return fit;
        }
        start = {kBetaFallbackStart, kBetaFallbackStart};
    }
    start = box.clamp(start);

    const optim::Objective objective = [&](const std::vector<double>& x) {
        return qe_objective(summary, make(family, x));
    };

    // Quasi-Newton from the moment start; a Nelder-Mead pass then checks the
    // stopping point, and quasi-Newton restarts from wherever it lands if
    // that is lower (the quantile surfaces have long curved valleys).
    auto qn = optim::quasi_newton_box(objective, start, box);
    auto nm = optim::nelder_mead_box(objective, qn.x, box);
    optim::MinimizeResult best = qn;
    if (nm.value < qn.value) {
        auto qn2 = optim::quasi_newton_box(objective, nm.x, box);
        best = qn2.value <= nm.value ? qn2 : nm;
        best.converged = qn2.converged || nm.converged;
    } else {
        best.converged = qn.converged || nm.converged;
    }

    fit.params = make(family, best.x);
    fit.objective = best.value;
    fit.converged = best.converged && std::isfinite(best.value);
    if (!fit.converged) fit.note = "minimiser did not converge";
    return fit;
}

QeResult qe_estimate(const QuantileSummary& summary, const ShiftPolicy& policy) {
    require_valid(summary);
    const auto [shifted, record] = apply_shift(summary, policy);

    QeResult out;
    out.shift = record;
    const QeFit* best = nullptr;
    Moments best_m;
    out.fits.reserve(kCandidateFamilies.size());
    for (Family f : kCandidateFamilies) out.fits.push_back(qe_fit(shifted, f));
    for (const auto& fit : out.fits) {
        if (!fit.converged) continue;
        const Moments m = moments(fit.params);
        // A fit whose moments overflow cannot report an estimate.
        if (!std::isfinite(m.mean) || !(m.sd > 0.0) || !std::isfinite(m.sd)) continue;
        if (!best || fit.objective < best->objective) {
            best = &fit;
            best_m = m;
        }
    }
    if (!best) throw EstimationFailed("quantile estimation: no candidate family converged");
    out.selected = best->params;
    out.objective = best->objective;
    out.mean = best_m.mean - record.c;
    out.sd = best_m.sd;
    return out;
}

}  // namespace qmest
