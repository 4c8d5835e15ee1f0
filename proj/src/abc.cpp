#include "qmest/abc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qmest/errors.hpp"
#include "qmest/parallel.hpp"
#include "qmest/qe.hpp"
#include "qmest/rng.hpp"
#include "qmest/sim.hpp"

namespace qmest {

namespace {

struct Draw {
    double theta1 = 0.0;
    double theta2 = 0.0;
    double distance = std::numeric_limits<double>::infinity();
};

double spread(const QuantileSummary& s) {
    return s.scenario == Scenario::s2 ? *s.q3 - *s.q1 : *s.q_max - *s.q_min;
}

}  // namespace

optim::Box abc_prior_box(const QuantileSummary& summary, Family family) {
    if (family != Family::exponential) return qe_box(summary, family);
    // Rate bounded like the gamma rate; theta2 is unused and pinned at 1.
    return {{1e-3 + 1e-9, 1.0}, {100.0 - 1e-9, 1.0}};
}

double abc_distance(const QuantileSummary& observed, const QuantileSummary& pseudo) {
    if (observed.scenario != pseudo.scenario) throw ContractError("abc_distance: scenarios differ");
    if (observed.n != pseudo.n) throw ContractError("abc_distance: sample sizes differ");
    double scale = spread(observed);
    if (!(scale > 0.0)) scale = 1.0;  // zero-spread summary: fall back to raw units
    const auto a = observed.values();
    const auto b = pseudo.values();
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = (a[i] - b[i]) / scale;
        ss += d * d;
    }
    return std::sqrt(ss);
}

AbcResult abc_estimate(const QuantileSummary& summary, const AbcConfig& config) {
    require_valid(summary);
    if (config.candidates.empty()) throw ContractError("abc_estimate: no candidate families");
    if (config.n_iter == 0) throw ContractError("abc_estimate: n_iter must be positive");
    if (!(config.accept_fraction > 0.0 && config.accept_fraction < 1.0)) {
        throw ContractError("abc_estimate: accept_fraction must lie in (0, 1)");
    }
    const auto [observed, record] = apply_shift(summary, config.shift);

    const std::size_t n_fam = config.candidates.size();
    const std::size_t total = n_fam * config.n_iter;
    std::vector<Draw> draws(total);
    std::vector<optim::Box> boxes;
    for (Family f : config.candidates) boxes.push_back(abc_prior_box(observed, f));

    const std::size_t n = static_cast<std::size_t>(observed.n);
    constexpr std::size_t kBlock = 256;
    const std::size_t blocks_per_family = (config.n_iter + kBlock - 1) / kBlock;
    parallel_for(n_fam * blocks_per_family, config.threads, [&](std::size_t job) {
        const std::size_t fi = job / blocks_per_family;
        const std::size_t block = job % blocks_per_family;
        const auto& box = boxes[fi];
        const bool empty_box = !(box.lower[0] <= box.upper[0] && box.lower[1] <= box.upper[1]);
        std::vector<double> data(n);
        const std::size_t begin = block * kBlock;
        const std::size_t end = std::min(config.n_iter, begin + kBlock);
        for (std::size_t it = begin; it < end; ++it) {
            Draw& d = draws[fi * config.n_iter + it];
            if (empty_box) continue;  // candidate cannot be proposed; stays at +inf
            Rng rng(derive_seed(derive_seed(config.seed, fi), it));
            d.theta1 = box.lower[0] + (box.upper[0] - box.lower[0]) * rng.uniform();
            d.theta2 = box.lower[1] + (box.upper[1] - box.lower[1]) * rng.uniform();
            const FamilyParams p{config.candidates[fi], d.theta1, d.theta2};
            for (auto& x : data) x = draw(p, rng);
            const auto pseudo = sample_summary(data, observed.scenario);
            const double dist = abc_distance(observed, pseudo);
            d.distance = std::isfinite(dist) ? dist : std::numeric_limits<double>::infinity();
        }
    });

    std::size_t k = static_cast<std::size_t>(std::ceil(config.accept_fraction * static_cast<double>(total)));
    k = std::clamp<std::size_t>(k, 1, total);
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (draws[a].distance != draws[b].distance)
                              return draws[a].distance < draws[b].distance;
                          return a < b;
                      });

    AbcResult out;
    out.shift = record;
    out.families.resize(n_fam);
    std::vector<double> sum1(n_fam, 0.0), sum2(n_fam, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t idx = order[j];
        if (!std::isfinite(draws[idx].distance)) break;
        const std::size_t fi = idx / config.n_iter;
        ++out.families[fi].accepted;
        sum1[fi] += draws[idx].theta1;
        sum2[fi] += draws[idx].theta2;
        ++out.accepted_total;
        if (config.keep_accepted) {
            out.accepted.push_back({{config.candidates[fi], draws[idx].theta1, draws[idx].theta2},
                                    draws[idx].distance});
        }
    }
    if (out.accepted_total == 0) throw ContractError("abc_estimate: nothing was accepted");

    std::size_t best = 0;
    for (std::size_t fi = 0; fi < n_fam; ++fi) {
        auto& fam = out.families[fi];
        fam.family = config.candidates[fi];
        fam.probability = static_cast<double>(fam.accepted) / static_cast<double>(out.accepted_total);
        fam.posterior_mean.family = fam.family;
        if (fam.accepted > 0) {
            fam.posterior_mean.theta1 = sum1[fi] / static_cast<double>(fam.accepted);
            fam.posterior_mean.theta2 = sum2[fi] / static_cast<double>(fam.accepted);
        }
        if (fam.accepted > out.families[best].accepted) best = fi;
    }
    const auto& sel = out.families[best];
    out.selected = sel.family;
    out.params = sel.posterior_mean;
    out.posterior_prob = sel.probability;
    const Moments m = moments(sel.posterior_mean);
    if (!std::isfinite(m.mean) || !std::isfinite(m.sd)) {
        throw EstimationFailed("ABC: posterior-mean parameters have infinite moments");
    }
    out.mean = m.mean - record.c;
    out.sd = m.sd;
    return out;
}

}  // namespace qmest
