#include "qmest/meta.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <nlohmann/json.hpp>

#include "qmest/errors.hpp"
#include "qmest/parallel.hpp"
#include "qmest/rng.hpp"

namespace qmest {

namespace {

constexpr double kZ975 = 1.959963984540054;

struct Sums {
    double w = 0.0, w2 = 0.0, w3 = 0.0, wy = 0.0;
};

Sums weight_sums(const std::vector<StudyEffect>& e, double tau2) {
    Sums s;
    for (const auto& x : e) {
        const double w = 1.0 / (x.variance() + tau2);
        s.w += w;
        s.w2 += w * w;
        s.w3 += w * w * w;
        s.wy += w * x.mean;
    }
    return s;
}

double restricted_loglik(const std::vector<StudyEffect>& e, double tau2) {
    const Sums s = weight_sums(e, tau2);
    const double mu = s.wy / s.w;
    double ll = -0.5 * std::log(s.w);
    for (const auto& x : e) {
        const double vt = x.variance() + tau2;
        ll -= 0.5 * (std::log(vt) + (x.mean - mu) * (x.mean - mu) / vt);
    }
    return ll;
}

void check_effects(const std::vector<StudyEffect>& effects) {
    if (effects.size() < 2) throw ContractError("meta-analysis needs at least 2 studies");
    for (const auto& e : effects) {
        const double v = e.variance();
        if (!(v > 0.0) || !std::isfinite(v) || !std::isfinite(e.mean)) {
            throw DomainError("study '" + e.study_id + "': within-study variance must be positive");
        }
    }
}

// Canonical order so sums, and therefore every output bit, ignore input order.
void canonical_sort(std::vector<StudyEffect>& e) {
    std::sort(e.begin(), e.end(), [](const StudyEffect& a, const StudyEffect& b) {
        return std::tie(a.mean, a.sd, a.n, a.study_id) < std::tie(b.mean, b.sd, b.n, b.study_id);
    });
}

struct RemlFit {
    double tau2 = 0.0;
    int iterations = 0;
};

RemlFit reml_fit(const std::vector<StudyEffect>& e) {
    // DerSimonian-Laird start.
    const Sums f = weight_sums(e, 0.0);
    const double mu_fe = f.wy / f.w;
    double q = 0.0;
    for (const auto& x : e) q += (x.mean - mu_fe) * (x.mean - mu_fe) / x.variance();
    const double k = static_cast<double>(e.size());
    double tau2 = std::max(0.0, (q - (k - 1.0)) / (f.w - f.w2 / f.w));

    constexpr int kMaxIter = 1000;
    for (int it = 1; it <= kMaxIter; ++it) {
        const Sums s = weight_sums(e, tau2);
        const double mu = s.wy / s.w;
        double wr2 = 0.0;
        for (const auto& x : e) {
            const double w = 1.0 / (x.variance() + tau2);
            wr2 += w * w * (x.mean - mu) * (x.mean - mu);
        }
        const double score = 0.5 * (wr2 - s.w + s.w2 / s.w);
        const double info = 0.5 * (s.w2 - 2.0 * s.w3 / s.w + (s.w2 * s.w2) / (s.w * s.w));
        double step = info > 0.0 ? score / info : 0.0;
        double next = std::max(0.0, tau2 + step);
        const double ll0 = restricted_loglik(e, tau2);
        for (int h = 0; h < 60 && restricted_loglik(e, next) < ll0; ++h) {
            step *= 0.5;
            next = std::max(0.0, tau2 + step);
        }
        const double delta = next - tau2;
        tau2 = next;
        if (std::fabs(delta) <= 1e-10 * std::max(1.0, tau2)) return {tau2, it};
    }
    throw EstimationFailed("REML did not converge");
}

}  // namespace

double StudyEffect::variance() const { return sd * sd / static_cast<double>(n); }

double reml_tau2(const std::vector<StudyEffect>& effects) {
    check_effects(effects);
    auto e = effects;
    canonical_sort(e);
    return reml_fit(e).tau2;
}

MetaResult pool(std::vector<StudyEffect> effects) {
    check_effects(effects);
    canonical_sort(effects);
    const RemlFit fit = reml_fit(effects);

    MetaResult r;
    r.k = effects.size();
    r.tau2 = fit.tau2;
    r.reml_iterations = fit.iterations;
    const Sums s = weight_sums(effects, fit.tau2);
    r.pooled_mean = s.wy / s.w;
    r.se = 1.0 / std::sqrt(s.w);
    r.ci_low = r.pooled_mean - kZ975 * r.se;
    r.ci_high = r.pooled_mean + kZ975 * r.se;

    const Sums f = weight_sums(effects, 0.0);
    const double mu_fe = f.wy / f.w;
    for (const auto& x : effects) r.q_stat += (x.mean - mu_fe) * (x.mean - mu_fe) / x.variance();
    const double k = static_cast<double>(r.k);
    const double typical_v = (k - 1.0) * f.w / (f.w * f.w - f.w2);
    r.i2 = r.tau2 == 0.0 ? 0.0 : 100.0 * r.tau2 / (r.tau2 + typical_v);
    return r;
}

double bowley(const QuantileSummary& summary) {
    if (!summary.q1 || !summary.q3) throw ContractError("bowley: q1 and q3 are required");
    const double q1 = *summary.q1, q3 = *summary.q3;
    if (q3 == q1) throw DomainError("bowley: q3 equals q1");
    return (q3 + q1 - 2.0 * summary.q2) / (q3 - q1);
}

EstimatorConfig pooling_config(std::uint64_t seed) {
    EstimatorConfig cfg;
    cfg.shift = {ShiftMode::always, 0.5};
    cfg.seed = seed;
    return cfg;
}

PooledAnalysis derive_and_pool(const std::vector<StudyRow>& studies, Method method,
                               Scenario scenario, const EstimatorConfig& config,
                               FailurePolicy policy) {
    if (studies.size() < 2) throw ContractError("meta-analysis needs at least 2 studies");
    PooledAnalysis out;
    std::vector<DerivedStudy> derived(studies.size());
    std::vector<std::string> failures(studies.size());
    parallel_for(studies.size(), config.threads, [&](std::size_t i) {
        const auto& row = studies[i];
        EstimatorConfig cfg = config;
        cfg.seed = derive_seed(config.seed, i);
        cfg.threads = 1;
        try {
            const auto summary = row.summary.as(scenario);
            const auto est = estimate(summary, method, cfg);
            derived[i] = {{row.study_id, est.mean, est.sd, summary.n}, est};
        } catch (const std::exception& ex) {
            failures[i] = ex.what();
        }
    });
    for (std::size_t i = 0; i < studies.size(); ++i) {
        if (failures[i].empty()) {
            out.studies.push_back(std::move(derived[i]));
        } else if (policy == FailurePolicy::raise) {
            throw EstimationFailed("study '" + studies[i].study_id + "': " + failures[i]);
        } else {
            out.skipped.push_back({studies[i].study_id, failures[i]});
        }
    }
    std::vector<StudyEffect> effects;
    for (const auto& d : out.studies) effects.push_back(d.effect);
    out.result = pool(std::move(effects));
    return out;
}

nlohmann::json to_json(const EstimateResult& r) {
    nlohmann::json j;
    j["method"] = method_name(r.method);
    j["mean"] = r.mean;
    j["sd"] = r.sd;
    j["shift"] = {{"applied", r.shift.applied}, {"c", r.shift.c}};
    if (r.selected) {
        j["selected_family"] = family_name(r.selected->family);
        j["params"] = {r.selected->theta1, r.selected->theta2};
    }
    if (r.objective) j["objective"] = *r.objective;
    if (r.lambda) j["lambda"] = *r.lambda;
    if (r.heavy_truncation) j["heavy_truncation"] = *r.heavy_truncation;
    if (r.posterior_prob) j["posterior_prob"] = *r.posterior_prob;
    return j;
}

nlohmann::json to_json(const MetaResult& r) {
    return {{"pooled_mean", r.pooled_mean}, {"ci", {r.ci_low, r.ci_high}}, {"se", r.se},
            {"tau2", r.tau2},               {"q", r.q_stat},               {"i2", r.i2},
            {"k", r.k}};
}

nlohmann::json to_json(const PooledAnalysis& a, Method method, Scenario scenario) {
    nlohmann::json j = to_json(a.result);
    j["method"] = method_name(method);
    j["scenario"] = scenario_name(scenario);
    auto studies = nlohmann::json::array();
    for (const auto& d : a.studies) {
        auto s = to_json(d.estimate);
        s["study_id"] = d.effect.study_id;
        s["n"] = d.effect.n;
        s["variance"] = d.effect.variance();
        studies.push_back(std::move(s));
    }
    j["studies"] = std::move(studies);
    auto skipped = nlohmann::json::array();
    for (const auto& s : a.skipped) skipped.push_back({{"study_id", s.study_id}, {"reason", s.reason}});
    j["skipped"] = std::move(skipped);
    return j;
}

}  // namespace qmest
