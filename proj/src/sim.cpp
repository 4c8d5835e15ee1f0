#include "qmest/sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

#include "qmest/errors.hpp"
#include "qmest/parallel.hpp"
#include "qmest/rng.hpp"

namespace qmest {

namespace {

// Interpolated order statistic at 1-based fractional position h, clamped to
// [1, n]. Reorders v.
double order_stat(std::vector<double>& v, double h) {
    const std::size_t n = v.size();
    h = std::clamp(h, 1.0, static_cast<double>(n));
    const double fl = std::floor(h);
    const auto lo = static_cast<std::size_t>(fl) - 1;
    const double frac = h - fl;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
    const double a = v[lo];
    if (frac == 0.0 || lo + 1 >= n) return a;
    const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
    return a + frac * (b - a);
}

double position(QuantileRule rule, std::size_t n, double p) {
    const double nn = static_cast<double>(n);
    return rule == QuantileRule::linear ? (nn - 1.0) * p + 1.0 : nn * p + 0.5;
}

std::string format_number(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

double sample_mean(std::span<const double> x) {
    double m = 0.0;
    std::size_t k = 0;
    for (double v : x) m += (v - m) / static_cast<double>(++k);
    return m;
}

double sample_sd(std::span<const double> x, double mean) {
    if (x.size() < 2) return 0.0;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

struct RepOutcome {
    // Per estimator: relative errors, or nullopt when it threw.
    std::vector<std::optional<std::pair<double, double>>> errors;
};

}  // namespace

QuantileSummary sample_summary(std::span<const double> data, Scenario scenario, QuantileRule rule) {
    if (data.empty()) throw DomainError("sample_summary: empty data");
    std::vector<double> v(data.begin(), data.end());
    const std::size_t n = v.size();
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    const double q_min = *mn;
    const double q_max = *mx;
    const long nl = static_cast<long>(n);
    const double q3 = scenario == Scenario::s1 ? 0.0 : order_stat(v, position(rule, n, 0.75));
    const double q2 = order_stat(v, position(rule, n, 0.5));
    const double q1 = scenario == Scenario::s1 ? 0.0 : order_stat(v, position(rule, n, 0.25));
    switch (scenario) {
        case Scenario::s1: return QuantileSummary::s1(q_min, q2, q_max, nl);
        case Scenario::s2: return QuantileSummary::s2(q1, q2, q3, nl);
        case Scenario::s3: return QuantileSummary::s3(q_min, q1, q2, q3, q_max, nl);
    }
    return {};
}

double relative_error(double estimate, double truth) {
    if (truth == 0.0) throw DomainError("relative_error: truth is zero");
    return (estimate - truth) / truth;
}

std::string_view target_name(Target t) { return t == Target::mean ? "mean" : "sd"; }

std::string distribution_tag(const FamilyParams& params) {
    std::string tag(family_name(params.family));
    tag += ':' + format_number(params.theta1);
    if (params.family != Family::exponential) tag += ':' + format_number(params.theta2);
    return tag;
}

std::optional<FamilyParams> parse_distribution_tag(std::string_view tag) {
    std::vector<std::string_view> parts;
    for (std::size_t start = 0;;) {
        const auto colon = tag.find(':', start);
        parts.push_back(tag.substr(start, colon - start));
        if (colon == std::string_view::npos) break;
        start = colon + 1;
    }
    const auto fam = parse_family(parts[0]);
    if (!fam) return std::nullopt;
    const std::size_t want = *fam == Family::exponential ? 2 : 3;
    if (parts.size() != want) return std::nullopt;
    double th[2] = {0.0, 1.0};
    for (std::size_t i = 1; i < want; ++i) {
        const auto s = parts[i];
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), th[i - 1]);
        if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    }
    FamilyParams p{*fam, th[0], th[1]};
    if (!params_valid(p)) return std::nullopt;
    return p;
}

double AreRecord::standard_error() const {
    return reps == 0 ? std::numeric_limits<double>::quiet_NaN()
                     : are_sd / std::sqrt(static_cast<double>(reps));
}

std::vector<AreRecord> run_cell_with(const SimCell& cell,
                                     const std::vector<NamedEstimator>& estimators) {
    check_params(cell.distribution);
    if (cell.reps == 0) throw ContractError("run_cell: reps must be at least 1");
    if (cell.n < 2) throw ContractError("run_cell: n must be at least 2");
    const auto n = static_cast<std::size_t>(cell.n);
    // Negative draws are only possible for the normal family.
    const bool shift_half = cell.distribution.family == Family::normal;

    std::vector<RepOutcome> reps(cell.reps);
    parallel_for(cell.reps, cell.threads, [&](std::size_t r) {
        const std::uint64_t seed_r = derive_seed(cell.master_seed, r);
        const auto data = sample(cell.distribution, n, seed_r);
        const double true_mean = sample_mean(data);
        const double true_sd = sample_sd(data, true_mean);
        auto summary = sample_summary(data, cell.scenario, cell.rule);
        ShiftRecord shift;
        if (shift_half) std::tie(summary, shift) = shift_to_half(summary);
        auto& out = reps[r].errors;
        out.resize(estimators.size());
        for (std::size_t m = 0; m < estimators.size(); ++m) {
            try {
                const RepContext ctx{summary, data, shift, derive_seed(seed_r, m + 1)};
                const Moments est = estimators[m].run(ctx);
                const double e_mean = relative_error(est.mean - shift.c, true_mean);
                const double e_sd = relative_error(est.sd, true_sd);
                if (std::isfinite(e_mean) && std::isfinite(e_sd)) out[m] = std::pair{e_mean, e_sd};
            } catch (const std::exception&) {
                // Counted as a failure below.
            }
        }
    });

    std::vector<AreRecord> records;
    for (std::size_t m = 0; m < estimators.size(); ++m) {
        for (Target t : {Target::mean, Target::sd}) {
            AreRecord rec;
            rec.method = estimators[m].name;
            rec.target = t;
            rec.scenario = cell.scenario;
            rec.distribution = cell.distribution;
            rec.n = cell.n;
            std::vector<double> errs;
            errs.reserve(cell.reps);
            for (const auto& rep : reps) {
                if (!rep.errors[m]) {
                    ++rec.failures;
                    continue;
                }
                errs.push_back(t == Target::mean ? rep.errors[m]->first : rep.errors[m]->second);
            }
            rec.reps = errs.size();
            if (errs.empty()) {
                rec.are_mean = rec.are_sd = std::numeric_limits<double>::quiet_NaN();
            } else {
                double sum = 0.0;
                for (double e : errs) sum += e;
                rec.are_mean = sum / static_cast<double>(errs.size());
                rec.are_sd = sample_sd(errs, rec.are_mean);
            }
            if (cell.keep_errors) rec.errors = std::move(errs);
            records.push_back(std::move(rec));
        }
    }
    return records;
}

std::vector<AreRecord> run_cell(const SimCell& cell) {
    std::vector<NamedEstimator> estimators;
    for (Method method : cell.methods) {
        estimators.push_back({std::string(method_name(method)), [&cell, method](const RepContext& ctx) {
                                  EstimatorConfig cfg = cell.config;
                                  cfg.seed = ctx.seed;
                                  cfg.threads = 1;
                                  const auto r = estimate(ctx.summary, method, cfg);
                                  // estimate() already removed its own shift; the
                                  // harness removes the shift_to_half constant.
                                  return Moments{r.mean, r.sd};
                              }});
    }
    return run_cell_with(cell, estimators);
}

std::vector<FamilyParams> grid_distributions(GridSet set) {
    if (set == GridSet::primary) {
        return {{Family::normal, 5.0, 1.0},
                {Family::log_normal, 5.0, 0.25},
                {Family::log_normal, 5.0, 0.5},
                {Family::log_normal, 5.0, 1.0}};
    }
    return {{Family::normal, 50.0, 17.0},
            {Family::log_normal, 4.0, 0.3},
            {Family::exponential, 10.0, 1.0},
            {Family::beta, 9.0, 4.0},
            {Family::weibull, 2.0, 35.0}};
}

std::vector<long> grid_sample_sizes() {
    std::vector<long> out{25, 50, 75, 100};
    for (long n = 150; n <= 1000; n += 50) out.push_back(n);
    return out;
}

std::vector<AreRecord> run_grid(const GridOptions& options) {
    std::vector<SimCell> cells;
    for (const auto& dist : grid_distributions(options.set)) {
        for (Scenario sc : options.scenarios) {
            for (long n : options.n_values) {
                SimCell c;
                c.distribution = dist;
                c.scenario = sc;
                c.n = n;
                c.reps = options.reps;
                c.methods = options.methods;
                c.master_seed = options.master_seed;
                c.config = options.config;
                c.rule = options.rule;
                cells.push_back(c);
            }
        }
    }
    // Cells in parallel when there are enough of them, otherwise repetitions.
    const unsigned threads = options.threads == 0 ? default_threads() : options.threads;
    const bool by_cell = cells.size() >= threads;
    std::vector<std::vector<AreRecord>> per_cell(cells.size());
    parallel_for(cells.size(), by_cell ? threads : 1, [&](std::size_t i) {
        SimCell c = cells[i];
        c.threads = by_cell ? 1 : threads;
        per_cell[i] = run_cell(c);
    });
    std::vector<AreRecord> out;
    for (auto& recs : per_cell) {
        for (auto& r : recs) out.push_back(std::move(r));
    }
    return out;
}

void write_are_csv(std::ostream& out, const std::vector<AreRecord>& records) {
    out << "method,target,scenario,distribution,n,reps,failures,are,are_sd\n";
    for (const auto& r : records) {
        out << r.method << ',' << target_name(r.target) << ',' << scenario_name(r.scenario) << ','
            << distribution_tag(r.distribution) << ',' << r.n << ',' << r.reps << ',' << r.failures
            << ',' << format_number(r.are_mean) << ',' << format_number(r.are_sd) << '\n';
    }
}

}  // namespace qmest
