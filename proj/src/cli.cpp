#include "qmest/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "qmest/errors.hpp"
#include "qmest/estimate.hpp"
#include "qmest/meta.hpp"
#include "qmest/parallel.hpp"
#include "qmest/rng.hpp"
#include "qmest/sim.hpp"
#include "qmest/table_s1.hpp"

namespace qmest::cli {

namespace {

const std::vector<std::string> kMethodNames{"luo_wan", "qe", "bc", "abc"};
const std::vector<std::string> kScenarioNames{"s1", "s2", "s3"};
const std::vector<std::string> kShiftModes{"if_nonpositive", "always", "none"};

struct EstimatorFlags {
    double shift = 0.5;
    std::string shift_mode;
    std::uint64_t seed = kDefaultSeed;
    std::size_t mc_draws = 100000;
    std::size_t abc_iter = 50000;
    double abc_accept = 0.001;

    EstimatorConfig config() const {
        EstimatorConfig c;
        c.shift.c = shift;
        c.shift.mode = shift_mode == "always"   ? ShiftMode::always
                       : shift_mode == "none" ? ShiftMode::none
                                              : ShiftMode::if_nonpositive;
        c.seed = seed;
        c.mc_draws = mc_draws;
        c.abc_n_iter = abc_iter;
        c.abc_accept_fraction = abc_accept;
        c.threads = 1;
        return c;
    }
};

void add_estimator_flags(CLI::App* app, EstimatorFlags& f, const std::string& shift_mode,
                         const std::string& seed_help = "Seed for the bc Monte Carlo step and for abc") {
    f.shift_mode = shift_mode;
    app->add_option("--shift", f.shift, "Constant added to the quantiles by the shift protocol")
        ->check(CLI::PositiveNumber);
    app->add_option("--shift-mode", f.shift_mode,
                    "When to shift: if_nonpositive (lowest quantile <= 0), always, none")
        ->check(CLI::IsMember(kShiftModes));
    app->add_option("--seed", f.seed, seed_help);
    app->add_option("--mc-draws", f.mc_draws, "Monte Carlo draws for bc")
        ->check(CLI::PositiveNumber);
    app->add_option("--abc-iter", f.abc_iter, "abc prior draws per candidate family")
        ->check(CLI::PositiveNumber);
    app->add_option("--abc-accept", f.abc_accept, "abc accepted fraction of all draws")
        ->check(CLI::Range(0.0, 1.0));
}

std::string num(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

struct InputFlags {
    std::string input;
    std::string fixture;
};

void add_input_flags(CLI::App* app, InputFlags& f) {
    auto* in = app->add_option("--input", f.input, "Summaries CSV (study_id,n,q_min,q1,q2,q3,q_max); - for stdin");
    auto* fx = app->add_option("--fixture", f.fixture, "Embedded dataset instead of --input")
                   ->check(CLI::IsMember({"table_s1"}));
    in->excludes(fx);
    fx->excludes(in);
}

SummaryTable load_input(const InputFlags& f, std::istream& stdin_stream) {
    if (!f.fixture.empty()) return {table_s1(), {}};
    if (f.input.empty()) throw ValidationError("one of --input or --fixture is required");
    if (f.input == "-") return read_summaries_csv(stdin_stream);
    std::ifstream file(f.input);
    if (!file) throw ValidationError("cannot open " + f.input);
    return read_summaries_csv(file);
}

// Runs `write` against the --output file or `out`.
void emit(const std::string& path, std::ostream& out, const std::function<void(std::ostream&)>& write) {
    if (path.empty() || path == "-") {
        write(out);
        return;
    }
    std::ofstream file(path);
    if (!file) throw ValidationError("cannot write " + path);
    write(file);
}

Scenario scenario_of(const std::string& s) { return *parse_scenario(s); }
Method method_of(const std::string& s) { return *parse_method(s); }

// ---- estimate ---------------------------------------------------------------

struct EstimateFlags {
    std::string method = "luo_wan";
    std::string scenario;
    std::optional<double> q_min, q1, q2, q3, q_max;
    long n = 0;
    EstimatorFlags est;
};

int cmd_estimate(const EstimateFlags& f, std::ostream& out) {
    const Scenario sc = scenario_of(f.scenario);
    if (!f.q2) throw ValidationError("--q2 is required");
    const bool extremes = sc != Scenario::s2;
    const bool quartiles = sc != Scenario::s1;
    if (!extremes && (f.q_min || f.q_max)) throw ValidationError("--qmin/--qmax do not belong to s2");
    if (!quartiles && (f.q1 || f.q3)) throw ValidationError("--q1/--q3 do not belong to s1");
    QuantileSummary s;
    s.scenario = sc;
    s.q_min = f.q_min;
    s.q1 = f.q1;
    s.q2 = *f.q2;
    s.q3 = f.q3;
    s.q_max = f.q_max;
    s.n = f.n;
    require_valid(s);
    EstimatorConfig cfg = f.est.config();
    cfg.threads = thread_budget();
    const auto r = estimate(s, method_of(f.method), cfg);
    auto j = to_json(r);
    j["scenario"] = scenario_name(sc);
    j["n"] = s.n;
    out << j.dump(2) << '\n';
    return kExitOk;
}

// ---- batch ------------------------------------------------------------------

struct BatchFlags {
    InputFlags input;
    std::string method = "luo_wan";
    std::string scenario;
    std::string format = "csv";
    std::string output;
    bool strict = false;
    EstimatorFlags est;
};

struct BatchRecord {
    std::size_t line = 0;
    std::string study_id;
    std::string method;
    std::string scenario;
    std::optional<EstimateResult> result;
    std::string error;
    bool parse_error = false;
};

int cmd_batch(const BatchFlags& f, std::istream& in, std::ostream& out) {
    const SummaryTable table = load_input(f.input, in);
    std::vector<Method> methods;
    if (f.method == "all") {
        methods.assign(std::begin(kAllMethods), std::end(kAllMethods));
    } else {
        methods.push_back(method_of(f.method));
    }
    const EstimatorConfig base = f.est.config();
    const std::size_t per_row = methods.size();

    std::vector<BatchRecord> records(table.rows.size() * per_row);
    parallel_for(records.size(), thread_budget(), [&](std::size_t job) {
        const std::size_t i = job / per_row;
        const Method m = methods[job % per_row];
        const auto& row = table.rows[i];
        auto& rec = records[job];
        rec.line = row.line;
        rec.study_id = row.study_id;
        rec.method = method_name(m);
        const Scenario sc = f.scenario.empty() ? row.summary.scenario : scenario_of(f.scenario);
        rec.scenario = scenario_name(sc);
        EstimatorConfig cfg = base;
        cfg.seed = derive_seed(base.seed, i);
        try {
            rec.result = estimate(row.summary.as(sc), m, cfg);
        } catch (const std::exception& e) {
            rec.error = e.what();
        }
    });
    for (const auto& e : table.errors) {
        BatchRecord rec;
        rec.line = e.line;
        rec.error = "line " + std::to_string(e.line) + ": " + e.message;
        rec.parse_error = true;
        records.push_back(std::move(rec));
    }
    std::stable_sort(records.begin(), records.end(),
                     [](const BatchRecord& a, const BatchRecord& b) { return a.line < b.line; });

    emit(f.output, out, [&](std::ostream& os) {
        if (f.format == "json") {
            auto arr = nlohmann::json::array();
            for (const auto& r : records) {
                nlohmann::json j = r.result ? to_json(*r.result) : nlohmann::json::object();
                j["study_id"] = r.study_id;
                if (!r.parse_error) {
                    j["method"] = r.method;
                    j["scenario"] = r.scenario;
                }
                if (!r.error.empty()) j["error"] = r.error;
                arr.push_back(std::move(j));
            }
            os << arr.dump(2) << '\n';
            return;
        }
        os << "study_id,method,scenario,mean,sd,selected_family,lambda,shift_c,error\n";
        for (const auto& r : records) {
            os << csv::quote(r.study_id) << ',' << r.method << ',' << r.scenario << ',';
            if (r.result) {
                const auto& e = *r.result;
                os << num(e.mean) << ',' << num(e.sd) << ','
                   << (e.selected ? std::string(family_name(e.selected->family)) : "") << ','
                   << (e.lambda ? num(*e.lambda) : "") << ',' << num(e.shift.c) << ',';
            } else {
                os << ",,,,,";
            }
            os << csv::quote(r.error) << '\n';
        }
    });

    if (!f.strict) return kExitOk;
    if (!table.errors.empty()) return kExitInvalid;
    for (const auto& r : records) {
        if (!r.error.empty()) return kExitEstimation;
    }
    return kExitOk;
}

// ---- simulate ---------------------------------------------------------------

struct SimulateFlags {
    std::string set = "primary";
    std::string cell;
    std::size_t reps = 1000;
    std::vector<std::string> methods{"luo_wan", "qe", "bc"};
    std::vector<long> n_list;
    std::vector<std::string> scenarios{"s1", "s2", "s3"};
    std::string quantile_rule = "linear";
    std::string output;
    EstimatorFlags est;
};

int cmd_simulate(const SimulateFlags& f, std::ostream& out) {
    std::vector<Method> methods;
    for (const auto& m : f.methods) methods.push_back(method_of(m));
    const QuantileRule rule = f.quantile_rule == "hazen" ? QuantileRule::hazen : QuantileRule::linear;
    const EstimatorConfig cfg = f.est.config();
    std::vector<AreRecord> records;
    if (!f.cell.empty()) {
        const auto parts = csv::split(f.cell);
        if (parts.size() != 3) throw ValidationError("--cell expects DIST,SCENARIO,N");
        const auto dist = parse_distribution_tag(csv::trim(parts[0]));
        const auto sc = parse_scenario(csv::trim(parts[1]));
        const auto n = csv::parse_long(parts[2]);
        if (!dist) throw ValidationError("--cell: bad distribution '" + parts[0] + "'");
        if (!sc) throw ValidationError("--cell: bad scenario '" + parts[1] + "'");
        if (!n || *n < 5) throw ValidationError("--cell: n must be an integer >= 5");
        SimCell cell;
        cell.distribution = *dist;
        cell.scenario = *sc;
        cell.n = *n;
        cell.reps = f.reps;
        cell.methods = methods;
        cell.master_seed = f.est.seed;
        cell.config = cfg;
        cell.rule = rule;
        cell.threads = thread_budget();
        records = run_cell(cell);
    } else {
        GridOptions g;
        g.set = f.set == "sensitivity" ? GridSet::sensitivity : GridSet::primary;
        g.reps = f.reps;
        g.methods = methods;
        g.master_seed = f.est.seed;
        if (!f.n_list.empty()) g.n_values = f.n_list;
        g.scenarios.clear();
        for (const auto& s : f.scenarios) g.scenarios.push_back(scenario_of(s));
        g.config = cfg;
        g.rule = rule;
        g.threads = thread_budget();
        records = run_grid(g);
    }
    emit(f.output, out, [&](std::ostream& os) { write_are_csv(os, records); });
    return kExitOk;
}

// ---- pool -------------------------------------------------------------------

struct PoolFlags {
    InputFlags input;
    std::string method = "luo_wan";
    std::string scenario = "s3";
    std::string output;
    bool strict = false;
    EstimatorFlags est;
};

int cmd_pool(const PoolFlags& f, std::istream& in, std::ostream& out, std::ostream& err) {
    const SummaryTable table = load_input(f.input, in);
    if (!table.errors.empty()) {
        for (const auto& e : table.errors) err << "line " << e.line << ": " << e.message << '\n';
        if (f.strict) return kExitInvalid;
    }
    if (table.rows.size() < 2) throw ValidationError("pooling needs at least 2 studies");
    EstimatorConfig cfg = f.est.config();
    cfg.threads = thread_budget();
    const Method m = method_of(f.method);
    const Scenario sc = scenario_of(f.scenario);
    PooledAnalysis a;
    try {
        a = derive_and_pool(table.rows, m, sc, cfg,
                            f.strict ? FailurePolicy::raise : FailurePolicy::skip);
    } catch (const ContractError& e) {
        // Too few studies survived estimation.
        throw EstimationFailed(e.what());
    }
    for (const auto& s : a.skipped) err << "skipped '" << s.study_id << "': " << s.reason << '\n';
    emit(f.output, out, [&](std::ostream& os) { os << to_json(a, m, sc).dump(2) << '\n'; });
    return kExitOk;
}

int guarded(const std::function<int()>& body, std::ostream& err) {
    try {
        return body();
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const ContractError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        err << "estimation failed: " << e.what() << '\n';
        return kExitEstimation;
    }
}

}  // namespace

unsigned thread_budget() {
    unsigned t = default_threads();
    if (const char* env = std::getenv("QM_THREADS")) {
        unsigned cap = 0;
        const std::string_view s(env);
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), cap);
        if (ec == std::errc() && ptr == s.data() + s.size() && cap > 0) t = std::min(t, cap);
    }
    return t;
}

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Estimate study means and SDs from reported quantiles, and pool them.", "qmest"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.get_formatter()->column_width(34);

    EstimateFlags ef;
    auto* est = app.add_subcommand("estimate", "Estimate one study's mean and SD (JSON)");
    est->add_option("--method", ef.method, "Estimator")->check(CLI::IsMember(kMethodNames));
    est->add_option("--scenario", ef.scenario, "Reported quantiles: s1 min/median/max, s2 quartiles, s3 all five")
        ->required()
        ->check(CLI::IsMember(kScenarioNames));
    est->add_option("--qmin", ef.q_min, "Minimum");
    est->add_option("--q1", ef.q1, "First quartile");
    est->add_option("--q2", ef.q2, "Median")->required();
    est->add_option("--q3", ef.q3, "Third quartile");
    est->add_option("--qmax", ef.q_max, "Maximum");
    est->add_option("--n", ef.n, "Sample size")->required();
    add_estimator_flags(est, ef.est, "if_nonpositive");

    BatchFlags bf;
    auto* batch = app.add_subcommand("batch", "Estimate every study in a summaries CSV");
    add_input_flags(batch, bf.input);
    batch->add_option("--method", bf.method, "Estimator, or all")
        ->check(CLI::IsMember({"luo_wan", "qe", "bc", "abc", "all"}));
    batch->add_option("--scenario", bf.scenario, "Slice to use; empty uses each row's own scenario")
        ->check(CLI::IsMember(kScenarioNames));
    batch->add_option("--format", bf.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    batch->add_option("--output", bf.output, "Output path; stdout when empty");
    batch->add_flag("--strict", bf.strict, "Exit 2 on malformed rows, 3 on failed estimates");
    add_estimator_flags(batch, bf.est, "if_nonpositive",
                        "Base seed; each row derives its own stream for bc and abc");

    SimulateFlags sf;
    auto* sim = app.add_subcommand("simulate", "Average relative errors over simulated studies (CSV)");
    auto* set = sim->add_option("--set", sf.set, "Distribution grid")
                    ->check(CLI::IsMember({"primary", "sensitivity"}));
    auto* cell = sim->add_option("--cell", sf.cell, "Single cell DIST,SCENARIO,N, e.g. log_normal:5:1,s1,1000");
    cell->excludes(set);
    sim->add_option("--reps", sf.reps, "Repetitions per cell")->check(CLI::PositiveNumber);
    sim->add_option("--methods", sf.methods, "Comma-separated estimators")
        ->delimiter(',')
        ->check(CLI::IsMember(kMethodNames));
    sim->add_option("--n-list", sf.n_list, "Comma-separated sample sizes; empty uses the full grid")
        ->delimiter(',')
        ->check(CLI::Range(5L, 100000000L));
    sim->add_option("--scenarios", sf.scenarios, "Comma-separated scenarios for grids")
        ->delimiter(',')
        ->check(CLI::IsMember(kScenarioNames));
    sim->add_option("--quantile-rule", sf.quantile_rule, "Sample quartile convention")
        ->check(CLI::IsMember({"linear", "hazen"}));
    sim->add_option("--output", sf.output, "Output path; stdout when empty");
    add_estimator_flags(sim, sf.est, "if_nonpositive",
                        "Master seed; each repetition and method derives its own stream");

    PoolFlags pf;
    auto* pool_cmd = app.add_subcommand("pool", "Derive study means and pool them by random effects (JSON)");
    add_input_flags(pool_cmd, pf.input);
    pool_cmd->add_option("--method", pf.method, "Estimator")->check(CLI::IsMember(kMethodNames));
    pool_cmd->add_option("--scenario", pf.scenario, "Slice of each study to use")
        ->check(CLI::IsMember(kScenarioNames));
    pool_cmd->add_option("--output", pf.output, "Output path; stdout when empty");
    pool_cmd->add_flag("--strict", pf.strict, "Exit 3 if any study fails instead of skipping it");
    add_estimator_flags(pool_cmd, pf.est, "always", "Base seed; each study derives its own stream");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, err, err);
        return kExitInvalid;
    }

    if (est->parsed()) return guarded([&] { return cmd_estimate(ef, out); }, err);
    if (batch->parsed()) return guarded([&] { return cmd_batch(bf, in, out); }, err);
    if (sim->parsed()) return guarded([&] { return cmd_simulate(sf, out); }, err);
    return guarded([&] { return cmd_pool(pf, in, out, err); }, err);
}

}  // namespace qmest::cli
