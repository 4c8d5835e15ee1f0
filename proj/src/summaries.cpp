#include "qmest/summaries.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "csv.hpp"
#include "qmest/errors.hpp"

namespace qmest {

std::string_view scenario_name(Scenario s) {
    switch (s) {
        case Scenario::s1: return "s1";
        case Scenario::s2: return "s2";
        case Scenario::s3: return "s3";
    }
    return "?";
}

std::optional<Scenario> parse_scenario(std::string_view name) {
    if (name == "s1" || name == "S1") return Scenario::s1;
    if (name == "s2" || name == "S2") return Scenario::s2;
    if (name == "s3" || name == "S3") return Scenario::s3;
    return std::nullopt;
}

QuantileSummary QuantileSummary::s1(double q_min, double q2, double q_max, long n) {
    QuantileSummary s;
    s.scenario = Scenario::s1;
    s.q_min = q_min;
    s.q2 = q2;
    s.q_max = q_max;
    s.n = n;
    return s;
}

QuantileSummary QuantileSummary::s2(double q1, double q2, double q3, long n) {
    QuantileSummary s;
    s.scenario = Scenario::s2;
    s.q1 = q1;
    s.q2 = q2;
    s.q3 = q3;
    s.n = n;
    return s;
}

QuantileSummary QuantileSummary::s3(double q_min, double q1, double q2, double q3, double q_max,
                                    long n) {
    QuantileSummary s;
    s.scenario = Scenario::s3;
    s.q_min = q_min;
    s.q1 = q1;
    s.q2 = q2;
    s.q3 = q3;
    s.q_max = q_max;
    s.n = n;
    return s;
}

std::vector<double> QuantileSummary::values() const {
    switch (scenario) {
        case Scenario::s1: return {q_min.value(), q2, q_max.value()};
        case Scenario::s2: return {q1.value(), q2, q3.value()};
        case Scenario::s3: return {q_min.value(), q1.value(), q2, q3.value(), q_max.value()};
    }
    return {};
}

double QuantileSummary::lowest() const {
    return scenario == Scenario::s2 ? q1.value() : q_min.value();
}

QuantileSummary QuantileSummary::as(Scenario target) const {
    if (target == scenario) return *this;
    if (scenario != Scenario::s3) {
        throw ContractError("only an S3 summary can be sliced to another scenario");
    }
    return target == Scenario::s1 ? s1(*q_min, q2, *q_max, n) : s2(*q1, q2, *q3, n);
}

std::vector<Violation> validate(const QuantileSummary& s) {
    std::vector<Violation> out;
    const bool need_extremes = s.scenario != Scenario::s2;
    const bool need_quartiles = s.scenario != Scenario::s1;
    const auto require = [&](const std::optional<double>& v, const char* name) {
        if (!v) {
            out.push_back({Violation::Kind::presence,
                           std::string(name) + " is required in " +
                               std::string(scenario_name(s.scenario))});
        }
    };
    if (need_extremes) {
        require(s.q_min, "q_min");
        require(s.q_max, "q_max");
    }
    if (need_quartiles) {
        require(s.q1, "q1");
        require(s.q3, "q3");
    }

    // Ordering over whichever of the five fields are present.
    struct Named {
        const char* name;
        std::optional<double> v;
    };
    const Named chain[] = {{"q_min", s.q_min}, {"q1", s.q1}, {"q2", s.q2},
                           {"q3", s.q3},       {"q_max", s.q_max}};
    for (const auto& c : chain) {
        if (c.v && !std::isfinite(*c.v)) {
            out.push_back({Violation::Kind::not_finite, std::string(c.name) + " is not finite"});
        }
    }
    const Named* prev = nullptr;
    for (const auto& c : chain) {
        if (!c.v || !std::isfinite(*c.v)) continue;
        if (prev && *prev->v > *c.v) {
            out.push_back({Violation::Kind::ordering,
                           std::string(prev->name) + " > " + c.name});
        }
        prev = &c;
    }

    const long min_n = s.scenario == Scenario::s3 ? 5 : 3;
    if (s.n < min_n) {
        out.push_back({Violation::Kind::sample_size,
                       "n must be at least " + std::to_string(min_n)});
    }
    return out;
}

void require_valid(const QuantileSummary& summary) {
    const auto v = validate(summary);
    if (v.empty()) return;
    std::string msg = "invalid summary:";
    for (const auto& x : v) msg += " " + x.message + ";";
    msg.pop_back();
    throw ValidationError(msg);
}

namespace {

QuantileSummary add_to_all(QuantileSummary s, double c) {
    for (auto* f : {&s.q_min, &s.q1, &s.q3, &s.q_max}) {
        if (*f) **f += c;
    }
    s.q2 += c;
    return s;
}

}  // namespace

std::pair<QuantileSummary, ShiftRecord> shift_positive(const QuantileSummary& summary, double c) {
    if (!(c > 0.0)) throw DomainError("shift constant must be positive");
    if (summary.lowest() > 0.0) return {summary, {}};
    return {add_to_all(summary, c), {true, c}};
}

std::pair<QuantileSummary, ShiftRecord> shift_to_half(const QuantileSummary& summary) {
    const double low = summary.lowest();
    if (!(low < 0.5)) return {summary, {}};
    const double c = 0.5 - low;
    auto shifted = add_to_all(summary, c);
    // Pin exactly; x + (0.5 - x) can round away from 0.5.
    if (shifted.scenario == Scenario::s2) {
        shifted.q1 = 0.5;
    } else {
        shifted.q_min = 0.5;
    }
    return {shifted, {true, c}};
}

std::pair<QuantileSummary, ShiftRecord> apply_shift(const QuantileSummary& summary,
                                                    const ShiftPolicy& policy) {
    switch (policy.mode) {
        case ShiftMode::if_nonpositive: return shift_positive(summary, policy.c);
        case ShiftMode::always:
            if (!(policy.c > 0.0)) throw DomainError("shift constant must be positive");
            return {add_to_all(summary, policy.c), {true, policy.c}};
        case ShiftMode::none: return {summary, {}};
    }
    return {summary, {}};
}

SummaryTable read_summaries_csv(std::istream& in) {
    SummaryTable table;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    static constexpr const char* kHeader[] = {"study_id", "n", "q_min", "q1", "q2", "q3", "q_max"};

    while (std::getline(in, line)) {
        ++lineno;
        if (csv::trim(line).empty()) continue;
        auto fields = csv::split(line);
        if (!header_seen) {
            header_seen = true;
            bool ok = fields.size() == 7;
            for (std::size_t i = 0; ok && i < 7; ++i) ok = csv::trim(fields[i]) == kHeader[i];
            if (!ok) {
                table.errors.push_back(
                    {lineno, "expected header study_id,n,q_min,q1,q2,q3,q_max"});
                return table;
            }
            continue;
        }
        if (fields.size() != 7) {
            table.errors.push_back({lineno, "expected 7 fields, got " +
                                                std::to_string(fields.size())});
            continue;
        }
        StudyRow row;
        row.line = lineno;
        row.study_id = std::string(csv::trim(fields[0]));
        const auto n = csv::parse_long(fields[1]);
        if (!n) {
            table.errors.push_back({lineno, "n is not an integer"});
            continue;
        }
        std::optional<double> q[5];
        bool bad = false;
        for (int i = 0; i < 5; ++i) {
            const auto cell = csv::trim(fields[2 + i]);
            if (cell.empty()) continue;
            q[i] = csv::parse_double(cell);
            if (!q[i]) {
                table.errors.push_back({lineno, std::string("cannot parse ") + kHeader[2 + i]});
                bad = true;
                break;
            }
        }
        if (bad) continue;
        if (!q[2]) {
            table.errors.push_back({lineno, "q2 (median) is required"});
            continue;
        }
        auto& s = row.summary;
        s.q_min = q[0];
        s.q1 = q[1];
        s.q2 = *q[2];
        s.q3 = q[3];
        s.q_max = q[4];
        s.n = *n;
        const bool ext = q[0] && q[4];
        const bool quart = q[1] && q[3];
        if (ext && quart) {
            s.scenario = Scenario::s3;
        } else if (ext && !q[1] && !q[3]) {
            s.scenario = Scenario::s1;
        } else if (quart && !q[0] && !q[4]) {
            s.scenario = Scenario::s2;
        } else {
            table.errors.push_back({lineno, "filled cells match no scenario"});
            continue;
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_summaries_csv(std::ostream& out, const std::vector<StudyRow>& rows) {
    out << "study_id,n,q_min,q1,q2,q3,q_max\n";
    const auto cell = [](const std::optional<double>& v) {
        if (!v) return std::string();
        std::ostringstream os;
        os.precision(17);
        os << *v;
        return os.str();
    };
    for (const auto& r : rows) {
        const auto& s = r.summary;
        out << csv::quote(r.study_id) << ',' << s.n << ',' << cell(s.q_min) << ',' << cell(s.q1)
            << ',' << cell(s.q2) << ',' << cell(s.q3) << ',' << cell(s.q_max) << '\n';
    }
}

}  // namespace qmest
