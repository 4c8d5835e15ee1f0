#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qmest {

/// Which quantiles a study reported:
///   s1 = {min, median, max}, s2 = {q1, median, q3}, s3 = all five.
enum class Scenario { s1, s2, s3 };

std::string_view scenario_name(Scenario s);
std::optional<Scenario> parse_scenario(std::string_view name);

struct QuantileSummary {
    Scenario scenario = Scenario::s3;
    std::optional<double> q_min;
    std::optional<double> q1;
    double q2 = 0.0;
    std::optional<double> q3;
    std::optional<double> q_max;
    long n = 0;

    static QuantileSummary s1(double q_min, double q2, double q_max, long n);
    static QuantileSummary s2(double q1, double q2, double q3, long n);
    static QuantileSummary s3(double q_min, double q1, double q2, double q3, double q_max, long n);

    /// The scenario-relevant quantiles in increasing probability order.
    std::vector<double> values() const;

    /// q_min for S1/S3, q1 for S2.
    double lowest() const;

    /// Restrict an S3 summary to its S1 or S2 slice (or return *this).
    QuantileSummary as(Scenario target) const;

    bool operator==(const QuantileSummary&) const = default;
};

struct Violation {
    enum class Kind { presence, ordering, sample_size, not_finite };
    Kind kind;
    std::string message;
};

std::vector<Violation> validate(const QuantileSummary& summary);

/// Throws ValidationError listing every violation.
void require_valid(const QuantileSummary& summary);

struct ShiftRecord {
    bool applied = false;
    double c = 0.0;

    bool operator==(const ShiftRecord&) const = default;
};

/// Add c to every quantile when the lowest one is <= 0.
std::pair<QuantileSummary, ShiftRecord> shift_positive(const QuantileSummary& summary,
                                                       double c = 0.5);

/// Shift so that the lowest quantile equals 0.5. No-op when it is already >= 0.5.
std::pair<QuantileSummary, ShiftRecord> shift_to_half(const QuantileSummary& summary);

/// How an estimator pre-shifts a summary before fitting. The estimated mean
/// is corrected by -c afterwards; the SD is reported as-is.
enum class ShiftMode {
    if_nonpositive,  // shift_positive: only when the lowest quantile is <= 0
    always,          // add c to every summary
    none,
};

struct ShiftPolicy {
    ShiftMode mode = ShiftMode::if_nonpositive;
    double c = 0.5;
};

std::pair<QuantileSummary, ShiftRecord> apply_shift(const QuantileSummary& summary,
                                                    const ShiftPolicy& policy);

/// A summaries-CSV row: study_id, n, q_min, q1, q2, q3, q_max.
struct StudyRow {
    std::string study_id;
    QuantileSummary summary;  // scenario s3 when all five cells are filled
    std::size_t line = 0;     // 1-based source line; 0 when not read from a file
};

struct CsvRowError {
    std::size_t line = 0;
    std::string message;
};

struct SummaryTable {
    std::vector<StudyRow> rows;
    std::vector<CsvRowError> errors;
};

/// Parse the summaries CSV. The header row is required. A row's scenario is
/// inferred from which cells are filled: all five -> s3, {q_min,q2,q_max} -> s1,
/// {q1,q2,q3} -> s2. Malformed rows land in `errors` rather than throwing.
SummaryTable read_summaries_csv(std::istream& in);

void write_summaries_csv(std::ostream& out, const std::vector<StudyRow>& rows);

}  // namespace qmest
