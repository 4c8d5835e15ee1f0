#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "qmest/errors.hpp"
#include "qmest/estimate.hpp"
#include "qmest/formula.hpp"
#include "qmest/summaries.hpp"
#include "qmest/table_s1.hpp"

using namespace qmest;

namespace {

bool has_kind(const std::vector<Violation>& v, Violation::Kind k) {
    for (const auto& x : v) {
        if (x.kind == k) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("validate examples", "[summaries]") {
    CHECK(validate(QuantileSummary::s2(2, 5, 8, 100)).empty());
    CHECK(has_kind(validate(QuantileSummary::s1(6, 5, 10, 50)), Violation::Kind::ordering));
    auto s3 = QuantileSummary::s3(0, 1, 2, 3, 4, 10);
    s3.q1.reset();
    CHECK(has_kind(validate(s3), Violation::Kind::presence));
    CHECK(has_kind(validate(QuantileSummary::s3(0, 1, 2, 3, 4, 4)), Violation::Kind::sample_size));
    CHECK(validate(QuantileSummary::s1(0, 1, 2, 3)).empty());
    CHECK(has_kind(validate(QuantileSummary::s1(0, 1, 2, 2)), Violation::Kind::sample_size));
    CHECK(has_kind(validate(QuantileSummary::s2(0, NAN, 2, 20)), Violation::Kind::not_finite));
    // Ties are allowed.
    CHECK(validate(QuantileSummary::s3(0, 0, 4, 8.5, 24, 135)).empty());
}

TEST_CASE("validate reports every violation", "[summaries]") {
    auto s = QuantileSummary::s3(5, 4, 3, 2, 1, 2);
    const auto v = validate(s);
    CHECK(v.size() == 5);  // four ordering breaks plus n
    CHECK_THROWS_AS(require_valid(s), ValidationError);
}

TEST_CASE("shift_positive", "[summaries]") {
    const auto [s, rec] = shift_positive(QuantileSummary::s3(0, 2, 5, 9, 27, 173));
    CHECK(rec.applied);
    CHECK(rec.c == 0.5);
    CHECK(s.values() == std::vector<double>{0.5, 2.5, 5.5, 9.5, 27.5});

    const auto orig = QuantileSummary::s2(2, 5, 8, 100);
    const auto [same, none] = shift_positive(orig);
    CHECK(same == orig);
    CHECK_FALSE(none.applied);
    CHECK(none.c == 0.0);

    const auto [neg, r3] = shift_positive(QuantileSummary::s1(-3, 1, 5, 20));
    CHECK(r3.c == 0.5);
    CHECK(*neg.q_min == -2.5);

    CHECK_THROWS_AS(shift_positive(orig, 0.0), DomainError);
}

TEST_CASE("shift_positive is idempotent on positive summaries", "[summaries][property]") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.001, 10);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> q(5);
        for (auto& x : q) x = u(gen);
        std::sort(q.begin(), q.end());
        const auto s = QuantileSummary::s3(q[0], q[1], q[2], q[3], q[4], 50);
        const auto once = shift_positive(s).first;
        CHECK(shift_positive(once).first == once);
        CHECK(once == s);
    }
}

TEST_CASE("shift_to_half", "[summaries]") {
    const auto [a, ra] = shift_to_half(QuantileSummary::s1(-2, 1, 4, 30));
    CHECK(ra.c == 2.5);
    CHECK(*a.q_min == 0.5);
    CHECK(a.q2 == 3.5);
    const auto [b, rb] = shift_to_half(QuantileSummary::s2(0, 1, 2, 30));
    CHECK(rb.c == 0.5);
    CHECK(*b.q1 == 0.5);
    const auto orig = QuantileSummary::s3(3, 4, 5, 6, 7, 30);
    const auto [c, rc] = shift_to_half(orig);
    CHECK_FALSE(rc.applied);
    CHECK(c == orig);
    // The lowest quantile lands on 0.5 exactly even when the sum would round.
    const auto [d, rd] = shift_to_half(QuantileSummary::s1(-0.1234567891234, 1, 2, 30));
    CHECK(*d.q_min == 0.5);
}

TEST_CASE("estimators report the shifted mean minus c and the SD as is", "[summaries][property]") {
    const auto s = QuantileSummary::s3(0, 2, 5, 9, 27, 173);
    EstimatorConfig cfg;
    cfg.shift = {ShiftMode::always, 0.5};
    const auto shifted = shift_positive(s).first;
    const auto r = estimate(s, Method::luo_wan, cfg);
    CHECK(r.mean == luo_mean(shifted) - 0.5);
    CHECK(r.sd == wan_sd(shifted));
    CHECK(r.shift == ShiftRecord{true, 0.5});
}

TEST_CASE("scenario slicing", "[summaries]") {
    const auto s = QuantileSummary::s3(0, 2, 5, 9, 27, 173);
    CHECK(s.as(Scenario::s1) == QuantileSummary::s1(0, 5, 27, 173));
    CHECK(s.as(Scenario::s2) == QuantileSummary::s2(2, 5, 9, 173));
    CHECK(s.as(Scenario::s3) == s);
    CHECK_THROWS_AS(QuantileSummary::s1(0, 5, 27, 173).as(Scenario::s2), ContractError);
}

TEST_CASE("summaries CSV round trip and row errors", "[summaries]") {
    std::istringstream in(
        "study_id,n,q_min,q1,q2,q3,q_max\n"
        "\"Smith, 2001\",100,0,2,5,9,27\n"
        "s1 only,50,1,,4,,12\n"
        "s2 only,60,,3,4,6,\n"
        "bad n,x,1,2,3,4,5\n"
        "mixed,40,1,2,3,,\n"
        "short,40,1\n"
        "no median,40,1,2,,4,5\n");
    const auto t = read_summaries_csv(in);
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[0].study_id == "Smith, 2001");
    CHECK(t.rows[0].summary.scenario == Scenario::s3);
    CHECK(t.rows[0].line == 2);
    CHECK(t.rows[1].summary == QuantileSummary::s1(1, 4, 12, 50));
    CHECK(t.rows[2].summary == QuantileSummary::s2(3, 4, 6, 60));
    REQUIRE(t.errors.size() == 4);
    CHECK(t.errors[0].line == 5);

    std::ostringstream out;
    write_summaries_csv(out, t.rows);
    std::istringstream back(out.str());
    const auto t2 = read_summaries_csv(back);
    REQUIRE(t2.rows.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(t2.rows[i].study_id == t.rows[i].study_id);
        CHECK(t2.rows[i].summary == t.rows[i].summary);
    }
}

TEST_CASE("summaries CSV requires the header", "[summaries]") {
    std::istringstream in("id,n,a,b,c,d,e\n1,2,3,4,5,6,7\n");
    const auto t = read_summaries_csv(in);
    CHECK(t.rows.empty());
    CHECK(t.errors.size() == 1);
    std::istringstream empty("");
    CHECK(read_summaries_csv(empty).rows.empty());
}

TEST_CASE("embedded fixture", "[summaries]") {
    const auto& t = table_s1();
    REQUIRE(t.size() == 58);
    CHECK(t.front().study_id == "Persoons et al. 2001");
    CHECK(t.front().summary == QuantileSummary::s3(0, 2, 5, 9, 27, 173));
    for (const auto& r : t) {
        CHECK(r.summary.scenario == Scenario::s3);
        CHECK(validate(r.summary).empty());
    }
    const auto arroll = std::find_if(t.begin(), t.end(), [](const StudyRow& r) {
        return r.study_id == "Arroll et al. 2010";
    });
    REQUIRE(arroll != t.end());
    CHECK(arroll->summary == QuantileSummary::s3(0, 1, 3, 6, 27, 2528));
}
