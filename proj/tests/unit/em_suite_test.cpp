#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "t2s/metrics.hpp"
#include "t2s/sqlkit.hpp"

using namespace t2s;

namespace {

struct EmCase {
    std::string category, db_id, gold, pred;
    bool em;
    std::optional<std::vector<std::string>> mismatch;
};

std::vector<EmCase> load_cases() {
    std::vector<EmCase> out;
    for (const auto& r : read_json_file(fx::fixture_dir() / "conformance" / "em_pairs.json")) {
        EmCase c{r["category"], r["db_id"], r["gold"], r["pred"], r["em"], std::nullopt};
        if (!r["mismatch"].is_null()) c.mismatch = r["mismatch"].get<std::vector<std::string>>();
        out.push_back(std::move(c));
    }
    return out;
}

const DatabaseSchema& schema_for(const std::string& db_id) {
    static const auto schemas = load_schemas(fx::fixture_dir() / "spider_mini" / "tables.json");
    for (const auto& s : schemas)
        if (s.db_id == db_id) return s;
    throw std::runtime_error("no schema " + db_id);
}

class EmSuite : public ::testing::TestWithParam<EmCase> {};

}  // namespace

TEST(EmSuiteShape, CoversEveryCategory) {
    auto cases = load_cases();
    EXPECT_GE(cases.size(), 50u);
    std::set<std::string> cats;
    for (const auto& c : cases) cats.insert(c.category);
    for (const char* want : {"set-reorder", "literal", "alias", "distinct", "missing-clause", "order", "nesting", "set-op"})
        EXPECT_TRUE(cats.count(want)) << want;
}

TEST_P(EmSuite, AgreesWithClauseOracle) {
    const auto& c = GetParam();
    SCOPED_TRACE(c.gold + "  |  " + c.pred);
    const auto& s = schema_for(c.db_id);
    EXPECT_EQ(score_em(c.pred, c.gold, s), c.em);
    auto gold = sql::parse_sql(c.gold, s);
    ASSERT_TRUE(std::holds_alternative<sql::SqlUnit>(gold));
    auto pred = sql::parse_sql(c.pred, s);
    if (!c.mismatch) {
        EXPECT_TRUE(std::holds_alternative<sql::ParseError>(pred));
        return;
    }
    ASSERT_TRUE(std::holds_alternative<sql::SqlUnit>(pred)) << std::get<sql::ParseError>(pred).reason;
    EXPECT_EQ(sql::em_diff(std::get<sql::SqlUnit>(pred), std::get<sql::SqlUnit>(gold)), *c.mismatch);
}

INSTANTIATE_TEST_SUITE_P(Pairs, EmSuite, ::testing::ValuesIn(load_cases()),
                         [](const ::testing::TestParamInfo<EmCase>& info) { return "pair" + std::to_string(info.index); });
