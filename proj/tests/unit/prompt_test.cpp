#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "t2s/errors.hpp"
#include "t2s/prompt.hpp"

using namespace t2s;

namespace {

class PromptTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        tmp_ = new fx::TempDir;
        bundle_ = new DatasetBundle(fx::spider_mini(tmp_->path(), false));
    }
    static void TearDownTestSuite() {
        delete bundle_;
        delete tmp_;
    }
    static const DatasetBundle& bundle() { return *bundle_; }
    static const ExampleTriple& dev(int i) { return bundle_->split("dev").at(static_cast<std::size_t>(i)); }
    static const ExampleTriple& train(int i) { return bundle_->split("train").at(static_cast<std::size_t>(i)); }

    static inline fx::TempDir* tmp_ = nullptr;
    static inline DatasetBundle* bundle_ = nullptr;
};

std::size_t count_of(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
    return n;
}

}  // namespace

TEST_F(PromptTest, ZeroShotMatchesGolden) {
    const auto golden = fx::slurp(fx::fixture_dir() / "golden" / "concert_singer_zero_shot.txt");
    ASSERT_EQ(dev(0).question, "How many singers do we have?");
    auto env = build_prompt(dev(0), {}, bundle(), PromptTemplate::sentence());
    EXPECT_EQ(env.text, golden);
    EXPECT_EQ(env.shots, 0u);
    EXPECT_TRUE(env.exemplar_ids.empty());
}

TEST_F(PromptTest, CompactSchemaMatchesGolden) {
    const auto golden = fx::slurp(fx::fixture_dir() / "golden" / "college_2_compact.txt");
    const auto rendered = render_schema(bundle().schema("college_2"), SchemaStyle::compact);
    EXPECT_EQ(rendered, golden);
    EXPECT_NE(rendered.find("Table course, columns = [*,course_id,title,dept_name,credits]\n"), std::string::npos);
    EXPECT_NE(rendered.find("Table prereq, columns = [*,course_id,prereq_id]\n"), std::string::npos);
}

TEST(RenderSchema, SingleTableNoKeys) {
    DatabaseSchema s;
    s.db_id = "d";
    s.tables.push_back({"t", {{"a", ColumnType::text, "a"}, {"b", ColumnType::number, "b"}}});
    EXPECT_EQ(render_schema(s, SchemaStyle::compact), "Table t, columns = [*,a,b]\n");
    const auto sentence = render_schema(s, SchemaStyle::sentence);
    EXPECT_EQ(sentence, "Database d contains tables such as t. \nTable t has columns such as a, b.\n");
    EXPECT_EQ(sentence.find("primary key"), std::string::npos);
}

TEST_F(PromptTest, OneShotSameSchemaRendersSchemaOnce) {
    const auto tmpl = PromptTemplate::sentence();
    std::vector<ExampleTriple> ex{train(3)};
    auto env = build_prompt(dev(0), ex, bundle(), tmpl);
    const auto zero = build_prompt(dev(0), {}, bundle(), tmpl).text;
    // zero-shot text with the exemplar pair spliced in before the target
    const std::string tail = "Q: How many singers do we have?\nResponse: ";
    const std::string expected = zero.substr(0, zero.size() - tail.size()) + "Q: " + train(3).question +
                                 "\nResponse: " + train(3).gold_sql + "\n\n" + tail;
    EXPECT_EQ(env.text, expected);
    EXPECT_EQ(count_of(env.text, "Database concert_singer"), 1u);
    EXPECT_EQ(env.exemplar_ids, std::vector<int>{3});
}

TEST_F(PromptTest, CrossDomainExemplarGetsCompactSchema) {
    std::vector<ExampleTriple> ex{train(6)};
    auto env = build_prompt(dev(0), ex, bundle(), PromptTemplate::sentence());
    const auto schema = render_schema(bundle().schema("college_2"), SchemaStyle::compact);
    const auto at = env.text.find(schema + "Q: " + train(6).question + "\n");
    EXPECT_NE(at, std::string::npos);
}

TEST_F(PromptTest, ZeroShotHasOneQuestionPrefixAfterSchema) {
    for (const auto& e : bundle().split("dev")) {
        auto env = build_prompt(e, {}, bundle(), PromptTemplate::sentence());
        EXPECT_EQ(count_of(env.text, "\nQ: "), 1u);
        EXPECT_TRUE(env.text.ends_with("Response: "));
    }
}

TEST_F(PromptTest, TooSmallBudgetThrows) {
    TokenBudget b{100, 0};
    try {
        build_prompt(dev(0), {}, bundle(), PromptTemplate::sentence(), b);
        FAIL() << "expected BudgetExceeded";
    } catch (const BudgetExceeded& e) {
        const auto full = estimate_tokens(build_prompt(dev(0), {}, bundle(), PromptTemplate::sentence()).text);
        EXPECT_EQ(e.overflow(), full - 100);
    }
}

TEST_F(PromptTest, TruncationDropsFromTheTail) {
    const auto& pool = bundle().split("train");
    std::vector<ExampleTriple> ex(pool.begin(), pool.end());
    const auto tmpl = PromptTemplate::sentence();
    const auto full = build_prompt(dev(0), ex, bundle(), tmpl, TokenBudget{100000, 0});
    ASSERT_EQ(full.shots, ex.size());
    // squeeze to something between the zero-shot and full sizes
    const auto zero = build_prompt(dev(0), {}, bundle(), tmpl).token_estimate;
    for (std::size_t limit = zero; limit < full.token_estimate; limit += 37) {
        auto env = build_prompt(dev(0), ex, bundle(), tmpl, TokenBudget{limit, 0});
        EXPECT_LE(env.token_estimate, limit);
        EXPECT_LT(env.shots, ex.size());
        EXPECT_EQ(env.shots, env.exemplar_ids.size());
        for (std::size_t i = 0; i < env.shots; ++i) EXPECT_EQ(env.exemplar_ids[i], ex[i].index);
        // one more exemplar would not have fit
        auto bigger = build_prompt(dev(0), std::span(ex).first(env.shots + 1), bundle(), tmpl, TokenBudget{100000, 0});
        EXPECT_GT(bigger.token_estimate, limit);
    }
}

TEST_F(PromptTest, DefaultBudgetHolds) {
    const auto& pool = bundle().split("train");
    for (const auto& e : bundle().split("dev")) {
        auto env = build_prompt(e, pool, bundle(), PromptTemplate::compact());
        EXPECT_LE(env.token_estimate, 2048u - 512u);
        EXPECT_EQ(env.token_estimate, estimate_tokens(env.text));
    }
}

TEST_F(PromptTest, Deterministic) {
    std::vector<ExampleTriple> ex{train(1), train(7)};
    EXPECT_EQ(build_prompt(dev(5), ex, bundle(), PromptTemplate::compact()).text,
              build_prompt(dev(5), ex, bundle(), PromptTemplate::compact()).text);
}

TEST_F(PromptTest, EvidenceOnlyWhenEnabled) {
    ExampleTriple e = dev(0);
    e.evidence = "singers are rows of singer";
    auto tmpl = PromptTemplate::sentence();
    EXPECT_EQ(build_prompt(e, {}, bundle(), tmpl).text.find("Evidence:"), std::string::npos);
    tmpl.include_evidence = true;
    EXPECT_TRUE(build_prompt(e, {}, bundle(), tmpl)
                    .text.ends_with("Q: How many singers do we have?\nEvidence: singers are rows of singer\nResponse: "));
}

TEST_F(PromptTest, InjectedCounterIsUsed) {
    auto env = build_prompt(dev(0), {}, bundle(), PromptTemplate::sentence(), {}, [](std::string_view) { return 7; });
    EXPECT_EQ(env.token_estimate, 7u);
}

TEST(Template, EmptyPrefixesRejected) {
    auto t = PromptTemplate::sentence();
    t.response_prefix = " ";
    EXPECT_THROW(t.validate(), ValidationError);
    EXPECT_NO_THROW(PromptTemplate::compact().validate());
}

TEST(Estimator, CeilingOfBytesOverThree) {
    EXPECT_EQ(estimate_tokens(""), 0u);
    EXPECT_EQ(estimate_tokens(std::string(300, 'x')), 100u);
    EXPECT_EQ(estimate_tokens(std::string(301, 'x')), 101u);
    EXPECT_EQ(estimate_tokens("ab"), 1u);
}

TEST(Estimator, MonotoneInPrefix) {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::string s(rng() % 500, ' ');
        for (auto& c : s) c = static_cast<char>(32 + rng() % 95);
        const std::size_t cut = s.empty() ? 0 : rng() % s.size();
        EXPECT_LE(estimate_tokens(std::string_view(s).substr(0, cut)), estimate_tokens(s));
    }
}
