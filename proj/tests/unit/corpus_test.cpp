#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.hpp"
#include "t2s/corpus.hpp"
#include "t2s/errors.hpp"

using namespace t2s;

namespace {

std::vector<CorpusRecord> read_records(const fs::path& p) {
    std::vector<CorpusRecord> out;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) out.push_back(corpus_record_from_json(json::parse(line)));
    return out;
}

// Questions named by the Q: lines of an instruction, in order.
std::vector<std::string> q_lines(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while ((pos = text.find("Q: ", pos)) != std::string::npos) {
        if (pos == 0 || text[pos - 1] == '\n') {
            const auto end = text.find('\n', pos);
            out.push_back(text.substr(pos + 3, end - pos - 3));
        }
        pos += 3;
    }
    return out;
}

// A one-table bundle with n examples whose questions are all distinct.
DatasetBundle synthetic_bundle(int n) {
    DatasetBundle b;
    b.name = "synthetic";
    DatabaseSchema s;
    s.db_id = "shop";
    s.tables.push_back({"item", {{"id", ColumnType::number, "id"}, {"price", ColumnType::number, "price"}}});
    b.schemas["shop"] = s;
    auto& split = b.splits["train"];
    for (int i = 0; i < n; ++i)
        split.push_back(ExampleTriple{i, "train", "how many items cost " + std::to_string(i) + "?",
                                      "SELECT count(*) FROM item WHERE price = " + std::to_string(i), "shop"});
    return b;
}

class CorpusTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        tmp_ = new fx::TempDir;
        bundle_ = new DatasetBundle(fx::spider_mini(tmp_->path(), false));
    }
    static void TearDownTestSuite() {
        delete bundle_;
        delete tmp_;
    }
    static const std::vector<ExampleTriple>& train() { return bundle_->split("train"); }
    static inline fx::TempDir* tmp_ = nullptr;
    static inline DatasetBundle* bundle_ = nullptr;
};

}  // namespace

TEST_F(CorpusTest, FixedSeedIsByteIdentical) {
    fx::TempDir out;
    SelectionPolicy p{SelectionStrategy::random, 3, 99};
    export_corpus(train(), *bundle_, PromptTemplate::sentence(), p, {}, out.path() / "a.jsonl");
    export_corpus(train(), *bundle_, PromptTemplate::sentence(), p, {}, out.path() / "b.jsonl");
    EXPECT_EQ(fx::slurp(out.path() / "a.jsonl"), fx::slurp(out.path() / "b.jsonl"));
    EXPECT_FALSE(fs::exists(out.path() / "a.jsonl.partial"));
    p.seed = 100;
    export_corpus(train(), *bundle_, PromptTemplate::sentence(), p, {}, out.path() / "c.jsonl");
    EXPECT_NE(fx::slurp(out.path() / "a.jsonl"), fx::slurp(out.path() / "c.jsonl"));
}

TEST_F(CorpusTest, RecordsFollowExampleOrderAndCarryGold) {
    fx::TempDir out;
    auto sum = export_corpus(train(), *bundle_, PromptTemplate::compact(), {SelectionStrategy::random, 2, 5}, {},
                             out.path() / "c.jsonl");
    auto recs = read_records(out.path() / "c.jsonl");
    ASSERT_EQ(recs.size(), train().size());
    EXPECT_EQ(sum.count, recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        EXPECT_EQ(recs[i].example_index, train()[i].index);
        EXPECT_EQ(recs[i].output, train()[i].gold_sql);
        EXPECT_EQ(recs[i].shots, 2u);
        EXPECT_EQ(recs[i].exemplar_ids.size(), 2u);
        EXPECT_TRUE(recs[i].instruction.ends_with("Q: " + train()[i].question + "\nResponse: "));
    }
    EXPECT_EQ(sum.shot_histogram, (std::map<std::size_t, std::size_t>{{2, 10}}));
}

TEST_F(CorpusTest, NoSelfLeakageByIdsOrText) {
    fx::TempDir out;
    for (auto strategy : {SelectionStrategy::random, SelectionStrategy::question_similarity,
                          SelectionStrategy::dual_similarity}) {
        auto idx = build_index(train(), std::make_shared<TrigramEmbedder>());
        export_corpus(train(), *bundle_, PromptTemplate::sentence(), {strategy, 5, 1}, {}, out.path() / "c.jsonl",
                      &idx);
        for (const auto& r : read_records(out.path() / "c.jsonl")) {
            EXPECT_EQ(std::count(r.exemplar_ids.begin(), r.exemplar_ids.end(), r.example_index), 0);
            // the target question appears once, as the final Q line
            const auto& q = train()[static_cast<std::size_t>(r.example_index)].question;
            auto qs = q_lines(r.instruction);
            ASSERT_EQ(qs.size(), r.shots + 1);
            EXPECT_EQ(qs.back(), q);
            EXPECT_EQ(std::count(qs.begin(), qs.end(), q), 1);
            // the gold answer is never in the prompt
            EXPECT_EQ(r.instruction.find("Response: " + r.output + "\n"), std::string::npos);
        }
    }
}

TEST_F(CorpusTest, KIsClampedToAvailableExemplars) {
    fx::TempDir out;
    auto sum = export_corpus(train(), *bundle_, PromptTemplate::compact(), {SelectionStrategy::random, 50, 1}, {},
                             out.path() / "c.jsonl");
    EXPECT_EQ(sum.shot_histogram.begin()->first, train().size() - 1);
}

TEST_F(CorpusTest, OverBudgetExamplesAreSkippedAndReported) {
    fx::TempDir out;
    CorpusOptions o;
    // college_2's schema is larger than concert_singer's; squeeze between them
    const auto small = build_prompt(train()[0], {}, *bundle_, PromptTemplate::sentence()).token_estimate;
    const auto large = build_prompt(train()[6], {}, *bundle_, PromptTemplate::sentence()).token_estimate;
    ASSERT_LT(small, large);
    o.budget = TokenBudget{small + (large - small) / 2, 0};
    auto sum = export_corpus(train(), *bundle_, PromptTemplate::sentence(), {}, o, out.path() / "c.jsonl");
    EXPECT_EQ(sum.count, 6u);
    ASSERT_EQ(sum.skipped.size(), 4u);
    EXPECT_EQ(sum.skipped[0].example_index, 6);
    EXPECT_FALSE(sum.skipped[0].reason.empty());
    EXPECT_LE(sum.tokens_max, o.budget.prompt_limit());
    EXPECT_EQ(read_records(out.path() / "c.jsonl").size(), 6u);
}

TEST_F(CorpusTest, SummaryTokenStats) {
    fx::TempDir out;
    auto sum = export_corpus(train(), *bundle_, PromptTemplate::sentence(), {}, {}, out.path() / "c.jsonl");
    std::size_t lo = SIZE_MAX, hi = 0, total = 0;
    for (const auto& r : read_records(out.path() / "c.jsonl")) {
        const auto t = estimate_tokens(r.instruction);
        lo = std::min(lo, t);
        hi = std::max(hi, t);
        total += t;
    }
    EXPECT_EQ(sum.tokens_min, lo);
    EXPECT_EQ(sum.tokens_max, hi);
    EXPECT_DOUBLE_EQ(sum.tokens_mean, static_cast<double>(total) / 10.0);
    auto j = to_json(sum);
    EXPECT_EQ(j["count"], 10);
    EXPECT_EQ(j["token_estimate"]["max"], hi);
}

TEST(CorpusMixing, RandomShotOverTenThousandExamples) {
    auto b = synthetic_bundle(10000);
    fx::TempDir out;
    CorpusOptions o;
    o.mode = ShotMode::random_shot;
    auto sum = export_corpus(b.split("train"), b, PromptTemplate::sentence(), {SelectionStrategy::random, 0, 2024}, o,
                             out.path() / "mix.jsonl");
    EXPECT_EQ(sum.count, 10000u);
    EXPECT_TRUE(sum.skipped.empty());
    ASSERT_EQ(sum.shot_histogram.size(), 4u);
    for (std::size_t k : {0u, 1u, 3u, 5u}) {
        EXPECT_GE(sum.shot_histogram[k], 2300u) << k;
        EXPECT_LE(sum.shot_histogram[k], 2700u) << k;
    }
    EXPECT_LE(sum.tokens_max, 2048u - 512u);
    std::size_t line_no = 0;
    for (const auto& r : read_records(out.path() / "mix.jsonl")) {
        EXPECT_EQ(r.example_index, static_cast<int>(line_no++));
        EXPECT_EQ(std::count(r.exemplar_ids.begin(), r.exemplar_ids.end(), r.example_index), 0);
        EXPECT_LE(estimate_tokens(r.instruction), 2048u - 512u);
    }
}

TEST(CorpusRecordJson, Shape) {
    CorpusRecord r{"prompt", "SELECT 1", 4, 2, {1, 2}};
    auto j = to_json(r);
    EXPECT_EQ(j["instruction"], "prompt");
    EXPECT_EQ(j["output"], "SELECT 1");
    EXPECT_EQ(j["meta"]["example_index"], 4);
    EXPECT_EQ(j["meta"]["shots"], 2);
    auto back = corpus_record_from_json(j);
    EXPECT_EQ(back.exemplar_ids, (std::vector<int>{1, 2}));
}

TEST(TrainProfile, DefaultValues) {
    TrainProfile p;
    EXPECT_EQ(p.lora_rank, 64);
    EXPECT_EQ(p.lora_alpha, 32);
    EXPECT_DOUBLE_EQ(p.learning_rate, 0.0002);
    EXPECT_EQ(p.epochs, 8);
    EXPECT_EQ(p.max_source_length, 2048);
    EXPECT_EQ(p.max_target_length, 512);
    EXPECT_NO_THROW(p.validate());
}

TEST(TrainProfile, EmitAndLoadRoundTrip) {
    fx::TempDir tmp;
    for (auto m : {TuneMethod::lora, TuneMethod::qlora}) {
        TrainProfile p;
        p.method = m;
        p.model_name = "llama2-7b";
        auto path = emit_train_profile(p, tmp.path() / "sub" / "profile.json");
        EXPECT_EQ(load_train_profile(path), p);
        auto j = read_json_file(path);
        EXPECT_EQ(j["lora_rank"], 64);
        EXPECT_EQ(j["learning_rate"], 0.0002);
        EXPECT_EQ(j["method"], to_string(m));
    }
}

TEST(TrainProfile, InvalidProfilesRejected) {
    TrainProfile p;
    p.max_source_length = 4096;
    EXPECT_THROW(p.validate(), ContractViolation);
    EXPECT_NO_THROW(p.validate(TokenBudget{4096, 512}));
    p = TrainProfile{};
    p.epochs = 0;
    EXPECT_THROW(p.validate(), ContractViolation);
    EXPECT_THROW(train_profile_from_json(json{{"method", "full"}}), ValidationError);
    EXPECT_THROW(train_profile_from_json(json{{"lora_rank", "big"}}), ValidationError);
    EXPECT_THROW(train_profile_from_json(json::array()), ValidationError);
}
