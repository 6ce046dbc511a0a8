#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <regex>

#include "fixtures.hpp"
#include "t2s/errors.hpp"
#include "t2s/pipeline.hpp"
#include "t2s/stub_server.hpp"

using namespace t2s;

namespace {

json base_config(const fs::path& root, bool with_db = true) {
    auto src = fx::spider_mini_source(root, with_db);
    json j = {{"dataset",
               {{"name", "spider_mini"},
                {"dialect", "spider"},
                {"tables", src.tables.string()},
                {"splits", {{"train", src.splits.at("train").string()}, {"dev", src.splits.at("dev").string()}}}}},
              {"selection", {{"strategy", "random"}, {"k", 0}}},
              {"endpoint", {{"base_url", "http://127.0.0.1:1/v1"}, {"model_name", "stub"}, {"max_retries", 0}}},
              {"metrics", {{"timeout_ms", 5000}}},
              {"seed", 7}};
    if (with_db) j["dataset"]["db_dir"] = (root / "database").string();
    return j;
}

std::vector<std::string> issues_of(const json& j, const fs::path& base) {
    try {
        parse_run_config(j, base);
    } catch (const ValidationError& e) {
        return e.issues();
    }
    return {};
}

bool mentions(const std::vector<std::string>& issues, const std::string& word) {
    for (const auto& i : issues)
        if (i.find(word) != std::string::npos) return true;
    return false;
}

int run_bench(const std::string& args, std::string* out = nullptr) {
    fx::TempDir tmp;
    const auto cap = tmp.path() / "out.txt";
    const std::string cmd = std::string(T2S_BENCH_EXE) + " " + args + " >" + cap.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (out) *out = fx::slurp(cap);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, MinimalConfigParses) {
    fx::TempDir tmp;
    auto cfg = parse_run_config(base_config(tmp.path()), tmp.path());
    EXPECT_EQ(cfg.dataset.name, "spider_mini");
    EXPECT_EQ(cfg.seed, 7u);
    EXPECT_EQ(cfg.output_dir, tmp.path() / "runs");
    EXPECT_EQ(cfg.budget.max_context, 2048u);
    EXPECT_EQ(cfg.budget.reserved_response, 512u);
    EXPECT_EQ(cfg.endpoint.temperature, 0.0);
    EXPECT_EQ(cfg.api_key_env, "T2S_API_KEY");
    EXPECT_EQ(cfg.fingerprint.size(), 64u);
}

TEST(Config, EveryProblemIsReported) {
    fx::TempDir tmp;
    auto j = base_config(tmp.path());
    j["colour"] = "blue";
    j["prompt"] = {{"style", "fancy"}};
    j["dataset"]["tables"] = "/nonexistent/tables.json";
    j["selection"]["strategy"] = "nearest";
    auto issues = issues_of(j, tmp.path());
    EXPECT_GE(issues.size(), 4u);
    EXPECT_TRUE(mentions(issues, "colour"));
    EXPECT_TRUE(mentions(issues, "fancy"));
    EXPECT_TRUE(mentions(issues, "tables"));
    EXPECT_TRUE(mentions(issues, "nearest"));
}

TEST(Config, MissingDatasetRejected) {
    fx::TempDir tmp;
    EXPECT_FALSE(issues_of(json::object(), tmp.path()).empty());
}

TEST(Config, ApiKeyInFileRejected) {
    fx::TempDir tmp;
    auto j = base_config(tmp.path());
    j["endpoint"]["api_key"] = "sk-secret";
    auto issues = issues_of(j, tmp.path());
    ASSERT_FALSE(issues.empty());
    EXPECT_TRUE(mentions(issues, "api_key"));
    EXPECT_FALSE(mentions(issues, "sk-secret"));
}

TEST(Config, RelativePathsResolveAgainstConfigDir) {
    fx::TempDir tmp;
    auto j = base_config(tmp.path());
    fs::create_directories(tmp.path() / "cfg");
    fs::copy_file(j["dataset"]["tables"].get<std::string>(), tmp.path() / "cfg" / "tables.json");
    j["dataset"]["tables"] = "tables.json";
    j["output_dir"] = "out";
    std::ofstream(tmp.path() / "cfg" / "run.json") << j.dump();
    auto cfg = load_run_config(tmp.path() / "cfg" / "run.json");
    EXPECT_EQ(cfg.dataset.tables, tmp.path() / "cfg" / "tables.json");
    EXPECT_EQ(cfg.output_dir, tmp.path() / "cfg" / "out");
}

TEST(Config, FingerprintIgnoresOutputDirButNotSeed) {
    fx::TempDir tmp;
    auto j = base_config(tmp.path());
    auto a = parse_run_config(j, tmp.path());
    auto b = parse_run_config(j, tmp.path(), ConfigOverrides{std::nullopt, fs::path("/elsewhere")});
    EXPECT_EQ(a.fingerprint, b.fingerprint);
    EXPECT_EQ(b.output_dir, "/elsewhere");
    j["output_dir"] = "x";
    EXPECT_EQ(parse_run_config(j, tmp.path()).fingerprint, a.fingerprint);
    auto c = parse_run_config(j, tmp.path(), ConfigOverrides{8, std::nullopt});
    EXPECT_NE(c.fingerprint, a.fingerprint);
    j["seed"] = 8;
    EXPECT_EQ(parse_run_config(j, tmp.path()).fingerprint, c.fingerprint);
}

TEST(RunDir, NamingAndReuse) {
    fx::TempDir tmp;
    auto cfg = parse_run_config(base_config(tmp.path()), tmp.path());
    auto fresh = resolve_run_dir(cfg, std::nullopt, true);
    EXPECT_TRUE(std::regex_match(fresh.filename().string(), std::regex(R"(\d{8}T\d{6}Z-[0-9a-f]{8})")));
    EXPECT_EQ(fresh.filename().string().substr(17), cfg.fingerprint.substr(0, 8));
    fs::create_directories(cfg.output_dir / ("20000101T000000Z-" + cfg.fingerprint.substr(0, 8)));
    fs::create_directories(cfg.output_dir / ("20990101T000000Z-" + cfg.fingerprint.substr(0, 8)));
    fs::create_directories(cfg.output_dir / "20991231T000000Z-deadbeef");
    EXPECT_EQ(resolve_run_dir(cfg, std::nullopt, false).filename(), "20990101T000000Z-" + cfg.fingerprint.substr(0, 8));
    EXPECT_EQ(resolve_run_dir(cfg, std::string("mine"), false), cfg.output_dir / "mine");
    EXPECT_THROW(resolve_run_dir(cfg, std::string("../up"), false), ValidationError);
}

TEST(Ingest, ManifestCounts) {
    fx::TempDir tmp;
    auto cfg = parse_run_config(base_config(tmp.path()), tmp.path());
    auto m = cmd_ingest(cfg, tmp.path() / "run");
    EXPECT_TRUE(fs::exists(tmp.path() / "run" / "manifest.json"));
    EXPECT_EQ(m["splits"]["train"], 10);
    EXPECT_EQ(m["splits"]["dev"], 20);
    EXPECT_EQ(m["difficulty"]["dev"]["easy"], 3);
    EXPECT_EQ(m["difficulty"]["dev"]["medium"], 10);
    EXPECT_EQ(m["difficulty"]["dev"]["hard"], 6);
    EXPECT_EQ(m["difficulty"]["dev"]["extra"], 1);
    EXPECT_EQ(m["db_files"]["found"], 2);
    EXPECT_EQ(m["databases"]["college_2"]["tables"], 11);
    EXPECT_EQ(m["config_fingerprint"], cfg.fingerprint);
}

TEST(Ingest, MissingDatabasesAreCountedNotFatal) {
    fx::TempDir tmp;
    auto cfg = parse_run_config(base_config(tmp.path(), false), tmp.path());
    auto m = cmd_ingest(cfg, tmp.path() / "run");
    EXPECT_EQ(m["db_files"]["found"], 0);
    EXPECT_EQ(m["db_files"]["missing"].size(), 2u);
}

namespace {

class StubRun : public ::testing::Test {
protected:
    void SetUp() override {
        auto j = base_config(tmp_.path());
        for (const auto& r : read_json_file(j["dataset"]["splits"]["dev"].get<std::string>()))
            opts_.answers[r["question"]] = r["query"];
        stub_ = std::make_unique<StubServer>(opts_);
        stub_->start();
        j["endpoint"]["base_url"] = stub_->base_url();
        config_ = j;
    }
    RunConfig cfg() const { return parse_run_config(config_, tmp_.path()); }

    fx::TempDir tmp_;
    StubOptions opts_;
    std::unique_ptr<StubServer> stub_;
    json config_;
};

}  // namespace

TEST_F(StubRun, GoldEchoEvaluatesToOne) {
    auto c = cfg();
    const auto run = tmp_.path() / "run";
    auto preds = cmd_predict(c, run, "dev", 0);
    EXPECT_EQ(preds, run / "predictions" / "dev-0shot.jsonl");
    EXPECT_TRUE(fs::exists(run / "predictions" / "dev-0shot.timing.jsonl"));
    EXPECT_FALSE(fs::exists(run / "predictions" / "dev-0shot.jsonl.partial"));
    auto s = cmd_evaluate(c, run, preds, "dev");
    EXPECT_EQ(s.overall, (Tally{20, 20, 20, 20, 20}));
    EXPECT_EQ(s.run_id, "run");
    const auto txt = fx::slurp(run / "reports" / "dev-0shot.txt");
    EXPECT_NE(txt.find("1.000"), std::string::npos);
    EXPECT_EQ(txt.find("0.9"), std::string::npos);
    EXPECT_EQ(summary_from_json(read_json_file(run / "reports" / "dev-0shot.json")), s);
}

TEST_F(StubRun, PredictionFileHasNoTimings) {
    auto c = cfg();
    auto preds = cmd_predict(c, tmp_.path() / "run", "dev", 0);
    std::ifstream in(preds);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        auto j = json::parse(line);
        EXPECT_EQ(j["example_index"], n++);
        EXPECT_FALSE(j.contains("latency_ms"));
    }
    EXPECT_EQ(n, 20);
}

TEST_F(StubRun, EmOnlyConfigShowsNaForEx) {
    config_["metrics"]["ex"] = false;
    auto c = cfg();
    const auto run = tmp_.path() / "run";
    auto s = cmd_evaluate(c, run, cmd_predict(c, run, "dev", 0), "dev");
    EXPECT_EQ(s.overall.ex_n, 0);
    EXPECT_EQ(s.overall.em_correct, 20);
    const auto txt = fx::slurp(run / "reports" / "dev-0shot.txt");
    EXPECT_NE(txt.find("n/a"), std::string::npos);
}

TEST_F(StubRun, FewShotAndCorpus) {
    config_["selection"] = {{"strategy", "question-similarity"}, {"k", 2}, {"pool", "train"}};
    config_["corpus"] = {{"k", json::array({0, 3})}, {"random_shot", true}};
    auto c = cfg();
    const auto run = tmp_.path() / "run";
    auto preds = cmd_predict(c, run, "dev", 2);
    EXPECT_EQ(preds.filename(), "dev-2shot.jsonl");
    auto files = cmd_build_corpus(c, run);
    EXPECT_EQ(files.size(), 3u);
    for (const char* name : {"train-0shot.jsonl", "train-3shot.jsonl", "train-random-shot.jsonl",
                             "train-random-shot.summary.json"})
        EXPECT_TRUE(fs::exists(run / "corpus" / name)) << name;
}

TEST_F(StubRun, PredictResumesFromPartial) {
    auto c = cfg();
    const auto run = tmp_.path() / "run";
    fs::create_directories(run / "predictions");
    {
        // two finished records and a torn third, as a killed run leaves them
        std::ofstream out(run / "predictions" / "dev-0shot.jsonl.partial");
        out << to_json(Prediction{0, "SELECT count(*) FROM singer", "SELECT count(*) FROM singer"}).dump() << "\n";
        out << to_json(Prediction{5, "SELECT 5", "SELECT 5"}).dump() << "\n";
        out << R"({"example_index": 7, "raw)";
    }
    auto preds = read_predictions(cmd_predict(c, run, "dev", 0));
    ASSERT_EQ(preds.size(), 20u);
    for (int i = 0; i < 20; ++i) EXPECT_EQ(preds[static_cast<std::size_t>(i)].example_index, i);
    EXPECT_EQ(preds[5].extracted_sql, "SELECT 5");
    EXPECT_EQ(stub_->request_count(), 18);
}

TEST_F(StubRun, CompareWritesDelta) {
    auto c = cfg();
    auto s1 = cmd_evaluate(c, tmp_.path() / "a", cmd_predict(c, tmp_.path() / "a", "dev", 0), "dev");
    config_["endpoint"]["base_url"] = "http://127.0.0.1:1/v1";
    auto d = cmd_compare(tmp_.path() / "a" / "reports" / "dev-0shot.json",
                         tmp_.path() / "a" / "reports" / "dev-0shot.json", tmp_.path() / "cmp");
    EXPECT_EQ(d.overall.ex, Rational{});
    EXPECT_TRUE(fs::exists(tmp_.path() / "cmp" / "delta-dev-0shot-vs-dev-0shot.csv"));
}

TEST(Cli, ExitCodes) {
    fx::TempDir tmp;
    std::string out;
    EXPECT_EQ(run_bench("", &out), 1);
    EXPECT_EQ(run_bench("--help", &out), 0);
    EXPECT_NE(out.find("predict"), std::string::npos);
    EXPECT_EQ(run_bench("ingest --config " + (tmp.path() / "missing.json").string(), &out), 1);
    EXPECT_NE(out.find("not found"), std::string::npos);
    EXPECT_EQ(run_bench("ingest", &out), 1);
    EXPECT_EQ(run_bench("compare a.json b.json", &out), 1);
    EXPECT_EQ(run_bench("frobnicate", &out), 1);
}

TEST(Cli, IngestAndProfile) {
    fx::TempDir tmp;
    auto j = base_config(tmp.path());
    std::ofstream(tmp.path() / "run.json") << j.dump();
    const std::string cfg = "--config " + (tmp.path() / "run.json").string();
    std::string out;
    ASSERT_EQ(run_bench(cfg + " --run-id r1 ingest", &out), 0) << out;
    EXPECT_NE(out.find("dev: 20 examples"), std::string::npos);
    EXPECT_TRUE(fs::exists(tmp.path() / "runs" / "r1" / "manifest.json"));
    ASSERT_EQ(run_bench(cfg + " --run-id r1 emit-train-profile --method qlora", &out), 0) << out;
    auto p = load_train_profile(tmp.path() / "runs" / "r1" / "train_profile.json");
    EXPECT_EQ(p.method, TuneMethod::qlora);
    EXPECT_EQ(p.lora_rank, 64);
    EXPECT_EQ(run_bench(cfg + " emit-train-profile --method full", &out), 1);
}

TEST(Cli, PredictAgainstDeadEndpointIsNotFatalPerExample) {
    fx::TempDir tmp;
    auto j = base_config(tmp.path());
    j["endpoint"]["timeout_ms"] = 500;
    std::ofstream(tmp.path() / "run.json") << j.dump();
    const std::string cfg = "--config " + (tmp.path() / "run.json").string() + " --run-id r";
    std::string out;
    ASSERT_EQ(run_bench(cfg + " predict", &out), 0) << out;
    ASSERT_EQ(run_bench(cfg + " evaluate", &out), 0) << out;
    EXPECT_NE(out.find("0.000"), std::string::npos);
}
