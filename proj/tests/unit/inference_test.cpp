#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.hpp"
#include "t2s/errors.hpp"
#include "t2s/inference.hpp"
#include "t2s/stub_server.hpp"

using namespace t2s;
using namespace std::chrono_literals;

TEST(ExtractSql, StripsFencesAndChatter) {
    EXPECT_EQ(extract_sql("Sure! Here it is:\n```sql\nSELECT name\nFROM singer;\n```\nHope that helps."),
              "SELECT name FROM singer");
    EXPECT_EQ(extract_sql("  select 1  "), "select 1");
    EXPECT_EQ(extract_sql("SELECT 'a;b' FROM t; DROP TABLE t"), "SELECT 'a;b' FROM t");
    EXPECT_EQ(extract_sql("WITH x AS (SELECT 1) SELECT * FROM x"), "WITH x AS (SELECT 1) SELECT * FROM x");
    EXPECT_EQ(extract_sql("the selection is: INSERT INTO t VALUES (1)"), "INSERT INTO t VALUES (1)");
    EXPECT_EQ(extract_sql("  I don't know  "), "I don't know");
    EXPECT_EQ(extract_sql("preselected SELECT a FROM b"), "SELECT a FROM b");
    EXPECT_EQ(extract_sql(""), "");
}

TEST(ExtractSql, KeepsSpacingWithinALine) {
    EXPECT_EQ(extract_sql("SELECT a ,  b FROM t"), "SELECT a ,  b FROM t");
}

TEST(Endpoint, Validation) {
    ModelEndpoint e{"ftp://x", "", std::nullopt};
    try {
        e.validate();
        FAIL();
    } catch (const ValidationError& v) {
        EXPECT_GE(v.issues().size(), 2u);
    }
    EXPECT_NO_THROW((ModelEndpoint{"http://127.0.0.1:1/v1", "m", std::nullopt}).validate());
}

namespace {

std::vector<PromptEnvelope> envelopes(int n) {
    std::vector<PromptEnvelope> out;
    for (int i = 0; i < n; ++i) {
        PromptEnvelope e;
        e.target_index = i;
        e.text = "schema\n\nQ: question " + std::to_string(i) + "\nResponse: ";
        out.push_back(e);
    }
    return out;
}

ModelEndpoint endpoint_for(const StubServer& s) {
    ModelEndpoint e;
    e.base_url = s.base_url();
    e.model_name = "stub";
    e.timeout = 5000ms;
    e.initial_backoff = 5ms;
    return e;
}

}  // namespace

TEST(LastQuestion, TakesFinalQLine) {
    EXPECT_EQ(last_question("Q: a\nResponse: x\n\nQ: b c\nResponse: "), "b c");
    EXPECT_EQ(last_question("nothing"), "");
}

TEST(PredictBatch, EchoKeepsOrderAndIndices) {
    StubOptions o;
    for (int i = 0; i < 12; ++i) o.answers["question " + std::to_string(i)] = "SELECT " + std::to_string(i);
    o.delay = 3ms;
    StubServer stub(o);
    stub.start();
    auto env = envelopes(12);
    std::vector<int> completed;
    auto ep = endpoint_for(stub);
    ep.concurrency_limit = 4;
    auto preds = predict_batch(env, ep, [&](const Prediction& p) { completed.push_back(p.example_index); });
    ASSERT_EQ(preds.size(), 12u);
    for (int i = 0; i < 12; ++i) {
        EXPECT_EQ(preds[static_cast<std::size_t>(i)].example_index, i);
        EXPECT_EQ(preds[static_cast<std::size_t>(i)].extracted_sql, "SELECT " + std::to_string(i));
        EXPECT_FALSE(preds[static_cast<std::size_t>(i)].error);
        EXPECT_EQ(preds[static_cast<std::size_t>(i)].attempt_count, 1);
    }
    EXPECT_EQ(completed.size(), 12u);
    EXPECT_EQ(stub.request_count(), 12);
}

TEST(PredictBatch, FencedRepliesAreExtracted) {
    StubOptions o;
    o.mode = StubOptions::Mode::constant;
    o.constant_reply = "SELECT name FROM singer";
    o.fenced = true;
    StubServer stub(o);
    stub.start();
    auto preds = predict_batch(envelopes(1), endpoint_for(stub));
    EXPECT_EQ(preds[0].extracted_sql, "SELECT name FROM singer");
    EXPECT_NE(preds[0].raw_text, preds[0].extracted_sql);
}

TEST(PredictBatch, TransientFailuresAreRetried) {
    StubOptions o;
    o.mode = StubOptions::Mode::constant;
    o.fail_first = 2;
    StubServer stub(o);
    stub.start();
    auto ep = endpoint_for(stub);
    ep.concurrency_limit = 1;
    ep.max_retries = 2;
    auto preds = predict_batch(envelopes(1), ep);
    EXPECT_FALSE(preds[0].error);
    EXPECT_EQ(preds[0].attempt_count, 3);
    EXPECT_EQ(preds[0].extracted_sql, "SELECT 1");
}

TEST(PredictBatch, RetriesExhausted) {
    StubOptions o;
    o.mode = StubOptions::Mode::status;
    o.status = 503;
    StubServer stub(o);
    stub.start();
    auto ep = endpoint_for(stub);
    ep.max_retries = 1;
    auto preds = predict_batch(envelopes(2), ep);
    for (const auto& p : preds) {
        ASSERT_TRUE(p.error);
        EXPECT_EQ(p.error->kind, "http-status");
        EXPECT_EQ(p.attempt_count, 2);
    }
}

TEST(PredictBatch, ClientErrorIsNotRetried) {
    StubOptions o;
    o.mode = StubOptions::Mode::status;
    o.status = 400;
    StubServer stub(o);
    stub.start();
    auto ep = endpoint_for(stub);
    ep.max_retries = 3;
    auto preds = predict_batch(envelopes(1), ep);
    ASSERT_TRUE(preds[0].error);
    EXPECT_EQ(preds[0].attempt_count, 1);
    EXPECT_EQ(stub.request_count(), 1);
}

TEST(PredictBatch, UnreachableEndpointIsTransportError) {
    int port;
    {
        StubServer s(StubOptions{});
        port = s.start();
    }
    ModelEndpoint ep;
    ep.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    ep.model_name = "m";
    ep.max_retries = 1;
    ep.initial_backoff = 1ms;
    ep.timeout = 1000ms;
    auto preds = predict_batch(envelopes(1), ep);
    ASSERT_TRUE(preds[0].error);
    EXPECT_EQ(preds[0].error->kind, "transport");
}

TEST(PredictionJson, RoundTrip) {
    Prediction p{3, "raw", "SELECT 1", 12ms, 2, PredictionError{"http-status", "HTTP 500"}};
    auto q = prediction_from_json(to_json(p));
    EXPECT_EQ(q.example_index, 3);
    EXPECT_EQ(q.raw_text, "raw");
    EXPECT_EQ(q.extracted_sql, "SELECT 1");
    EXPECT_EQ(q.latency, 12ms);
    EXPECT_EQ(q.attempt_count, 2);
    ASSERT_TRUE(q.error);
    EXPECT_EQ(q.error->kind, "http-status");
}

TEST(ReadPredictions, TornFinalLineIgnored) {
    fx::TempDir tmp;
    const auto path = tmp.path() / "p.jsonl";
    {
        std::ofstream out(path);
        out << to_json(Prediction{0, "a", "SELECT 1"}).dump() << "\n";
        out << to_json(Prediction{1, "b", "SELECT 2"}).dump() << "\n";
        out << R"({"example_index": 2, "raw_te)";
    }
    auto preds = read_predictions(path);
    ASSERT_EQ(preds.size(), 2u);
    EXPECT_EQ(preds[1].extracted_sql, "SELECT 2");
}

TEST(ReadPredictions, CorruptMiddleLineRejected) {
    fx::TempDir tmp;
    const auto path = tmp.path() / "p.jsonl";
    {
        std::ofstream out(path);
        out << "{broken\n" << to_json(Prediction{1, "b", "SELECT 2"}).dump() << "\n";
    }
    EXPECT_THROW(read_predictions(path), ValidationError);
    EXPECT_THROW(read_predictions(tmp.path() / "missing.jsonl"), IoError);
}
