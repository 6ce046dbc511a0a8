#include "t2s/inference.hpp"

#include <httplib.h>

#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>

#include "t2s/errors.hpp"

namespace t2s {

void ModelEndpoint::validate() const {
    std::vector<std::string> issues;
    if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0)
        issues.push_back("endpoint base_url must start with http:// or https://");
    if (model_name.empty()) issues.emplace_back("endpoint model_name must be set");
    if (temperature < 0) issues.emplace_back("endpoint temperature must be >= 0");
    if (max_response_tokens <= 0) issues.emplace_back("endpoint max_response_tokens must be positive");
    if (max_retries < 0) issues.emplace_back("endpoint max_retries must be >= 0");
    if (concurrency_limit <= 0) issues.emplace_back("endpoint concurrency_limit must be positive");
    if (timeout.count() <= 0) issues.emplace_back("endpoint timeout must be positive");
    if (!issues.empty()) throw ValidationError(std::move(issues));
}

namespace {

struct Target {
    std::string origin;
    std::string path;
};

Target completions_target(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    const auto path_start = base_url.find('/', scheme_end + 3);
    Target t;
    t.origin = path_start == std::string::npos ? base_url : base_url.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "" : base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    t.path = prefix + "/chat/completions";
    return t;
}

enum class Outcome { ok, transient, permanent };

struct Attempt {
    Outcome outcome = Outcome::ok;
    std::string content;
    PredictionError error;
};

Attempt request_once(httplib::Client& cli, const Target& target, const std::string& body) {
    Attempt a;
    auto res = cli.Post(target.path, body, "application/json");
    if (!res) {
        a.outcome = Outcome::transient;
        a.error = {"transport", httplib::to_string(res.error())};
        return a;
    }
    if (res->status != 200) {
        a.outcome = (res->status == 429 || res->status >= 500) ? Outcome::transient : Outcome::permanent;
        a.error = {"http-status", "HTTP " + std::to_string(res->status)};
        return a;
    }
    try {
        const json reply = json::parse(res->body);
        a.content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        a.outcome = Outcome::permanent;
        a.error = {"bad-response", e.what()};
    }
    return a;
}

Prediction predict_one(const PromptEnvelope& env, const ModelEndpoint& endpoint, const Target& target) {
    httplib::Client cli(target.origin);
    cli.set_connection_timeout(endpoint.timeout);
    cli.set_read_timeout(endpoint.timeout);
    cli.set_write_timeout(endpoint.timeout);
    if (endpoint.api_key) cli.set_bearer_token_auth(*endpoint.api_key);

    const json body = {{"model", endpoint.model_name},
                       {"messages", json::array({{{"role", "user"}, {"content", env.text}}})},
                       {"temperature", endpoint.temperature},
                       {"max_tokens", endpoint.max_response_tokens}};
    const std::string payload = body.dump();

    Prediction p;
    p.example_index = env.target_index;
    const auto start = std::chrono::steady_clock::now();
    auto backoff = endpoint.initial_backoff;
    for (int attempt = 0;; ++attempt) {
        ++p.attempt_count;
        Attempt a = request_once(cli, target, payload);
        if (a.outcome == Outcome::ok) {
            p.raw_text = std::move(a.content);
            p.extracted_sql = extract_sql(p.raw_text);
            if (p.extracted_sql.empty()) p.error = PredictionError{"bad-response", "empty completion"};
            break;
        }
        if (a.outcome == Outcome::permanent || attempt >= endpoint.max_retries) {
            p.error = std::move(a.error);
            break;
        }
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
    }
    p.latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    return p;
}

}  // namespace

std::vector<Prediction> predict_batch(std::span<const PromptEnvelope> envelopes, const ModelEndpoint& endpoint,
                                      const std::function<void(const Prediction&)>& on_complete) {
    endpoint.validate();
    std::vector<Prediction> results(envelopes.size());
    if (envelopes.empty()) return results;
    const Target target = completions_target(endpoint.base_url);

    std::atomic<std::size_t> cursor{0};
    std::mutex sink;
    auto worker = [&] {
        for (std::size_t i = cursor++; i < envelopes.size(); i = cursor++) {
            Prediction p = predict_one(envelopes[i], endpoint, target);
            std::lock_guard lock(sink);
            if (on_complete) on_complete(p);
            results[i] = std::move(p);
        }
    };
    const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(endpoint.concurrency_limit), envelopes.size());
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    pool.clear();
    return results;
}

json to_json(const Prediction& p) {
    json j = {{"example_index", p.example_index},
              {"raw_text", p.raw_text},
              {"extracted_sql", p.extracted_sql},
              {"latency_ms", p.latency.count()},
              {"attempt_count", p.attempt_count}};
    if (p.error) j["error"] = {{"kind", p.error->kind}, {"message", p.error->message}};
    return j;
}

Prediction prediction_from_json(const json& j) {
    Prediction p;
    p.example_index = j.at("example_index").get<int>();
    p.raw_text = j.value("raw_text", "");
    p.extracted_sql = j.value("extracted_sql", "");
    p.latency = std::chrono::milliseconds(j.value("latency_ms", 0LL));
    p.attempt_count = j.value("attempt_count", 1);
    if (j.contains("error") && j["error"].is_object())
        p.error = PredictionError{j["error"].value("kind", "unknown"), j["error"].value("message", "")};
    return p;
}

std::vector<Prediction> read_predictions(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read predictions " + path.string());
    std::vector<Prediction> out;
    std::string line;
    std::size_t lineno = 0;
    std::optional<std::string> pending_error;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        if (pending_error) throw ValidationError(*pending_error);
        try {
            out.push_back(prediction_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            // Only tolerated on the last line.
            pending_error = path.string() + ":" + std::to_string(lineno) + ": malformed prediction record";
        }
    }
    return out;
}

}  // namespace t2s
