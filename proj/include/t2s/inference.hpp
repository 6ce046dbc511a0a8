#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "t2s/prompt.hpp"
#include "t2s/util.hpp"

namespace t2s {

/// A chat-completions compatible model service. `model_name` identifies the
/// base or fine-tuned model behind it.
struct ModelEndpoint {
    std::string base_url;  // e.g. http://127.0.0.1:8000/v1
    std::string model_name;
    std::optional<std::string> api_key;
    double temperature = 0.0;
    int max_response_tokens = 512;
    std::chrono::milliseconds timeout{30000};
    int max_retries = 2;
    int concurrency_limit = 4;
    std::chrono::milliseconds initial_backoff{200};

    void validate() const;
};

struct PredictionError {
    std::string kind;  // "http-status", "transport", "bad-response"
    std::string message;
};

struct Prediction {
    int example_index = 0;
    std::string raw_text;
    std::string extracted_sql;
    std::chrono::milliseconds latency{0};
    int attempt_count = 0;
    std::optional<PredictionError> error;
};

/// Pulls the SQL statement out of a model reply: drops code fences and any
/// chatter before the first SELECT / WITH <cte> AS ( / INSERT INTO, cuts at
/// the first statement-ending semicolon and folds line breaks to spaces.
/// Replies with no SQL start come back trimmed but otherwise unchanged.
std::string extract_sql(std::string_view raw);

/// Sends every envelope to the endpoint with at most concurrency_limit
/// requests in flight. Results keep envelope order. `on_complete` is called
/// once per finished prediction, never concurrently.
std::vector<Prediction> predict_batch(std::span<const PromptEnvelope> envelopes, const ModelEndpoint& endpoint,
                                      const std::function<void(const Prediction&)>& on_complete = {});

json to_json(const Prediction& p);
Prediction prediction_from_json(const json& j);

/// Reads a prediction file (one JSON record per line). A torn final line,
/// as left by an interrupted writer, is ignored.
std::vector<Prediction> read_predictions(const fs::path& path);

}  // namespace t2s
