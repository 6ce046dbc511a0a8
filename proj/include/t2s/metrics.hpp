#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "t2s/dataset.hpp"
#include "t2s/inference.hpp"
#include "t2s/sqlite_db.hpp"

namespace t2s {

enum class FailureKind { parse_error, exec_error, timeout, db_unavailable, prediction_error, gold_error };

std::string_view to_string(FailureKind f);
std::optional<FailureKind> parse_failure_kind(std::string_view s);

struct ExecOutcome {
    std::vector<Row> rows;
    std::chrono::nanoseconds elapsed{0};
    bool ordered = false;  // statement has a top-level ORDER BY
};

struct ExecFailure {
    FailureKind kind = FailureKind::exec_error;
    std::string message;
};

using ExecResult = std::variant<ExecOutcome, ExecFailure>;

/// Runs one statement on a read-only connection and fetches all rows,
/// interrupting it once `timeout` has elapsed.
ExecResult execute_sql(std::string_view sql, const fs::path& db_file, std::chrono::milliseconds timeout);

/// Integers and reals compare numerically with relative tolerance 1e-6,
/// NULL equals NULL, text and blobs compare byte for byte.
bool cells_equal(const Cell& a, const Cell& b);

/// Row-bag equality, or sequence equality when `gold.ordered`. Columns are
/// compared positionally.
bool results_match(const ExecOutcome& pred, const ExecOutcome& gold);

/// Exact set match of two SQL strings; an unparseable prediction scores false.
bool score_em(std::string_view pred_sql, std::string_view gold_sql, const DatabaseSchema& schema);

struct ExScore {
    std::optional<bool> ex;  // empty when EX could not be decided
    std::optional<double> ves_ratio;
    std::optional<FailureKind> failure;
    std::string detail;
};

/// Execution accuracy of one prediction. With `with_ves` and a match, the
/// efficiency ratio sqrt(gold time / pred time) uses the median of three runs
/// of each query.
ExScore score_ex(std::string_view pred_sql, std::string_view gold_sql, const std::optional<fs::path>& db_file,
                 std::chrono::milliseconds timeout, bool with_ves);

struct EvalOptions {
    bool em = true;
    bool ex = true;
    bool ves = false;
    std::chrono::milliseconds timeout{30000};
    int workers = 4;
};

struct EvalRecord {
    int example_index = 0;
    std::optional<bool> em;
    std::optional<bool> ex;
    std::optional<double> ves_ratio;
    std::optional<DifficultyLabel> difficulty;
    std::optional<FailureKind> failure;
    std::string detail;
};

/// Spider examples are labelled by parsing the gold query; BIRD examples
/// carry their label. Empty when a Spider gold query does not parse.
std::optional<DifficultyLabel> example_difficulty(const ExampleTriple& example, const DatasetBundle& bundle);

/// One record per example, in example order. Examples without a usable
/// prediction get failure = prediction_error and score false.
std::vector<EvalRecord> score_run(std::span<const ExampleTriple> examples, std::span<const Prediction> predictions,
                                  const DatasetBundle& bundle, const EvalOptions& options);

json to_json(const EvalRecord& r);
EvalRecord eval_record_from_json(const json& j);

}  // namespace t2s
