#include "t2s/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <thread>

#include "t2s/sqlkit.hpp"

namespace t2s {

std::string_view to_string(FailureKind f) {
    switch (f) {
        case FailureKind::parse_error: return "parse-error";
        case FailureKind::exec_error: return "exec-error";
        case FailureKind::timeout: return "timeout";
        case FailureKind::db_unavailable: return "db-unavailable";
        case FailureKind::prediction_error: return "prediction-error";
        case FailureKind::gold_error: return "gold-error";
    }
    return "exec-error";
}

std::optional<FailureKind> parse_failure_kind(std::string_view s) {
    for (auto f : {FailureKind::parse_error, FailureKind::exec_error, FailureKind::timeout, FailureKind::db_unavailable,
                   FailureKind::prediction_error, FailureKind::gold_error})
        if (to_string(f) == s) return f;
    return std::nullopt;
}

ExecResult execute_sql(std::string_view sql, const fs::path& db_file, std::chrono::milliseconds timeout) {
    if (!fs::exists(db_file)) return ExecFailure{FailureKind::db_unavailable, "database file not found: " + db_file.string()};
    try {
        auto db = SqliteDb::open(db_file, SqliteDb::Mode::read_only);
        ExecOutcome out;
        out.ordered = sql::has_top_level_order_by(sql);
        const auto start = std::chrono::steady_clock::now();
        out.rows = db.query(sql, start + timeout);
        out.elapsed = std::max(std::chrono::nanoseconds(1), std::chrono::steady_clock::now() - start);
        return out;
    } catch (const SqliteError& e) {
        if (e.interrupted()) return ExecFailure{FailureKind::timeout, "query exceeded " + std::to_string(timeout.count()) + " ms"};
        return ExecFailure{FailureKind::exec_error, e.what()};
    }
}

namespace {

std::optional<double> numeric(const Cell& c) {
    if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
    if (const auto* d = std::get_if<double>(&c)) return *d;
    return std::nullopt;
}

int type_rank(const Cell& c) {
    switch (c.index()) {
        case 0: return 0;
        case 1:
        case 2: return 1;
        case 3: return 2;
        default: return 3;
    }
}

// Total order used to line rows up before the tolerant comparison.
bool cell_less(const Cell& a, const Cell& b) {
    const int ra = type_rank(a), rb = type_rank(b);
    if (ra != rb) return ra < rb;
    switch (ra) {
        case 1: return *numeric(a) < *numeric(b);
        case 2: return std::get<std::string>(a) < std::get<std::string>(b);
        case 3: return std::get<Blob>(a).bytes < std::get<Blob>(b).bytes;
        default: return false;
    }
}

bool row_less(const Row& a, const Row& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), cell_less);
}

bool rows_equal(const Row& a, const Row& b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), cells_equal);
}

}  // namespace

bool cells_equal(const Cell& a, const Cell& b) {
    const auto na = numeric(a), nb = numeric(b);
    if (na && nb) {
        if (std::holds_alternative<std::int64_t>(a) && std::holds_alternative<std::int64_t>(b))
            return std::get<std::int64_t>(a) == std::get<std::int64_t>(b);
        const double x = *na, y = *nb;
        if (x == y) return true;
        return std::fabs(x - y) <= 1e-6 * std::max(std::fabs(x), std::fabs(y));
    }
    if (a.index() != b.index()) return false;
    return a == b;
}

bool results_match(const ExecOutcome& pred, const ExecOutcome& gold) {
    if (pred.rows.size() != gold.rows.size()) return false;
    if (gold.ordered) return std::equal(pred.rows.begin(), pred.rows.end(), gold.rows.begin(), rows_equal);

    auto p = pred.rows;
    auto g = gold.rows;
    std::sort(p.begin(), p.end(), row_less);
    std::sort(g.begin(), g.end(), row_less);
    if (std::equal(p.begin(), p.end(), g.begin(), rows_equal)) return true;

    // Tolerant equality is not transitive, so near-equal numbers can sort
    // differently on each side; settle those by explicit matching.
    if (p.size() > 5000) return false;
    std::vector<bool> used(g.size(), false);
    for (const auto& row : p) {
        bool found = false;
        for (std::size_t j = 0; j < g.size() && !found; ++j) {
            if (!used[j] && rows_equal(row, g[j])) {
                used[j] = true;
                found = true;
            }
        }
        if (!found) return false;
    }
    return true;
}

bool score_em(std::string_view pred_sql, std::string_view gold_sql, const DatabaseSchema& schema) {
    auto gold = sql::parse_sql(gold_sql, schema);
    auto pred = sql::parse_sql(pred_sql, schema);
    if (!std::holds_alternative<sql::SqlUnit>(gold) || !std::holds_alternative<sql::SqlUnit>(pred)) return false;
    return sql::em_match(std::get<sql::SqlUnit>(pred), std::get<sql::SqlUnit>(gold));
}

namespace {

std::chrono::nanoseconds median_elapsed(std::string_view sql, const fs::path& db, std::chrono::milliseconds timeout,
                                        std::chrono::nanoseconds first) {
    std::vector<std::chrono::nanoseconds> runs{first};
    for (int i = 0; i < 2; ++i) {
        auto r = execute_sql(sql, db, timeout);
        if (const auto* ok = std::get_if<ExecOutcome>(&r)) runs.push_back(ok->elapsed);
        else return first;
    }
    std::sort(runs.begin(), runs.end());
    return runs[1];
}

}  // namespace

ExScore score_ex(std::string_view pred_sql, std::string_view gold_sql, const std::optional<fs::path>& db_file,
                 std::chrono::milliseconds timeout, bool with_ves) {
    ExScore score;
    if (!db_file || !fs::exists(*db_file)) {
        score.failure = FailureKind::db_unavailable;
        score.detail = db_file ? "database file not found: " + db_file->string() : "no database file";
        return score;
    }
    auto gold = execute_sql(gold_sql, *db_file, timeout);
    if (auto* f = std::get_if<ExecFailure>(&gold)) {
        score.failure = f->kind == FailureKind::db_unavailable ? FailureKind::db_unavailable : FailureKind::gold_error;
        score.detail = "gold: " + f->message;
        return score;
    }
    auto pred = execute_sql(pred_sql, *db_file, timeout);
    if (auto* f = std::get_if<ExecFailure>(&pred)) {
        score.ex = false;
        score.failure = f->kind;
        score.detail = f->message;
        return score;
    }
    const auto& g = std::get<ExecOutcome>(gold);
    const auto& p = std::get<ExecOutcome>(pred);
    score.ex = results_match(p, g);
    if (*score.ex && with_ves) {
        const auto gold_t = median_elapsed(gold_sql, *db_file, timeout, g.elapsed);
        const auto pred_t = median_elapsed(pred_sql, *db_file, timeout, p.elapsed);
        score.ves_ratio = std::sqrt(static_cast<double>(std::max<std::int64_t>(gold_t.count(), 1)) /
                                     static_cast<double>(std::max<std::int64_t>(pred_t.count(), 1)));
    }
    return score;
}

std::optional<DifficultyLabel> example_difficulty(const ExampleTriple& example, const DatasetBundle& bundle) {
    if (example.difficulty) return example.difficulty;
    if (bundle.dialect == Dialect::bird) return std::nullopt;
    auto parsed = sql::parse_sql(example.gold_sql, bundle.schema(example.db_id));
    if (const auto* unit = std::get_if<sql::SqlUnit>(&parsed)) return sql::classify_difficulty(*unit);
    return std::nullopt;
}

namespace {

EvalRecord score_example(const ExampleTriple& example, const Prediction* prediction, const DatasetBundle& bundle,
                         const EvalOptions& options) {
    EvalRecord r;
    r.example_index = example.index;
    r.difficulty = example_difficulty(example, bundle);
    if (!prediction || prediction->error || prediction->extracted_sql.empty()) {
        r.failure = FailureKind::prediction_error;
        r.detail = !prediction ? "no prediction" : prediction->error ? prediction->error->message : "empty prediction";
        if (options.em) r.em = false;
        if (options.ex) r.ex = false;
        return r;
    }
    const std::string& pred_sql = prediction->extracted_sql;
    std::optional<FailureKind> parse_failure;
    if (options.em) {
        const auto& schema = bundle.schema(example.db_id);
        auto gold = sql::parse_sql(example.gold_sql, schema);
        if (std::holds_alternative<sql::SqlUnit>(gold)) {
            auto pred = sql::parse_sql(pred_sql, schema);
            if (const auto* unit = std::get_if<sql::SqlUnit>(&pred)) {
                r.em = sql::em_match(*unit, std::get<sql::SqlUnit>(gold));
            } else {
                r.em = false;
                parse_failure = FailureKind::parse_error;
                r.detail = "parse: " + std::get<sql::ParseError>(pred).reason;
            }
        } else {
            r.detail = "gold query does not parse; excluded from EM";
        }
    }
    if (options.ex) {
        ExScore s = score_ex(pred_sql, example.gold_sql, bundle.db_file(example.db_id), options.timeout, options.ves);
        r.ex = s.ex;
        r.ves_ratio = s.ves_ratio;
        if (s.failure) {
            r.failure = s.failure;
            r.detail = s.detail;
        }
    }
    if (!r.failure) r.failure = parse_failure;
    return r;
}

}  // namespace

std::vector<EvalRecord> score_run(std::span<const ExampleTriple> examples, std::span<const Prediction> predictions,
                                  const DatasetBundle& bundle, const EvalOptions& options) {
    std::map<int, const Prediction*> by_index;
    for (const auto& p : predictions) by_index[p.example_index] = &p;

    std::vector<EvalRecord> records(examples.size());
    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (std::size_t i = cursor++; i < examples.size(); i = cursor++) {
            auto it = by_index.find(examples[i].index);
            records[i] = score_example(examples[i], it == by_index.end() ? nullptr : it->second, bundle, options);
        }
    };
    const auto n_workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1, options.workers)), 1,
                                                   std::max<std::size_t>(1, examples.size()));
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }
    return records;
}

json to_json(const EvalRecord& r) {
    json j = {{"example_index", r.example_index}};
    j["em"] = r.em ? json(*r.em) : json(nullptr);
    j["ex"] = r.ex ? json(*r.ex) : json(nullptr);
    j["ves_ratio"] = r.ves_ratio ? json(*r.ves_ratio) : json(nullptr);
    j["difficulty"] = r.difficulty ? json(std::string(to_string(r.difficulty->label))) : json(nullptr);
    j["failure"] = r.failure ? json(std::string(to_string(*r.failure))) : json(nullptr);
    if (!r.detail.empty()) j["detail"] = r.detail;
    return j;
}

EvalRecord eval_record_from_json(const json& j) {
    EvalRecord r;
    r.example_index = j.at("example_index").get<int>();
    if (j.contains("em") && !j["em"].is_null()) r.em = j["em"].get<bool>();
    if (j.contains("ex") && !j["ex"].is_null()) r.ex = j["ex"].get<bool>();
    if (j.contains("ves_ratio") && !j["ves_ratio"].is_null()) r.ves_ratio = j["ves_ratio"].get<double>();
    if (j.contains("difficulty") && j["difficulty"].is_string()) r.difficulty = parse_difficulty(j["difficulty"].get<std::string>());
    if (j.contains("failure") && j["failure"].is_string()) r.failure = parse_failure_kind(j["failure"].get<std::string>());
    r.detail = j.value("detail", "");
    return r;
}

}  // namespace t2s
