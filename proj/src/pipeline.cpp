#include "t2s/pipeline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <set>

#include "t2s/errors.hpp"
#include "t2s/sqlite_db.hpp"

namespace t2s {

namespace {

class SectionReader {
public:
    SectionReader(const json& root, std::string section, std::vector<std::string>& issues)
        : section_(std::move(section)), issues_(issues) {
        if (!root.contains(section_)) return;
        if (!root[section_].is_object()) {
            issues_.push_back(section_ + ": must be an object");
            return;
        }
        obj_ = &root[section_];
    }

    bool present() const { return obj_ != nullptr; }
    bool has(const char* key) const { return obj_ && obj_->contains(key); }
    const json& at(const char* key) const { return obj_->at(key); }

    template <typename T>
    void get(const char* key, T& out) {
        if (!has(key)) return;
        try {
            out = (*obj_)[key].get<T>();
        } catch (const json::exception&) {
            issues_.push_back(section_ + "." + key + ": wrong type");
        }
    }

    void allow_only(std::initializer_list<const char*> keys) {
        if (!obj_) return;
        for (const auto& [k, v] : obj_->items()) {
            if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
                issues_.push_back(section_ + ": unknown key '" + k + "'");
        }
    }

    void fail(const std::string& msg) { issues_.push_back(section_ + "." + msg); }

private:
    std::string section_;
    std::vector<std::string>& issues_;
    const json* obj_ = nullptr;
};

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

DifficultyScheme scheme_of(Dialect d) { return d == Dialect::bird ? DifficultyScheme::bird3 : DifficultyScheme::spider4; }

}  // namespace

RunConfig parse_run_config(const json& j, const fs::path& base_dir, const ConfigOverrides& overrides) {
    if (!j.is_object()) throw ValidationError("config: top level must be a JSON object");
    std::vector<std::string> issues;
    RunConfig cfg;

    for (const auto& [k, v] : j.items()) {
        static const std::set<std::string> known{"dataset", "prompt", "selection", "endpoint", "metrics",
                                                 "corpus",  "train_profile", "output_dir", "seed"};
        if (!known.count(k)) issues.push_back("config: unknown key '" + k + "'");
    }

    SectionReader ds(j, "dataset", issues);
    ds.allow_only({"name", "dialect", "tables", "splits", "db_dir"});
    if (!ds.present()) issues.emplace_back("dataset: section is required");
    ds.get("name", cfg.dataset.name);
    if (ds.has("dialect")) {
        std::string d;
        ds.get("dialect", d);
        if (auto parsed = parse_dialect(d)) cfg.dataset.dialect = *parsed;
        else ds.fail("dialect: unknown dialect '" + d + "'");
    }
    if (ds.has("tables")) {
        std::string t;
        ds.get("tables", t);
        cfg.dataset.tables = resolve(base_dir, t);
        if (!fs::exists(cfg.dataset.tables)) ds.fail("tables: file not found: " + cfg.dataset.tables.string());
    } else if (ds.present()) {
        ds.fail("tables: required");
    }
    if (ds.has("splits")) {
        std::map<std::string, std::string> splits;
        ds.get("splits", splits);
        for (const auto& [name, p] : splits) {
            auto path = resolve(base_dir, p);
            if (!fs::exists(path)) ds.fail("splits." + name + ": file not found: " + path.string());
            cfg.dataset.splits[name] = path;
        }
    } else if (ds.present()) {
        ds.fail("splits: required");
    }
    if (ds.has("db_dir")) {
        std::string d;
        ds.get("db_dir", d);
        cfg.dataset.db_dir = resolve(base_dir, d);
    }

    SectionReader pr(j, "prompt", issues);
    pr.allow_only({"style", "include_evidence", "instruction_header", "question_header", "max_context",
                   "reserved_response"});
    if (pr.has("style")) {
        std::string s;
        pr.get("style", s);
        if (auto style = parse_schema_style(s)) cfg.prompt = *style == SchemaStyle::compact ? PromptTemplate::compact()
                                                                                         : PromptTemplate::sentence();
        else pr.fail("style: unknown style '" + s + "'");
    }
    pr.get("include_evidence", cfg.prompt.include_evidence);
    pr.get("instruction_header", cfg.prompt.instruction_header);
    pr.get("question_header", cfg.prompt.question_header);
    pr.get("max_context", cfg.budget.max_context);
    pr.get("reserved_response", cfg.budget.reserved_response);
    if (cfg.budget.reserved_response >= cfg.budget.max_context)
        pr.fail("reserved_response: must be smaller than max_context");

    SectionReader sel(j, "selection", issues);
    sel.allow_only({"strategy", "k", "pool", "embedder"});
    if (sel.has("strategy")) {
        std::string s;
        sel.get("strategy", s);
        if (auto st = parse_strategy(s)) cfg.selection.strategy = *st;
        else sel.fail("strategy: unknown strategy '" + s + "'");
    }
    sel.get("k", cfg.selection.k);
    if (cfg.selection.k < 0) sel.fail("k: must be >= 0");
    sel.get("pool", cfg.selection.pool);
    if (sel.has("embedder")) {
        const json& e = sel.at("embedder");
        if (e.is_string() && e.get<std::string>() == "trigram") {
            cfg.embedder.kind = "trigram";
        } else if (e.is_object() && e.contains("url") && e["url"].is_string()) {
            cfg.embedder.kind = "remote";
            cfg.embedder.url = e["url"].get<std::string>();
            cfg.embedder.model = e.value("model", "");
        } else {
            sel.fail("embedder: expected \"trigram\" or {\"url\", \"model\"}");
        }
    }

    SectionReader ep(j, "endpoint", issues);
    ep.allow_only({"base_url", "model_name", "api_key_env", "temperature", "max_response_tokens", "timeout_ms",
                   "max_retries", "concurrency_limit", "initial_backoff_ms", "api_key"});
    if (ep.has("api_key"))
        ep.fail("api_key: secrets must not be stored in the config file; set the environment variable named by "
                "endpoint.api_key_env instead");
    ep.get("base_url", cfg.endpoint.base_url);
    ep.get("model_name", cfg.endpoint.model_name);
    ep.get("api_key_env", cfg.api_key_env);
    ep.get("temperature", cfg.endpoint.temperature);
    ep.get("max_response_tokens", cfg.endpoint.max_response_tokens);
    ep.get("max_retries", cfg.endpoint.max_retries);
    ep.get("concurrency_limit", cfg.endpoint.concurrency_limit);
    std::int64_t ms = cfg.endpoint.timeout.count();
    ep.get("timeout_ms", ms);
    cfg.endpoint.timeout = std::chrono::milliseconds(ms);
    ms = cfg.endpoint.initial_backoff.count();
    ep.get("initial_backoff_ms", ms);
    cfg.endpoint.initial_backoff = std::chrono::milliseconds(ms);

    SectionReader me(j, "metrics", issues);
    me.allow_only({"em", "ex", "ves", "timeout_ms", "workers", "split"});
    me.get("em", cfg.metrics.em);
    me.get("ex", cfg.metrics.ex);
    me.get("ves", cfg.metrics.ves);
    me.get("workers", cfg.metrics.workers);
    me.get("split", cfg.eval_split);
    ms = cfg.metrics.timeout.count();
    me.get("timeout_ms", ms);
    if (ms <= 0) me.fail("timeout_ms: must be positive");
    cfg.metrics.timeout = std::chrono::milliseconds(ms);
    if (cfg.metrics.ves && !cfg.metrics.ex) me.fail("ves: requires ex");

    SectionReader co(j, "corpus", issues);
    co.allow_only({"split", "k", "random_shot", "choices"});
    co.get("split", cfg.corpus.split);
    if (co.has("k")) {
        if (co.at("k").is_number_integer()) cfg.corpus.ks = {co.at("k").get<int>()};
        else co.get("k", cfg.corpus.ks);
    }
    co.get("random_shot", cfg.corpus.random_shot);
    co.get("choices", cfg.corpus.choices);
    for (int k : cfg.corpus.ks)
        if (k < 0) co.fail("k: shot counts must be >= 0");

    if (j.contains("train_profile")) {
        try {
            cfg.train_profile = train_profile_from_json(j["train_profile"]);
        } catch (const ValidationError& e) {
            for (const auto& i : e.issues()) issues.push_back(i);
        }
    }

    if (j.contains("output_dir")) {
        if (j["output_dir"].is_string()) cfg.output_dir = resolve(base_dir, j["output_dir"].get<std::string>());
        else issues.emplace_back("output_dir: wrong type");
    } else {
        cfg.output_dir = base_dir / "runs";
    }
    if (j.contains("seed")) {
        const json& sd = j["seed"];
        if (sd.is_number_unsigned() || (sd.is_number_integer() && sd.get<std::int64_t>() >= 0))
            cfg.seed = sd.get<std::uint64_t>();
        else issues.emplace_back("seed: must be a non-negative integer");
    }
    if (overrides.seed) cfg.seed = *overrides.seed;
    if (overrides.output_dir) cfg.output_dir = *overrides.output_dir;
    cfg.selection.seed = cfg.seed;

    if (!issues.empty()) throw ValidationError(std::move(issues));

    json canonical = j;
    canonical.erase("output_dir");
    canonical["seed"] = cfg.seed;
    cfg.fingerprint = sha256_hex(canonical.dump());
    return cfg;
}

RunConfig load_run_config(const fs::path& path, const ConfigOverrides& overrides) {
    if (!fs::exists(path)) throw ValidationError("config file not found: " + path.string());
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ValidationError("config " + path.string() + ": " + e.what());
    }
    return parse_run_config(j, path.parent_path().empty() ? fs::path(".") : path.parent_path(), overrides);
}

fs::path resolve_run_dir(const RunConfig& cfg, const std::optional<std::string>& run_id, bool create_new) {
    if (run_id) {
        if (run_id->empty() || run_id->find('/') != std::string::npos || *run_id == "." || *run_id == "..")
            throw ValidationError("invalid run id '" + *run_id + "'");
        return cfg.output_dir / *run_id;
    }
    const std::string suffix = "-" + cfg.fingerprint.substr(0, 8);
    if (!create_new && fs::is_directory(cfg.output_dir)) {
        std::optional<std::string> newest;
        for (const auto& entry : fs::directory_iterator(cfg.output_dir)) {
            const std::string name = entry.path().filename().string();
            if (entry.is_directory() && name.size() > suffix.size() &&
                name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0 && (!newest || name > *newest))
                newest = name;
        }
        if (newest) return cfg.output_dir / *newest;
    }
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
    return cfg.output_dir / (stamp + suffix);
}

namespace {

std::shared_ptr<const Embedder> make_embedder(const EmbedderConfig& e) {
    if (e.kind == "remote") return std::make_shared<RemoteEmbedder>(e.url, e.model);
    return std::make_shared<TrigramEmbedder>();
}

std::optional<SimilarityIndex> maybe_index(const RunConfig& cfg, std::span<const ExampleTriple> pool) {
    if (cfg.selection.strategy == SelectionStrategy::random) return std::nullopt;
    return build_index(pool, make_embedder(cfg.embedder));
}

const std::vector<ExampleTriple>& require_split(const DatasetBundle& bundle, const std::string& name) {
    auto it = bundle.splits.find(name);
    if (it == bundle.splits.end()) throw ValidationError("split '" + name + "' is not configured in dataset.splits");
    return it->second;
}

}  // namespace

json cmd_ingest(const RunConfig& cfg, const fs::path& run_dir) {
    DatasetBundle bundle = load_bundle(cfg.dataset);
    json manifest;
    manifest["dataset"] = bundle.name;
    manifest["dialect"] = std::string(to_string(bundle.dialect));
    manifest["config_fingerprint"] = cfg.fingerprint;

    json splits = json::object();
    json difficulty = json::object();
    std::map<std::string, std::map<std::string, int>> per_db;
    for (const auto& [name, examples] : bundle.splits) {
        splits[name] = examples.size();
        std::map<std::string, int> buckets;
        for (auto d : scheme_labels(scheme_of(bundle.dialect))) buckets[std::string(to_string(d))] = 0;
        for (const auto& e : examples) {
            per_db[e.db_id][name]++;
            auto label = example_difficulty(e, bundle);
            buckets[label ? std::string(to_string(label->label)) : "unlabeled"]++;
        }
        difficulty[name] = buckets;
    }
    manifest["splits"] = splits;
    manifest["difficulty"] = difficulty;

    json dbs = json::object();
    std::size_t found = 0;
    std::vector<std::string> missing;
    for (const auto& [db_id, schema] : bundle.schemas) {
        const bool has_file = bundle.db_file(db_id).has_value();
        found += has_file ? 1 : 0;
        if (!has_file) missing.push_back(db_id);
        json counts = json::object();
        for (const auto& [split, n] : per_db[db_id]) counts[split] = n;
        dbs[db_id] = {{"tables", schema.tables.size()}, {"examples", counts}, {"db_file", has_file}};
    }
    manifest["databases"] = dbs;
    manifest["db_files"] = {{"found", found}, {"expected", bundle.schemas.size()}, {"missing", missing}};

    fs::create_directories(run_dir);
    write_file_atomic(run_dir / "manifest.json", manifest.dump(2) + "\n");
    return manifest;
}

std::vector<fs::path> cmd_build_corpus(const RunConfig& cfg, const fs::path& run_dir) {
    cfg.prompt.validate();
    if (cfg.corpus.random_shot && cfg.corpus.choices.empty()) throw ValidationError("corpus.choices: must not be empty");
    DatasetBundle bundle = load_bundle(cfg.dataset);
    const auto& split = require_split(bundle, cfg.corpus.split);
    auto index = maybe_index(cfg, split);
    const SimilarityIndex* index_ptr = index ? &*index : nullptr;

    std::vector<fs::path> written;
    auto export_one = [&](const std::string& tag, ShotMode mode, int k) {
        SelectionPolicy policy = cfg.selection;
        policy.k = k;
        CorpusOptions opts;
        opts.mode = mode;
        opts.choices = cfg.corpus.choices;
        opts.budget = cfg.budget;
        const fs::path out = run_dir / "corpus" / (cfg.corpus.split + "-" + tag + ".jsonl");
        CorpusSummary summary = export_corpus(split, bundle, cfg.prompt, policy, opts, out, index_ptr);
        fs::path summary_path = out;
        summary_path.replace_extension(".summary.json");
        write_file_atomic(summary_path, to_json(summary).dump(2) + "\n");
        for (const auto& sk : summary.skipped)
            std::cerr << "corpus " << tag << ": skipped example " << sk.example_index << ": " << sk.reason << "\n";
        written.push_back(out);
    };
    for (int k : cfg.corpus.ks) export_one(std::to_string(k) + "shot", ShotMode::fixed_k, k);
    if (cfg.corpus.random_shot) export_one("random-shot", ShotMode::random_shot, 0);
    return written;
}

namespace {

// Keeps complete lines only, so appends never continue a torn record.
void drop_torn_tail(const fs::path& path) {
    if (!fs::exists(path)) return;
    std::string content = read_file(path);
    const auto last_nl = content.rfind('\n');
    const std::size_t keep = last_nl == std::string::npos ? 0 : last_nl + 1;
    if (keep != content.size()) fs::resize_file(path, keep);
}

json stable_record(const Prediction& p) {
    json j = to_json(p);
    j.erase("latency_ms");
    return j;
}

}  // namespace

fs::path cmd_predict(const RunConfig& cfg, const fs::path& run_dir, const std::string& split_name, int shots) {
    ModelEndpoint endpoint = cfg.endpoint;
    endpoint.validate();
    cfg.prompt.validate();
    if (shots < 0) throw ValidationError("shots must be >= 0");
    if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key) endpoint.api_key = key;

    DatasetBundle bundle = load_bundle(cfg.dataset);
    const auto& targets = require_split(bundle, split_name);
    std::span<const ExampleTriple> pool;
    if (shots > 0) pool = require_split(bundle, cfg.selection.pool);
    auto index = shots > 0 ? maybe_index(cfg, pool) : std::nullopt;

    SelectionPolicy policy = cfg.selection;
    policy.k = shots;
    std::vector<PromptEnvelope> envelopes;
    std::vector<Prediction> unbuildable;
    for (const auto& target : targets) {
        std::vector<ExampleTriple> exemplars;
        if (shots > 0) exemplars = select_exemplars(target, policy, pool, index ? &*index : nullptr);
        try {
            auto env = build_prompt(target, exemplars, bundle, cfg.prompt, cfg.budget);
            if (env.shots < exemplars.size())
                std::cerr << "predict: example " << target.index << " keeps " << env.shots << " of " << exemplars.size()
                          << " exemplars within the token budget\n";
            envelopes.push_back(std::move(env));
        } catch (const BudgetExceeded& e) {
            Prediction p;
            p.example_index = target.index;
            p.error = PredictionError{"budget-exceeded", e.what()};
            unbuildable.push_back(std::move(p));
        }
    }

    const std::string stem = split_name + "-" + std::to_string(shots) + "shot";
    const fs::path dir = run_dir / "predictions";
    fs::create_directories(dir);
    const fs::path final_path = dir / (stem + ".jsonl");
    fs::path partial = final_path;
    partial += ".partial";

    std::map<int, Prediction> done;
    if (fs::exists(final_path))
        for (auto& p : read_predictions(final_path)) done.emplace(p.example_index, std::move(p));
    drop_torn_tail(partial);
    if (fs::exists(partial))
        for (auto& p : read_predictions(partial)) done.emplace(p.example_index, std::move(p));

    std::vector<PromptEnvelope> pending;
    for (auto& env : envelopes)
        if (!done.count(env.target_index)) pending.push_back(std::move(env));
    if (!done.empty() && !pending.empty())
        std::cerr << "predict: resuming, " << done.size() << " done, " << pending.size() << " to go\n";

    {
        std::ofstream out(partial, std::ios::binary | std::ios::app);
        if (!out) throw IoError("cannot write " + partial.string());
        predict_batch(pending, endpoint, [&](const Prediction& p) {
            out << to_json(p).dump() << '\n';
            out.flush();
        });
        if (!out) throw IoError("cannot write " + partial.string());
    }
    for (auto& p : read_predictions(partial)) done.emplace(p.example_index, std::move(p));
    for (auto& p : unbuildable) done.emplace(p.example_index, std::move(p));

    std::string body, timing;
    for (const auto& [idx, p] : done) {
        body += stable_record(p).dump() + "\n";
        timing += json{{"example_index", idx}, {"latency_ms", p.latency.count()}, {"attempt_count", p.attempt_count}}.dump() + "\n";
    }
    write_file_atomic(dir / (stem + ".timing.jsonl"), timing);
    write_file_atomic(final_path, body);
    fs::remove(partial);
    return final_path;
}

RunSummary cmd_evaluate(const RunConfig& cfg, const fs::path& run_dir, const fs::path& predictions,
                        const std::string& split_name) {
    if (!fs::exists(predictions)) throw ValidationError("prediction file not found: " + predictions.string());
    DatasetBundle bundle = load_bundle(cfg.dataset);
    const auto& examples = require_split(bundle, split_name);
    auto preds = read_predictions(predictions);

    auto records = score_run(examples, preds, bundle, cfg.metrics);
    const std::string stem = predictions.stem().string();
    std::string body;
    for (const auto& r : records) body += to_json(r).dump() + "\n";
    fs::create_directories(run_dir / "eval");
    write_file_atomic(run_dir / "eval" / (stem + ".jsonl"), body);

    RunSummary summary = summarize(records, scheme_of(bundle.dialect), run_dir.filename().string(), cfg.fingerprint);
    const fs::path reports = run_dir / "reports";
    fs::create_directories(reports);
    write_file_atomic(reports / (stem + ".txt"), render(summary, ReportFormat::plain_table));
    write_file_atomic(reports / (stem + ".csv"), render(summary, ReportFormat::csv));
    write_file_atomic(reports / (stem + ".json"), render(summary, ReportFormat::structured));
    return summary;
}

DeltaReport cmd_compare(const fs::path& base_summary, const fs::path& target_summary,
                        const std::optional<fs::path>& out_dir) {
    auto load = [](const fs::path& p) {
        if (!fs::exists(p)) throw ValidationError("summary file not found: " + p.string());
        try {
            return summary_from_json(json::parse(read_file(p)));
        } catch (const json::parse_error& e) {
            throw ValidationError(p.string() + ": " + e.what());
        }
    };
    const RunSummary base = load(base_summary);
    const RunSummary target = load(target_summary);
    DeltaReport delta = compare(base, target);
    if (out_dir) {
        fs::create_directories(*out_dir);
        const std::string stem = "delta-" + base_summary.stem().string() + "-vs-" + target_summary.stem().string();
        write_file_atomic(*out_dir / (stem + ".txt"), render(delta, ReportFormat::plain_table));
        write_file_atomic(*out_dir / (stem + ".csv"), render(delta, ReportFormat::csv));
        write_file_atomic(*out_dir / (stem + ".json"), render(delta, ReportFormat::structured));
    }
    return delta;
}

fs::path cmd_emit_train_profile(const RunConfig& cfg, const fs::path& out) {
    cfg.train_profile.validate(cfg.budget);
    return emit_train_profile(cfg.train_profile, out);
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Text-to-SQL benchmark pipeline"};
    app.require_subcommand(1);
    // global flags may also follow the subcommand
    app.fallthrough();
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir, run_id;
    app.add_option("--config", config_path, "run config file (JSON)");
    app.add_option("--seed", seed, "override the config seed");
    app.add_option("--output-dir", output_dir, "override the config output_dir");
    app.add_option("--run-id", run_id, "use this run directory name");

    auto* ingest = app.add_subcommand("ingest", "load and validate the dataset, write the manifest");

    auto* corpus = app.add_subcommand("build-corpus", "export fine-tuning corpora");
    std::vector<int> corpus_ks;
    bool random_shot = false;
    std::optional<std::string> corpus_split;
    corpus->add_option("--k", corpus_ks, "shot counts, one corpus each")->delimiter(',');
    corpus->add_flag("--random-shot", random_shot, "also export a random-shot corpus");
    corpus->add_option("--split", corpus_split, "split to export");

    auto* predict = app.add_subcommand("predict", "query the model endpoint for a split");
    std::optional<std::string> predict_split;
    std::optional<int> predict_shots;
    predict->add_option("--split", predict_split);
    predict->add_option("--shots", predict_shots);

    auto* evaluate = app.add_subcommand("evaluate", "score predictions and write reports");
    std::optional<std::string> eval_split, eval_predictions;
    std::optional<int> eval_shots;
    evaluate->add_option("--split", eval_split);
    evaluate->add_option("--shots", eval_shots);
    evaluate->add_option("--predictions", eval_predictions, "prediction file (default: this run's)");

    auto* cmp = app.add_subcommand("compare", "delta report between two run summaries");
    std::string base_path, target_path;
    std::optional<std::string> cmp_out;
    cmp->add_option("base", base_path, "base summary (reports/*.json)")->required();
    cmp->add_option("target", target_path, "target summary (reports/*.json)")->required();
    cmp->add_option("--out", cmp_out, "directory for the delta report files");

    auto* profile = app.add_subcommand("emit-train-profile", "write the fine-tuning profile");
    std::optional<std::string> method, profile_out;
    profile->add_option("--method", method, "lora or qlora");
    profile->add_option("--out", profile_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (cmp->parsed()) {
            auto delta = cmd_compare(base_path, target_path, cmp_out ? std::optional<fs::path>(*cmp_out) : std::nullopt);
            std::cout << render(delta, ReportFormat::plain_table);
            return 0;
        }
        if (config_path.empty()) throw ValidationError("--config is required for this subcommand");
        ConfigOverrides ov;
        ov.seed = seed;
        if (output_dir) ov.output_dir = fs::path(*output_dir);
        RunConfig cfg = load_run_config(config_path, ov);

        if (ingest->parsed()) {
            const fs::path run_dir = resolve_run_dir(cfg, run_id, true);
            json manifest = cmd_ingest(cfg, run_dir);
            std::cout << "run " << run_dir.string() << "\n";
            for (const auto& [name, n] : manifest["splits"].items()) std::cout << name << ": " << n << " examples\n";
            std::cout << "db files: " << manifest["db_files"]["found"] << " of " << manifest["db_files"]["expected"]
                      << " found\n";
        } else if (corpus->parsed()) {
            if (!corpus_ks.empty()) cfg.corpus.ks = corpus_ks;
            if (random_shot) cfg.corpus.random_shot = true;
            if (corpus_split) cfg.corpus.split = *corpus_split;
            const fs::path run_dir = resolve_run_dir(cfg, run_id, false);
            for (const auto& p : cmd_build_corpus(cfg, run_dir)) std::cout << p.string() << "\n";
        } else if (predict->parsed()) {
            const fs::path run_dir = resolve_run_dir(cfg, run_id, false);
            std::cout << cmd_predict(cfg, run_dir, predict_split.value_or(cfg.eval_split),
                                     predict_shots.value_or(cfg.selection.k))
                                 .string()
                      << "\n";
        } else if (evaluate->parsed()) {
            const fs::path run_dir = resolve_run_dir(cfg, run_id, false);
            const std::string split = eval_split.value_or(cfg.eval_split);
            const fs::path preds =
                eval_predictions ? fs::path(*eval_predictions)
                                 : run_dir / "predictions" /
                                       (split + "-" + std::to_string(eval_shots.value_or(cfg.selection.k)) + "shot.jsonl");
            std::cout << render(cmd_evaluate(cfg, run_dir, preds, split), ReportFormat::plain_table);
        } else if (profile->parsed()) {
            if (method) {
                auto m = parse_tune_method(*method);
                if (!m) throw ValidationError("unknown method '" + *method + "'");
                cfg.train_profile.method = *m;
            }
            const fs::path out = profile_out ? fs::path(*profile_out)
                                             : resolve_run_dir(cfg, run_id, false) / "train_profile.json";
            std::cout << cmd_emit_train_profile(cfg, out).string() << "\n";
        }
        return 0;
    } catch (const ValidationError& e) {
        for (const auto& issue : e.issues()) std::cerr << "error: " << issue << "\n";
        return 1;
    } catch (const ContractViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failed: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace t2s
