#include "t2s/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>
#include <variant>

#include "t2s/errors.hpp"

namespace t2s {

json to_json(const CorpusRecord& r) {
    return {{"instruction", r.instruction},
            {"output", r.output},
            {"meta", {{"example_index", r.example_index}, {"shots", r.shots}, {"exemplar_ids", r.exemplar_ids}}}};
}

CorpusRecord corpus_record_from_json(const json& j) {
    CorpusRecord r;
    r.instruction = j.at("instruction").get<std::string>();
    r.output = j.at("output").get<std::string>();
    const auto& meta = j.at("meta");
    r.example_index = meta.at("example_index").get<int>();
    r.shots = meta.at("shots").get<std::size_t>();
    r.exemplar_ids = meta.at("exemplar_ids").get<std::vector<int>>();
    return r;
}

json to_json(const CorpusSummary& s) {
    json hist = json::object();
    for (const auto& [shots, n] : s.shot_histogram) hist[std::to_string(shots)] = n;
    json skipped = json::array();
    for (const auto& sk : s.skipped) skipped.push_back({{"example_index", sk.example_index}, {"reason", sk.reason}});
    return {{"count", s.count},
            {"shot_histogram", hist},
            {"token_estimate", {{"min", s.tokens_min}, {"max", s.tokens_max}, {"mean", s.tokens_mean}}},
            {"skipped", skipped}};
}

namespace {

using Built = std::variant<CorpusRecord, SkippedExample>;

}  // namespace

CorpusSummary export_corpus(std::span<const ExampleTriple> split, const DatasetBundle& bundle,
                            const PromptTemplate& tmpl, const SelectionPolicy& policy, const CorpusOptions& options,
                            const fs::path& out, const SimilarityIndex* index) {
    tmpl.validate();
    const auto shots = mix_shots(policy, options.mode, options.choices, split.size());

    std::vector<Built> built(split.size());
    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (std::size_t i = cursor++; i < split.size(); i = cursor++) {
            const auto& target = split[i];
            SelectionPolicy p = policy;
            p.exclude_same_example = true;
            // the pool includes the target itself, which is never eligible
            p.k = std::clamp(shots[i], 0, static_cast<int>(split.size()) - 1);
            try {
                std::optional<std::string> draft;
                if (p.strategy == SelectionStrategy::dual_similarity) draft = target.gold_sql;
                auto exemplars = p.k > 0 ? select_exemplars(target, p, split, index, draft) : std::vector<ExampleTriple>{};
                auto env = build_prompt(target, exemplars, bundle, tmpl, options.budget, options.counter);
                built[i] = CorpusRecord{std::move(env.text), target.gold_sql, target.index, env.shots,
                                        std::move(env.exemplar_ids)};
            } catch (const BudgetExceeded& e) {
                built[i] = SkippedExample{target.index, e.what()};
            }
        }
    };
    {
        const std::size_t n = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8);
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < std::min(n, std::max<std::size_t>(split.size(), 1)); ++w) pool.emplace_back(worker);
    }

    CorpusSummary summary;
    std::size_t token_total = 0;
    bool first = true;
    const auto counter = options.counter ? options.counter : default_token_counter();

    fs::path partial = out;
    partial += ".partial";
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    {
        std::ofstream file(partial, std::ios::binary | std::ios::trunc);
        if (!file) throw IoError("cannot write " + partial.string());
        for (auto& b : built) {
            if (auto* sk = std::get_if<SkippedExample>(&b)) {
                summary.skipped.push_back(std::move(*sk));
                continue;
            }
            const auto& r = std::get<CorpusRecord>(b);
            file << to_json(r).dump() << '\n';
            const std::size_t tokens = counter(r.instruction);
            summary.count++;
            summary.shot_histogram[r.shots]++;
            token_total += tokens;
            summary.tokens_min = first ? tokens : std::min(summary.tokens_min, tokens);
            summary.tokens_max = std::max(summary.tokens_max, tokens);
            first = false;
        }
        if (!file.flush()) throw IoError("cannot write " + partial.string());
    }
    fs::rename(partial, out);
    if (summary.count > 0) summary.tokens_mean = static_cast<double>(token_total) / static_cast<double>(summary.count);
    return summary;
}

std::string_view to_string(TuneMethod m) { return m == TuneMethod::lora ? "lora" : "qlora"; }

std::optional<TuneMethod> parse_tune_method(std::string_view s) {
    if (iequals(s, "lora")) return TuneMethod::lora;
    if (iequals(s, "qlora")) return TuneMethod::qlora;
    return std::nullopt;
}

void TrainProfile::validate(const TokenBudget& budget) const {
    std::vector<std::string> bad;
    if (lora_rank <= 0) bad.push_back("lora_rank must be positive");
    if (lora_alpha <= 0) bad.push_back("lora_alpha must be positive");
    if (!(learning_rate > 0.0)) bad.push_back("learning_rate must be positive");
    if (epochs <= 0) bad.push_back("epochs must be positive");
    if (max_source_length != static_cast<int>(budget.max_context))
        bad.push_back("max_source_length must equal the context size " + std::to_string(budget.max_context));
    if (max_target_length != static_cast<int>(budget.reserved_response))
        bad.push_back("max_target_length must equal the response reserve " + std::to_string(budget.reserved_response));
    if (!bad.empty()) throw ContractViolation("invalid train profile: " + join(bad, "; "));
}

json to_json(const TrainProfile& p) {
    return {{"method", std::string(to_string(p.method))},
            {"model_name", p.model_name},
            {"lora_rank", p.lora_rank},
            {"lora_alpha", p.lora_alpha},
            {"learning_rate", p.learning_rate},
            {"epochs", p.epochs},
            {"max_source_length", p.max_source_length},
            {"max_target_length", p.max_target_length}};
}

TrainProfile train_profile_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("train profile must be a JSON object");
    TrainProfile p;
    std::vector<std::string> issues;
    try {
        if (j.contains("method")) {
            auto m = parse_tune_method(j["method"].get<std::string>());
            if (!m) issues.push_back("unknown method '" + j["method"].get<std::string>() + "'");
            else p.method = *m;
        }
        p.model_name = j.value("model_name", p.model_name);
        p.lora_rank = j.value("lora_rank", p.lora_rank);
        p.lora_alpha = j.value("lora_alpha", p.lora_alpha);
        p.learning_rate = j.value("learning_rate", p.learning_rate);
        p.epochs = j.value("epochs", p.epochs);
        p.max_source_length = j.value("max_source_length", p.max_source_length);
        p.max_target_length = j.value("max_target_length", p.max_target_length);
    } catch (const json::exception& e) {
        issues.push_back(std::string("train profile: ") + e.what());
    }
    if (!issues.empty()) throw ValidationError(issues);
    return p;
}

fs::path emit_train_profile(const TrainProfile& profile, const fs::path& out) {
    profile.validate();
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_file_atomic(out, to_json(profile).dump(2) + "\n");
    return out;
}

TrainProfile load_train_profile(const fs::path& path) { return train_profile_from_json(read_json_file(path)); }

}  // namespace t2s
