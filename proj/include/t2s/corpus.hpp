#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "t2s/prompt.hpp"
#include "t2s/selector.hpp"

namespace t2s {

struct CorpusRecord {
    std::string instruction;  // prompt text through the response prefix
    std::string output;       // gold SQL
    int example_index = 0;
    std::size_t shots = 0;
    std::vector<int> exemplar_ids;
};

json to_json(const CorpusRecord& r);
CorpusRecord corpus_record_from_json(const json& j);

struct SkippedExample {
    int example_index = 0;
    std::string reason;
};

struct CorpusSummary {
    std::size_t count = 0;
    std::map<std::size_t, std::size_t> shot_histogram;  // actual shots -> records
    std::size_t tokens_min = 0;
    std::size_t tokens_max = 0;
    double tokens_mean = 0.0;
    std::vector<SkippedExample> skipped;
};

json to_json(const CorpusSummary& s);

struct CorpusOptions {
    ShotMode mode = ShotMode::fixed_k;
    std::vector<int> choices{0, 1, 3, 5};  // random-shot draws
    TokenBudget budget;
    TokenCounter counter = default_token_counter();
};

/// Builds one record per example of `split`, drawing exemplars from the
/// same split without the example itself. Records are rendered in parallel
/// and written in example order to `out` (via `out`.partial). Examples that
/// do not fit the budget with zero exemplars are listed in the summary.
CorpusSummary export_corpus(std::span<const ExampleTriple> split, const DatasetBundle& bundle,
                            const PromptTemplate& tmpl, const SelectionPolicy& policy, const CorpusOptions& options,
                            const fs::path& out, const SimilarityIndex* index = nullptr);

enum class TuneMethod { lora, qlora };

std::string_view to_string(TuneMethod m);
std::optional<TuneMethod> parse_tune_method(std::string_view s);

struct TrainProfile {
    TuneMethod method = TuneMethod::lora;
    int lora_rank = 64;
    int lora_alpha = 32;
    double learning_rate = 0.0002;
    int epochs = 8;
    int max_source_length = 2048;
    int max_target_length = 512;
    std::string model_name;

    /// Throws ContractViolation. Lengths must match `budget`.
    void validate(const TokenBudget& budget = {}) const;

    friend bool operator==(const TrainProfile&, const TrainProfile&) = default;
};

json to_json(const TrainProfile& p);
TrainProfile train_profile_from_json(const json& j);

/// Writes the profile as a flat JSON object and returns `out`.
fs::path emit_train_profile(const TrainProfile& profile, const fs::path& out);
TrainProfile load_train_profile(const fs::path& path);

}  // namespace t2s
