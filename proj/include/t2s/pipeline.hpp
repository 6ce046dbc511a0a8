#pragma once

#include <optional>
#include <string>
#include <vector>

#include "t2s/corpus.hpp"
#include "t2s/inference.hpp"
#include "t2s/metrics.hpp"
#include "t2s/report.hpp"

namespace t2s {

struct CorpusPlan {
    std::string split = "train";
    std::vector<int> ks{0};
    bool random_shot = false;
    std::vector<int> choices{0, 1, 3, 5};
};

struct EmbedderConfig {
    std::string kind = "trigram";  // or "remote"
    std::string url;
    std::string model;
};

/// Everything one benchmark run needs, read from a single JSON file.
/// Relative paths resolve against the file's directory.
struct RunConfig {
    DatasetSource dataset;
    std::string eval_split = "dev";
    PromptTemplate prompt = PromptTemplate::sentence();
    TokenBudget budget;
    SelectionPolicy selection;
    EmbedderConfig embedder;
    ModelEndpoint endpoint;
    std::string api_key_env = "T2S_API_KEY";
    EvalOptions metrics;
    CorpusPlan corpus;
    TrainProfile train_profile;
    fs::path output_dir = "runs";
    std::uint64_t seed = 0;
    /// sha256 of the canonical config with overrides applied. The output
    /// directory is not part of it.
    std::string fingerprint;
};

struct ConfigOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<fs::path> output_dir;
};

/// Throws ValidationError listing every problem found.
RunConfig parse_run_config(const json& j, const fs::path& base_dir, const ConfigOverrides& overrides = {});
RunConfig load_run_config(const fs::path& path, const ConfigOverrides& overrides = {});

/// {output_dir}/{run_id}. Without an explicit id, reuses the newest run
/// directory for this fingerprint, or names a new one {UTC timestamp}-{fp8}.
fs::path resolve_run_dir(const RunConfig& cfg, const std::optional<std::string>& run_id, bool create_new);

json cmd_ingest(const RunConfig& cfg, const fs::path& run_dir);
std::vector<fs::path> cmd_build_corpus(const RunConfig& cfg, const fs::path& run_dir);
fs::path cmd_predict(const RunConfig& cfg, const fs::path& run_dir, const std::string& split, int shots);
RunSummary cmd_evaluate(const RunConfig& cfg, const fs::path& run_dir, const fs::path& predictions,
                        const std::string& split);
DeltaReport cmd_compare(const fs::path& base_summary, const fs::path& target_summary,
                        const std::optional<fs::path>& out_dir);
fs::path cmd_emit_train_profile(const RunConfig& cfg, const fs::path& out);

/// Entry point of the t2s-bench executable. Returns the exit status:
/// 0 success, 1 validation or config error, 2 runtime failure.
int run_cli(int argc, char** argv);

}  // namespace t2s
