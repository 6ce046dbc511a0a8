#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "t2s/dataset.hpp"

namespace t2s {

enum class SelectionStrategy { random, question_similarity, dual_similarity };

std::string_view to_string(SelectionStrategy s);
std::optional<SelectionStrategy> parse_strategy(std::string_view s);

struct SelectionPolicy {
    SelectionStrategy strategy = SelectionStrategy::random;
    int k = 0;
    std::uint64_t seed = 0;
    std::string pool = "train";
    bool exclude_same_example = true;
};

using Vector = std::vector<double>;

double cosine(const Vector& a, const Vector& b);

/// Maps texts to equal-length vectors.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<Vector> embed(std::span<const std::string> texts) const = 0;
    Vector embed_one(const std::string& text) const;
};

/// Hashed character-trigram counts over the case-folded text. Texts shorter
/// than three bytes contribute themselves as a single gram.
class TrigramEmbedder final : public Embedder {
public:
    explicit TrigramEmbedder(std::size_t dimension = 4096) : dimension_(dimension) {}
    std::vector<Vector> embed(std::span<const std::string> texts) const override;
    std::size_t dimension() const { return dimension_; }

private:
    std::size_t dimension_;
};

/// Client for an embedding service. Wire format: POST {"model", "input":
/// [strings]} and expect {"data": [{"embedding": [numbers]}, ...]} in
/// input order.
class RemoteEmbedder final : public Embedder {
public:
    RemoteEmbedder(std::string url, std::string model, int timeout_ms = 30000);
    std::vector<Vector> embed(std::span<const std::string> texts) const override;

private:
    std::string url_;
    std::string model_;
    int timeout_ms_;
};

class EmbeddingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SimilarityIndex {
    std::map<int, Vector> vectors;
    std::shared_ptr<const Embedder> embedder;
};

/// One vector per pool question. Embedder failures surface as
/// EmbeddingError naming the first example index of the failing batch.
SimilarityIndex build_index(std::span<const ExampleTriple> pool, std::shared_ptr<const Embedder> embedder);

/// Picks k exemplars for `target` from `pool`. The result is ordered with the
/// most similar exemplar last. `draft_sql` feeds dual similarity; without it
/// that strategy falls back to question similarity.
std::vector<ExampleTriple> select_exemplars(const ExampleTriple& target, const SelectionPolicy& policy,
                                            std::span<const ExampleTriple> pool, const SimilarityIndex* index,
                                            const std::optional<std::string>& draft_sql = std::nullopt);

enum class ShotMode { fixed_k, random_shot };

std::string_view to_string(ShotMode m);
std::optional<ShotMode> parse_shot_mode(std::string_view s);

/// Per-example shot counts: the constant policy.k, or a seeded uniform draw
/// from `choices` per example.
std::vector<int> mix_shots(const SelectionPolicy& policy, ShotMode mode, std::span<const int> choices,
                           std::size_t n_examples);

}  // namespace t2s
