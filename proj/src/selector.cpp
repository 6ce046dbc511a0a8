#include "t2s/selector.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>

#include "t2s/errors.hpp"
#include "t2s/sqlkit.hpp"

namespace t2s {

std::string_view to_string(SelectionStrategy s) {
    switch (s) {
        case SelectionStrategy::random: return "random";
        case SelectionStrategy::question_similarity: return "question-similarity";
        case SelectionStrategy::dual_similarity: return "dual-similarity";
    }
    return "random";
}

std::optional<SelectionStrategy> parse_strategy(std::string_view s) {
    if (s == "random") return SelectionStrategy::random;
    if (s == "question-similarity") return SelectionStrategy::question_similarity;
    if (s == "dual-similarity") return SelectionStrategy::dual_similarity;
    return std::nullopt;
}

std::string_view to_string(ShotMode m) { return m == ShotMode::fixed_k ? "fixed-k" : "random-shot"; }

std::optional<ShotMode> parse_shot_mode(std::string_view s) {
    if (s == "fixed-k") return ShotMode::fixed_k;
    if (s == "random-shot") return ShotMode::random_shot;
    return std::nullopt;
}

double cosine(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw ContractViolation("cosine of vectors with different dimensions");
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

Vector Embedder::embed_one(const std::string& text) const {
    auto v = embed(std::span<const std::string>(&text, 1));
    if (v.size() != 1) throw EmbeddingError("embedder returned " + std::to_string(v.size()) + " vectors for 1 text");
    return std::move(v.front());
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::vector<Vector> TrigramEmbedder::embed(std::span<const std::string> texts) const {
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (const auto& raw : texts) {
        const std::string text = to_lower(raw);
        Vector v(dimension_, 0.0);
        if (text.size() < 3) {
            if (!text.empty()) v[fnv1a(text) % dimension_] += 1.0;
        } else {
            for (std::size_t i = 0; i + 3 <= text.size(); ++i) v[fnv1a(std::string_view(text).substr(i, 3)) % dimension_] += 1.0;
        }
        out.push_back(std::move(v));
    }
    return out;
}

RemoteEmbedder::RemoteEmbedder(std::string url, std::string model, int timeout_ms)
    : url_(std::move(url)), model_(std::move(model)), timeout_ms_(timeout_ms) {}

std::vector<Vector> RemoteEmbedder::embed(std::span<const std::string> texts) const {
    // Split "scheme://host[:port]" from the request path.
    const auto scheme_end = url_.find("://");
    const auto path_start = url_.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    const std::string origin = path_start == std::string::npos ? url_ : url_.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url_.substr(path_start);
    httplib::Client cli(origin);
    cli.set_connection_timeout(std::chrono::milliseconds(timeout_ms_));
    cli.set_read_timeout(std::chrono::milliseconds(timeout_ms_));
    json body = {{"model", model_}, {"input", std::vector<std::string>(texts.begin(), texts.end())}};
    auto res = cli.Post(path, body.dump(), "application/json");
    if (!res) throw EmbeddingError("embedding request to " + url_ + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw EmbeddingError("embedding service returned HTTP " + std::to_string(res->status));
    std::vector<Vector> out;
    try {
        const json reply = json::parse(res->body);
        for (const auto& item : reply.at("data")) out.push_back(item.at("embedding").get<Vector>());
    } catch (const json::exception& e) {
        throw EmbeddingError(std::string("malformed embedding response: ") + e.what());
    }
    if (out.size() != texts.size())
        throw EmbeddingError("embedding service returned " + std::to_string(out.size()) + " vectors for " +
                             std::to_string(texts.size()) + " texts");
    for (const auto& v : out)
        if (v.size() != out.front().size()) throw EmbeddingError("embedding service returned ragged vectors");
    return out;
}

SimilarityIndex build_index(std::span<const ExampleTriple> pool, std::shared_ptr<const Embedder> embedder) {
    SimilarityIndex index;
    index.embedder = embedder;
    constexpr std::size_t batch = 64;
    for (std::size_t start = 0; start < pool.size(); start += batch) {
        const std::size_t end = std::min(pool.size(), start + batch);
        std::vector<std::string> questions;
        for (std::size_t i = start; i < end; ++i) questions.push_back(pool[i].question);
        std::vector<Vector> vecs;
        try {
            vecs = embedder->embed(questions);
        } catch (const std::exception& e) {
            throw EmbeddingError("embedding failed for example " + std::to_string(pool[start].index) + ": " + e.what());
        }
        if (vecs.size() != questions.size())
            throw EmbeddingError("embedder returned a short batch at example " + std::to_string(pool[start].index));
        for (std::size_t i = start; i < end; ++i) index.vectors[pool[i].index] = std::move(vecs[i - start]);
    }
    return index;
}

namespace {

struct Scored {
    double score;
    std::size_t pos;  // position in the candidate pool
    int index;
};

// Descending by score; ties go to the lower example index.
void rank(std::vector<Scored>& v) {
    std::sort(v.begin(), v.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.index < b.index;
    });
}

const Vector& vector_for(const SimilarityIndex& index, int example_index) {
    auto it = index.vectors.find(example_index);
    if (it == index.vectors.end())
        throw IndexIncomplete("similarity index has no vector for example " + std::to_string(example_index));
    return it->second;
}

}  // namespace

std::vector<ExampleTriple> select_exemplars(const ExampleTriple& target, const SelectionPolicy& policy,
                                            std::span<const ExampleTriple> pool, const SimilarityIndex* index,
                                            const std::optional<std::string>& draft_sql) {
    if (policy.k < 0) throw ContractViolation("k must be non-negative");
    if (policy.k == 0) return {};

    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto& c = pool[i];
        if (policy.exclude_same_example && c.index == target.index && c.split == target.split) continue;
        candidates.push_back(i);
    }
    const auto k = static_cast<std::size_t>(policy.k);
    if (k > candidates.size())
        throw ContractViolation("k = " + std::to_string(k) + " exceeds the " + std::to_string(candidates.size()) +
                                " available exemplars");

    std::vector<ExampleTriple> out;
    if (policy.strategy == SelectionStrategy::random) {
        std::mt19937_64 rng(mix_seed(policy.seed, static_cast<std::uint64_t>(target.index)));
        // Partial Fisher-Yates; draw order is the prompt order.
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + uniform_below(rng, candidates.size() - i);
            std::swap(candidates[i], candidates[j]);
            out.push_back(pool[candidates[i]]);
        }
        return out;
    }

    if (!index || !index->embedder) throw IndexIncomplete("similarity strategies need a similarity index");
    const Vector target_vec = index->embedder->embed_one(target.question);
    std::vector<Scored> scored;
    for (std::size_t pos : candidates)
        scored.push_back(Scored{cosine(target_vec, vector_for(*index, pool[pos].index)), pos, pool[pos].index});
    rank(scored);

    SelectionStrategy strategy = policy.strategy;
    if (strategy == SelectionStrategy::dual_similarity && !draft_sql) {
        std::cerr << "warning: dual-similarity selection without a draft SQL; using question similarity\n";
        strategy = SelectionStrategy::question_similarity;
    }
    if (strategy == SelectionStrategy::dual_similarity) {
        const std::size_t keep = std::min(scored.size(), 4 * k);
        scored.resize(keep);
        const Vector draft_vec = index->embedder->embed_one(sql::skeleton(*draft_sql));
        std::vector<std::string> skeletons;
        for (const auto& s : scored) skeletons.push_back(sql::skeleton(pool[s.pos].gold_sql));
        const auto skel_vecs = index->embedder->embed(skeletons);
        for (std::size_t i = 0; i < scored.size(); ++i) scored[i].score += cosine(draft_vec, skel_vecs[i]);
        rank(scored);
    }
    scored.resize(k);
    for (auto it = scored.rbegin(); it != scored.rend(); ++it) out.push_back(pool[it->pos]);
    return out;
}

std::vector<int> mix_shots(const SelectionPolicy& policy, ShotMode mode, std::span<const int> choices,
                           std::size_t n_examples) {
    if (mode == ShotMode::fixed_k) {
        if (policy.k < 0) throw ContractViolation("k must be non-negative");
        return std::vector<int>(n_examples, policy.k);
    }
    if (choices.empty()) throw ContractViolation("random-shot needs at least one shot choice");
    for (int c : choices)
        if (c < 0) throw ContractViolation("shot choices must be non-negative");
    std::mt19937_64 rng(mix_seed(policy.seed, 0x5107));
    std::vector<int> out(n_examples);
    for (auto& k : out) k = choices[uniform_below(rng, choices.size())];
    return out;
}

}  // namespace t2s
