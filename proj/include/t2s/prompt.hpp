#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "t2s/dataset.hpp"

namespace t2s {

enum class SchemaStyle { sentence, compact };

std::string_view to_string(SchemaStyle s);
std::optional<SchemaStyle> parse_schema_style(std::string_view s);

/// Text Representation Prompt layout.
struct PromptTemplate {
    std::string instruction_header;
    SchemaStyle schema_style = SchemaStyle::sentence;
    std::string question_header;
    std::string question_prefix = "Q:";
    std::string response_prefix = "Response:";
    std::string evidence_prefix = "Evidence:";
    bool include_evidence = false;

    /// Schema described in sentences, as in the zero-shot Spider prompt.
    static PromptTemplate sentence();
    /// "Table x, columns = [*,...]" schema lines, as in the few-shot prompt.
    static PromptTemplate compact();

    void validate() const;
};

struct TokenBudget {
    std::size_t max_context = 2048;
    std::size_t reserved_response = 512;

    std::size_t prompt_limit() const { return max_context - reserved_response; }
};

/// Counts tokens in a string. The default is ceil(bytes / 3); an exact
/// tokenizer can be injected wherever a counter is accepted.
using TokenCounter = std::function<std::size_t(std::string_view)>;

std::size_t estimate_tokens(std::string_view text);
TokenCounter default_token_counter();

struct PromptEnvelope {
    int target_index = 0;
    std::string text;
    std::size_t shots = 0;
    std::vector<int> exemplar_ids;
    std::size_t token_estimate = 0;
    TokenBudget budget;
};

std::string render_schema(const DatabaseSchema& schema, SchemaStyle style);

/// Renders instruction header, target schema, exemplar Q/Response pairs and
/// the unanswered target question. Exemplars from another database get
/// their schema in compact style right before their pair. When the budget
/// is exceeded exemplars are dropped from the tail; if the prompt does not
/// fit with none, throws BudgetExceeded.
PromptEnvelope build_prompt(const ExampleTriple& target, std::span<const ExampleTriple> exemplars,
                            const DatasetBundle& bundle, const PromptTemplate& tmpl,
                            const TokenBudget& budget = {}, const TokenCounter& count = default_token_counter());

}  // namespace t2s
