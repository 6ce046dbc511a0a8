#include "t2s/prompt.hpp"

#include "t2s/errors.hpp"

namespace t2s {

std::string_view to_string(SchemaStyle s) { return s == SchemaStyle::sentence ? "sentence" : "compact"; }

std::optional<SchemaStyle> parse_schema_style(std::string_view s) {
    if (s == "sentence") return SchemaStyle::sentence;
    if (s == "compact" || s == "compact-columns") return SchemaStyle::compact;
    return std::nullopt;
}

PromptTemplate PromptTemplate::sentence() {
    PromptTemplate t;
    t.instruction_header =
        "I want you to act as a SQL terminal in front of a database and below is an description of the database "
        "schema. Write a response that appropriately completes the request.\n\n/* Instruction */";
    t.schema_style = SchemaStyle::sentence;
    t.question_header = "Please give SQL statement to answer the following question:";
    return t;
}

PromptTemplate PromptTemplate::compact() {
    PromptTemplate t;
    t.instruction_header = "Given the following database schema :";
    t.schema_style = SchemaStyle::compact;
    t.question_header = "Please write queries to answer the following questions:";
    return t;
}

void PromptTemplate::validate() const {
    std::vector<std::string> issues;
    if (trim(question_prefix).empty()) issues.emplace_back("prompt question_prefix must be non-empty");
    if (trim(response_prefix).empty()) issues.emplace_back("prompt response_prefix must be non-empty");
    if (include_evidence && trim(evidence_prefix).empty()) issues.emplace_back("prompt evidence_prefix must be non-empty");
    if (!issues.empty()) throw ValidationError(std::move(issues));
}

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 2) / 3; }

TokenCounter default_token_counter() { return estimate_tokens; }

namespace {

std::vector<std::string> column_names(const TableDef& t) {
    std::vector<std::string> names;
    for (const auto& c : t.columns) names.push_back(c.name);
    return names;
}

}  // namespace

std::string render_schema(const DatabaseSchema& schema, SchemaStyle style) {
    std::string out;
    if (style == SchemaStyle::compact) {
        for (const auto& t : schema.tables) {
            out += "Table " + t.name + ", columns = [*";
            for (const auto& c : t.columns) out += "," + c.name;
            out += "]\n";
        }
        return out;
    }
    std::vector<std::string> tables;
    for (const auto& t : schema.tables) tables.push_back(t.name);
    out += "Database " + schema.db_id + " contains tables such as " + join(tables, ", ") + ". \n";
    for (const auto& t : schema.tables) {
        out += "Table " + t.name + " has columns such as " + join(column_names(t), ", ") + ".";
        std::vector<std::string> pks;
        for (const auto& pk : schema.primary_keys)
            if (iequals(pk.table, t.name)) pks.push_back(pk.column);
        if (pks.size() == 1) out += " " + pks.front() + " is the primary key.";
        else if (pks.size() > 1) out += " " + join(pks, ", ") + " are the primary keys.";
        out += "\n";
    }
    for (const auto& fk : schema.foreign_keys)
        out += "The " + fk.from.column + " of " + fk.from.table + " is the foreign key of " + fk.to.column + " of " +
               fk.to.table + ".\n";
    return out;
}

namespace {

std::string question_block(const ExampleTriple& e, const PromptTemplate& tmpl) {
    std::string out = tmpl.question_prefix + " " + e.question + "\n";
    if (tmpl.include_evidence && e.evidence && !e.evidence->empty())
        out += tmpl.evidence_prefix + " " + *e.evidence + "\n";
    return out + tmpl.response_prefix + " ";
}

std::string assemble(const ExampleTriple& target, std::span<const ExampleTriple> exemplars, const DatasetBundle& bundle,
                     const PromptTemplate& tmpl) {
    std::string text = tmpl.instruction_header + "\n";
    text += render_schema(bundle.schema(target.db_id), tmpl.schema_style);
    text += "\n" + tmpl.question_header + "\n\n";
    for (const auto& ex : exemplars) {
        if (ex.db_id != target.db_id) text += render_schema(bundle.schema(ex.db_id), SchemaStyle::compact);
        text += question_block(ex, tmpl) + ex.gold_sql + "\n\n";
    }
    return text + question_block(target, tmpl);
}

}  // namespace

PromptEnvelope build_prompt(const ExampleTriple& target, std::span<const ExampleTriple> exemplars,
                            const DatasetBundle& bundle, const PromptTemplate& tmpl, const TokenBudget& budget,
                            const TokenCounter& count) {
    const std::size_t limit = budget.prompt_limit();
    std::size_t shots = exemplars.size();
    while (true) {
        auto used = exemplars.first(shots);
        std::string text = assemble(target, used, bundle, tmpl);
        const std::size_t tokens = count(text);
        if (tokens <= limit) {
            PromptEnvelope env;
            env.target_index = target.index;
            env.text = std::move(text);
            env.shots = shots;
            for (const auto& e : used) env.exemplar_ids.push_back(e.index);
            env.token_estimate = tokens;
            env.budget = budget;
            return env;
        }
        if (shots == 0) throw BudgetExceeded(tokens - limit, limit);
        --shots;
    }
}

}  // namespace t2s
