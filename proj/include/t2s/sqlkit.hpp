#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "t2s/dataset.hpp"
#include "t2s/difficulty.hpp"

namespace t2s::sql {

// ---------------------------------------------------------------------------
// Lexing

enum class TokenKind { identifier, quoted_identifier, string, number, symbol, end };

struct Token {
    TokenKind kind = TokenKind::end;
    std::string text;   // source text with quotes removed for identifiers/strings
    std::string lower;  // case-folded text
    std::size_t pos = 0;

    bool is_word(std::string_view w) const { return kind == TokenKind::identifier && lower == w; }
    bool is_symbol(std::string_view s) const { return kind == TokenKind::symbol && text == s; }
};

struct ParseError {
    std::size_t position = 0;
    std::string reason;
};

/// Tokenizes the dataset SQL dialect. Fails on unterminated quotes and
/// characters outside the dialect.
std::variant<std::vector<Token>, ParseError> tokenize(std::string_view sql);

/// True when the statement has ORDER BY outside any parentheses.
bool has_top_level_order_by(std::string_view sql);

/// The token stream with identifiers and literals replaced by "_" and
/// keywords/operators kept, e.g. "select _ from _ where _ > _".
std::string skeleton(std::string_view sql);

// ---------------------------------------------------------------------------
// Canonical clause structure

struct SqlUnit;
using UnitPtr = std::shared_ptr<const SqlUnit>;

/// Right-hand side of a predicate. Literals always collapse to `masked`.
struct Operand {
    enum class Kind { masked, subquery, expr };
    Kind kind = Kind::masked;
    std::string expr;  // canonical expression text when kind == expr
    UnitPtr subquery;  // set iff kind == subquery
};

struct Predicate {
    std::string lhs;  // canonical expression, empty for EXISTS
    std::string op;   // "=", "!=", "<", ">", "<=", ">=", "between", "in", "like", "glob", "is", "exists", ""
    bool negated = false;
    std::vector<Operand> rhs;
    int aggregates = 0;  // aggregate calls on either side; not part of the canonical form
};

enum class Connector { and_, or_ };

/// Flattened condition: preds[0] c[0] preds[1] c[1] ... Parenthesized
/// groups are flattened into the same list.
struct Condition {
    std::vector<Predicate> preds;
    std::vector<Connector> connectors;

    bool empty() const { return preds.empty(); }
};

struct SelectItem {
    std::string expr;
    int aggregates = 0;  // aggregate calls in the expression
};

struct FromSource {
    std::string table;  // canonical table name; empty for derived tables
    UnitPtr subquery;
};

struct OrderItem {
    std::string expr;
    bool descending = false;
    int aggregates = 0;
};

enum class SetOpKind { union_, intersect, except };

struct SetOperation {
    SetOpKind kind = SetOpKind::union_;
    bool all = false;
    UnitPtr rhs;
};

/// One SELECT block decomposed into clauses, with aliases resolved to
/// table names, identifiers case-folded and literal values masked.
/// Clause lists keep source order; em_match compares them as multisets
/// (except ORDER BY, which is a sequence).
struct SqlUnit {
    bool distinct = false;
    std::vector<SelectItem> select;
    std::vector<FromSource> from;
    Condition join;
    Condition where;
    std::vector<SelectItem> group_by;
    Condition having;
    std::vector<OrderItem> order_by;
    bool has_limit = false;
    std::optional<SetOperation> set_op;
};

/// Renders the unit back to SQL in canonical form. Parsing the result
/// against the same schema reproduces an equal unit.
std::string to_sql(const SqlUnit& unit);

bool operator==(const SqlUnit& a, const SqlUnit& b);

std::string canonical(const Predicate& p);
std::string canonical(const Operand& o);

/// Parses one query of the Spider/BIRD subset. Never throws on bad input;
/// failures carry the offending position and a reason. An empty schema
/// disables table/column existence checks.
std::variant<SqlUnit, ParseError> parse_sql(std::string_view sql, const DatabaseSchema& schema);

// ---------------------------------------------------------------------------
// Exact set match

/// Names of the clauses on which two units disagree ("select", "from",
/// "where", "group", "having", "order", "limit", "distinct", "set_op").
/// Nested subqueries compare recursively; any nested difference is
/// reported under the clause that holds it.
std::vector<std::string> em_diff(const SqlUnit& pred, const SqlUnit& gold);

inline bool em_match(const SqlUnit& pred, const SqlUnit& gold) { return em_diff(pred, gold).empty(); }

// ---------------------------------------------------------------------------
// Difficulty

/// Counts feeding the Spider hardness rule.
struct HardnessCounts {
    int component1 = 0;
    int component2 = 0;
    int others = 0;
};

HardnessCounts hardness_counts(const SqlUnit& unit);

/// Spider easy/medium/hard/extra. Throws ContractViolation for bird3,
/// whose labels come with the dataset.
DifficultyLabel classify_difficulty(const SqlUnit& unit, DifficultyScheme scheme = DifficultyScheme::spider4);

}  // namespace t2s::sql
