#include <algorithm>
#include <cctype>
#include <utility>

#include "sql_internal.hpp"
#include "t2s/sqlkit.hpp"

namespace t2s::sql {

namespace {

using detail::is_aggregate;
using detail::is_reserved;
using detail::quote_ident;

const std::string kMasked = "'value'";

struct Failure {
    std::size_t pos;
    std::string reason;
};

struct Expr {
    std::string canon;
    int aggregates = 0;
    bool has_column = false;
    UnitPtr subquery;  // set when the expression is exactly "( query )"
};

struct Source {
    std::string canonical;  // table name or __derivedN
    std::string alias;      // lower-case alias, empty if none
    const TableDef* def = nullptr;
    std::vector<std::string> outputs;  // derived tables only
    bool derived = false;
};

struct Scope {
    const Scope* parent = nullptr;
    std::vector<Source> sources;
    std::vector<std::pair<std::string, Expr>> select_aliases;
    int derived_count = 0;
};

struct CoreResult {
    SqlUnit unit;
    std::vector<std::string> outputs;
};

class Parser {
public:
    Parser(std::vector<Token> tokens, const DatabaseSchema& schema) : toks_(std::move(tokens)), schema_(schema) {}

    SqlUnit parse_statement() {
        if (peek().is_word("with")) fail("WITH clauses are not supported");
        auto result = parse_query(nullptr);
        while (peek().is_symbol(";")) ++pos_;
        if (peek().kind != TokenKind::end) fail("unexpected '" + peek().text + "'");
        return std::move(result.unit);
    }

private:
    std::vector<Token> toks_;
    const DatabaseSchema& schema_;
    std::size_t pos_ = 0;

    const Token& peek(std::size_t ahead = 0) const {
        const std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
        return toks_[i];
    }
    const Token& next() {
        const Token& t = toks_[pos_];
        if (pos_ + 1 < toks_.size()) ++pos_;
        return t;
    }
    [[noreturn]] void fail(const std::string& reason) const { throw Failure{peek().pos, reason}; }
    bool accept_word(std::string_view w) {
        if (peek().is_word(w)) {
            ++pos_;
            return true;
        }
        return false;
    }
    bool accept_symbol(std::string_view s) {
        if (peek().is_symbol(s)) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect_word(std::string_view w) {
        if (!accept_word(w)) fail("expected " + std::string(w));
    }
    void expect_symbol(std::string_view s) {
        if (!accept_symbol(s)) fail("expected '" + std::string(s) + "'");
    }
    bool schema_checked() const { return !schema_.tables.empty(); }

    bool at_name() const {
        const Token& t = peek();
        return t.kind == TokenKind::quoted_identifier || (t.kind == TokenKind::identifier && !is_reserved(t.lower));
    }
    std::string take_name() {
        if (!at_name()) fail("expected identifier");
        return next().lower;
    }
    bool starts_query() const {
        return peek().is_word("select") || (peek().is_symbol("(") && peek(1).is_word("select"));
    }

    // ---------------------------------------------------------------- queries

    CoreResult parse_query(const Scope* parent) {
        CoreResult left = parse_select_core(parent);
        std::optional<SetOpKind> kind;
        if (peek().is_word("union")) kind = SetOpKind::union_;
        else if (peek().is_word("intersect")) kind = SetOpKind::intersect;
        else if (peek().is_word("except")) kind = SetOpKind::except;
        if (kind) {
            ++pos_;
            SetOperation op;
            op.kind = *kind;
            op.all = accept_word("all");
            op.rhs = std::make_shared<const SqlUnit>(parse_query(parent).unit);
            left.unit.set_op = std::move(op);
        }
        return left;
    }

    bool at_select_end(int depth) const {
        const Token& t = peek();
        if (t.kind == TokenKind::end || t.is_symbol(";")) return true;
        if (depth > 0) return false;
        if (t.is_symbol(")")) return true;
        for (auto w : {"from", "where", "group", "having", "order", "limit", "union", "intersect", "except"})
            if (t.is_word(w)) return true;
        return false;
    }

    CoreResult parse_select_core(const Scope* parent) {
        CoreResult result;
        SqlUnit& unit = result.unit;
        expect_word("select");
        if (accept_word("distinct")) unit.distinct = true;
        else accept_word("all");

        const std::size_t list_start = pos_;
        int depth = 0;
        while (!at_select_end(depth)) {
            if (peek().is_symbol("(")) ++depth;
            else if (peek().is_symbol(")")) --depth;
            next();
        }
        const std::size_t list_end = pos_;

        Scope scope;
        scope.parent = parent;
        if (accept_word("from")) parse_from(scope, unit);
        const std::size_t after_from = pos_;

        pos_ = list_start;
        if (pos_ == list_end) fail("empty select list");
        parse_select_list(scope, unit, result.outputs);
        if (pos_ != list_end) fail("unexpected '" + peek().text + "' in select list");
        pos_ = after_from;

        if (accept_word("where")) unit.where = parse_condition(scope);
        if (accept_word("group")) {
            expect_word("by");
            do {
                Expr e = parse_value(scope, false);
                unit.group_by.push_back(SelectItem{e.canon, e.aggregates});
            } while (accept_symbol(","));
        }
        if (accept_word("having")) unit.having = parse_condition(scope, true);
        if (accept_word("order")) {
            expect_word("by");
            do {
                Expr e = parse_value(scope, true);
                OrderItem item{e.canon, false, e.aggregates};
                if (accept_word("desc")) item.descending = true;
                else accept_word("asc");
                unit.order_by.push_back(std::move(item));
            } while (accept_symbol(","));
        }
        if (accept_word("limit")) {
            parse_value(scope, false);
            if (accept_word("offset") || accept_symbol(",")) parse_value(scope, false);
            unit.has_limit = true;
        }
        if (peek().is_word("window") || peek().is_word("over")) fail("window functions are not supported");
        return result;
    }

    void parse_select_list(Scope& scope, SqlUnit& unit, std::vector<std::string>& outputs) {
        do {
            if (accept_symbol("*")) {
                unit.select.push_back(SelectItem{"*", 0});
                outputs.push_back("*");
                continue;
            }
            Expr e = parse_general(scope, false);
            std::optional<std::string> alias;
            if (accept_word("as")) {
                if (peek().kind == TokenKind::string) alias = next().lower;
                else alias = take_name();
            } else if (at_name()) {
                alias = take_name();
            }
            std::string out = e.canon;
            if (auto dot = out.rfind('.'); dot != std::string::npos && e.has_column && out.find('(') == std::string::npos)
                out = out.substr(dot + 1);
            if (alias) {
                scope.select_aliases.emplace_back(*alias, e);
                out = *alias;
            }
            outputs.push_back(out);
            unit.select.push_back(SelectItem{e.canon, e.aggregates});
        } while (accept_symbol(","));
    }

    void parse_from(Scope& scope, SqlUnit& unit) {
        parse_source(scope, unit);
        while (true) {
            if (accept_symbol(",")) {
                parse_source(scope, unit);
                continue;
            }
            const std::size_t save = pos_;
            accept_word("natural");
            if (accept_word("left") || accept_word("right") || accept_word("full")) accept_word("outer");
            else if (!accept_word("inner")) accept_word("cross");
            if (!accept_word("join")) {
                pos_ = save;
                break;
            }
            parse_source(scope, unit);
            if (accept_word("on")) {
                Condition c = parse_condition(scope);
                if (!unit.join.empty() && !c.empty()) unit.join.connectors.push_back(Connector::and_);
                append(unit.join, std::move(c));
            } else if (peek().is_word("using")) {
                fail("JOIN ... USING is not supported");
            }
        }
    }

    static void append(Condition& into, Condition&& c) {
        into.preds.insert(into.preds.end(), std::make_move_iterator(c.preds.begin()), std::make_move_iterator(c.preds.end()));
        into.connectors.insert(into.connectors.end(), c.connectors.begin(), c.connectors.end());
    }

    void parse_source(Scope& scope, SqlUnit& unit) {
        Source src;
        if (accept_symbol("(")) {
            if (!peek().is_word("select")) fail("parenthesized joins are not supported");
            CoreResult sub = parse_query(&scope);
            expect_symbol(")");
            src.derived = true;
            src.outputs = std::move(sub.outputs);
            src.canonical = "__derived" + std::to_string(scope.derived_count++);
            unit.from.push_back(FromSource{"", std::make_shared<const SqlUnit>(std::move(sub.unit))});
        } else {
            if (!at_name()) fail("expected table name");
            const std::size_t at = pos_;
            std::string name = next().lower;
            src.def = schema_.find_table(name);
            if (schema_checked() && !src.def) {
                pos_ = at;
                fail("unknown table '" + name + "'");
            }
            src.canonical = src.def ? to_lower(src.def->name) : name;
            unit.from.push_back(FromSource{src.canonical, nullptr});
        }
        if (accept_word("as")) src.alias = take_name();
        else if (at_name()) src.alias = take_name();
        scope.sources.push_back(std::move(src));
    }

    // ------------------------------------------------------------ conditions

    bool at_condition_boundary() const {
        const Token& t = peek();
        if (t.kind == TokenKind::end || t.is_symbol(")") || t.is_symbol(";") || t.is_symbol(",")) return true;
        for (auto w : {"and", "or", "then", "group", "having", "order", "limit", "union", "intersect", "except",
                       "join", "inner", "left", "right", "cross", "natural", "where", "else", "end", "when"})
            if (t.is_word(w)) return true;
        return false;
    }

    Condition parse_condition(const Scope& scope, bool aliases = false) {
        Condition c;
        parse_condition_term(scope, c, false, aliases);
        while (true) {
            if (accept_word("and")) c.connectors.push_back(Connector::and_);
            else if (accept_word("or")) c.connectors.push_back(Connector::or_);
            else break;
            parse_condition_term(scope, c, false, aliases);
        }
        return c;
    }

    void parse_condition_term(const Scope& scope, Condition& into, bool negated, bool aliases) {
        if (accept_word("not")) {
            parse_condition_term(scope, into, !negated, aliases);
            return;
        }
        if (peek().is_symbol("(") && !peek(1).is_word("select")) {
            const std::size_t save = pos_;
            try {
                ++pos_;
                Condition inner = parse_condition(scope, aliases);
                expect_symbol(")");
                const bool grouped = inner.preds.size() > 1 || inner.preds.front().op != "";
                if (grouped && at_condition_boundary()) {
                    if (negated) {
                        if (inner.preds.size() != 1) fail("NOT over a parenthesized group is not supported");
                        inner.preds.front().negated = !inner.preds.front().negated;
                    }
                    append(into, std::move(inner));
                    return;
                }
            } catch (const Failure&) {
            }
            pos_ = save;
        }
        Predicate p = parse_predicate(scope, aliases);
        if (negated) p.negated = !p.negated;
        into.preds.push_back(std::move(p));
    }

    Operand to_operand(Expr e) {
        Operand o;
        if (e.subquery) {
            o.kind = Operand::Kind::subquery;
            o.subquery = std::move(e.subquery);
        } else if (!e.has_column) {
            o.kind = Operand::Kind::masked;
        } else {
            o.kind = Operand::Kind::expr;
            o.expr = std::move(e.canon);
        }
        return o;
    }

    Predicate parse_predicate(const Scope& scope, bool aliases) {
        Predicate p;
        if (accept_word("exists")) {
            expect_symbol("(");
            if (!peek().is_word("select")) fail("expected subquery after EXISTS");
            CoreResult sub = parse_query(&scope);
            expect_symbol(")");
            p.op = "exists";
            Operand o;
            o.kind = Operand::Kind::subquery;
            o.subquery = std::make_shared<const SqlUnit>(std::move(sub.unit));
            p.rhs.push_back(std::move(o));
            return p;
        }
        Expr lhs = parse_value(scope, aliases);
        p.lhs = lhs.canon;
        p.aggregates = lhs.aggregates;
        parse_predicate_tail(scope, p, aliases);
        if (p.op.empty()) last_bare_ = std::move(lhs);
        else last_bare_.reset();
        return p;
    }

    void add_rhs(Predicate& p, Expr e) {
        p.aggregates += e.aggregates;
        p.rhs.push_back(to_operand(std::move(e)));
    }

    void parse_predicate_tail(const Scope& scope, Predicate& p, bool aliases) {
        const std::size_t save = pos_;
        if (accept_word("not")) {
            if (!(peek().is_word("between") || peek().is_word("in") || peek().is_word("like") || peek().is_word("glob"))) {
                pos_ = save;
                return;
            }
            p.negated = true;
        }
        const Token& t = peek();
        if (t.is_word("between")) {
            ++pos_;
            p.op = "between";
            add_rhs(p, parse_value(scope, aliases));
            expect_word("and");
            add_rhs(p, parse_value(scope, aliases));
        } else if (t.is_word("in")) {
            ++pos_;
            p.op = "in";
            expect_symbol("(");
            if (peek().is_word("select")) {
                CoreResult sub = parse_query(&scope);
                Operand o;
                o.kind = Operand::Kind::subquery;
                o.subquery = std::make_shared<const SqlUnit>(std::move(sub.unit));
                p.rhs.push_back(std::move(o));
            } else {
                std::vector<Expr> items;
                do {
                    items.push_back(parse_value(scope, aliases));
                } while (accept_symbol(","));
                const bool literal_list = std::none_of(items.begin(), items.end(),
                                                       [](const Expr& e) { return e.has_column || e.subquery; });
                if (literal_list) p.rhs.push_back(Operand{});
                else
                    for (auto& e : items) add_rhs(p, std::move(e));
            }
            expect_symbol(")");
        } else if (t.is_word("like") || t.is_word("glob")) {
            p.op = next().lower;
            add_rhs(p, parse_value(scope, aliases));
            if (accept_word("escape")) parse_value(scope, aliases);
        } else if (t.is_word("is")) {
            ++pos_;
            p.op = "is";
            if (accept_word("not")) p.negated = !p.negated;
            if (!accept_word("null")) fail("only IS [NOT] NULL is supported");
        } else if (t.kind == TokenKind::symbol &&
                   (t.text == "=" || t.text == "==" || t.text == "!=" || t.text == "<>" || t.text == "<" ||
                    t.text == ">" || t.text == "<=" || t.text == ">=")) {
            ++pos_;
            p.op = t.text == "==" ? "=" : t.text == "<>" ? "!=" : t.text;
            add_rhs(p, parse_value(scope, aliases));
            if ((p.op == "=" || p.op == "!=") && p.rhs.front().kind == Operand::Kind::expr && p.rhs.front().expr < p.lhs)
                std::swap(p.lhs, p.rhs.front().expr);
        }
    }

    // ----------------------------------------------------------- expressions

    /// Expression that may also be a boolean condition (function arguments,
    /// select items, CASE branches).
    Expr parse_general(const Scope& scope, bool aliases) {
        Condition c = parse_condition(scope, aliases);
        if (c.preds.size() == 1 && c.preds.front().op.empty() && !c.preds.front().negated && last_bare_)
            return *last_bare_;
        Expr e;
        e.canon = "(" + canonical_condition(c) + ")";
        e.has_column = true;
        for (const auto& p : c.preds) e.aggregates += p.aggregates;
        return e;
    }

    // Value of the most recent predicate that had no comparison tail.
    std::optional<Expr> last_bare_;

    static std::string canonical_condition(const Condition& c) {
        std::string out;
        for (std::size_t i = 0; i < c.preds.size(); ++i) {
            if (i) out += c.connectors[i - 1] == Connector::and_ ? " and " : " or ";
            out += canonical(c.preds[i]);
        }
        return out;
    }

    Expr parse_value(const Scope& scope, bool aliases) { return parse_concat(scope, aliases); }

    static Expr binary(Expr l, const std::string& op, Expr r) {
        Expr e;
        e.canon = "(" + l.canon + " " + op + " " + r.canon + ")";
        e.aggregates = l.aggregates + r.aggregates;
        e.has_column = l.has_column || r.has_column;
        if (!e.has_column) e.canon = kMasked;
        return e;
    }

    Expr parse_concat(const Scope& scope, bool aliases) {
        Expr e = parse_additive(scope, aliases);
        while (peek().is_symbol("||")) {
            next();
            e = binary(std::move(e), "||", parse_additive(scope, aliases));
        }
        return e;
    }

    Expr parse_additive(const Scope& scope, bool aliases) {
        Expr e = parse_multiplicative(scope, aliases);
        while (peek().is_symbol("+") || peek().is_symbol("-")) {
            std::string op = next().text;
            e = binary(std::move(e), op, parse_multiplicative(scope, aliases));
        }
        return e;
    }

    Expr parse_multiplicative(const Scope& scope, bool aliases) {
        Expr e = parse_unary(scope, aliases);
        while (peek().is_symbol("*") || peek().is_symbol("/") || peek().is_symbol("%")) {
            std::string op = next().text;
            e = binary(std::move(e), op, parse_unary(scope, aliases));
        }
        return e;
    }

    Expr parse_unary(const Scope& scope, bool aliases) {
        if (accept_symbol("+")) return parse_unary(scope, aliases);
        if (accept_symbol("-")) {
            Expr inner = parse_unary(scope, aliases);
            if (!inner.has_column) return Expr{kMasked, inner.aggregates, false, nullptr};
            inner.canon = "(-" + inner.canon + ")";
            inner.subquery = nullptr;
            return inner;
        }
        return parse_primary(scope, aliases);
    }

    Expr parse_primary(const Scope& scope, bool aliases) {
        const Token& t = peek();
        if (t.kind == TokenKind::number || t.kind == TokenKind::string) {
            next();
            return Expr{kMasked, 0, false, nullptr};
        }
        if (t.is_word("null")) {
            next();
            return Expr{"null", 0, false, nullptr};
        }
        if (t.is_symbol("(")) {
            next();
            if (peek().is_word("select")) {
                CoreResult sub = parse_query(&scope);
                expect_symbol(")");
                Expr e;
                e.subquery = std::make_shared<const SqlUnit>(std::move(sub.unit));
                e.canon = "(" + to_sql(*e.subquery) + ")";
                return e;
            }
            Expr inner = parse_general(scope, aliases);
            expect_symbol(")");
            inner.subquery = nullptr;
            return inner;
        }
        if (t.is_word("case")) return parse_case(scope, aliases);
        if (t.is_word("cast")) return parse_cast(scope, aliases);
        if (t.is_word("exists")) fail("EXISTS is only supported as a predicate");
        if (t.kind == TokenKind::identifier && peek(1).is_symbol("(")) return parse_call(scope, aliases);
        if (t.kind == TokenKind::identifier && (t.lower == "true" || t.lower == "false")) {
            next();
            return Expr{kMasked, 0, false, nullptr};
        }
        if (at_name()) return parse_column(scope, aliases);
        fail(t.kind == TokenKind::end ? "unexpected end of query" : "unexpected '" + t.text + "'");
    }

    Expr parse_call(const Scope& scope, bool aliases) {
        const std::string name = next().lower;
        expect_symbol("(");
        Expr e;
        std::string args;
        if (accept_symbol("*")) {
            args = "*";
        } else if (!peek().is_symbol(")")) {
            if (accept_word("distinct")) args = "distinct ";
            bool first = true;
            do {
                Expr a = parse_general(scope, aliases);
                if (!first) args += ", ";
                first = false;
                args += a.canon;
                e.aggregates += a.aggregates;
                e.has_column = e.has_column || a.has_column;
            } while (accept_symbol(","));
        }
        expect_symbol(")");
        if (peek().is_word("over")) fail("window functions are not supported");
        if (is_aggregate(name)) {
            ++e.aggregates;
            e.has_column = true;  // an aggregate is never a constant
        }
        e.canon = name + "(" + args + ")";
        return e;
    }

    Expr parse_case(const Scope& scope, bool aliases) {
        expect_word("case");
        Expr e;
        std::string out = "case";
        auto absorb = [&](const Expr& part) {
            e.aggregates += part.aggregates;
            e.has_column = e.has_column || part.has_column;
        };
        if (!peek().is_word("when")) {
            Expr base = parse_value(scope, aliases);
            absorb(base);
            out += " " + base.canon;
        }
        if (!peek().is_word("when")) fail("expected WHEN");
        while (accept_word("when")) {
            Expr cond = parse_general(scope, aliases);
            expect_word("then");
            Expr val = parse_general(scope, aliases);
            absorb(cond);
            absorb(val);
            out += " when " + cond.canon + " then " + val.canon;
        }
        if (accept_word("else")) {
            Expr val = parse_general(scope, aliases);
            absorb(val);
            out += " else " + val.canon;
        }
        expect_word("end");
        e.canon = out + " end";
        e.has_column = true;
        return e;
    }

    Expr parse_cast(const Scope& scope, bool aliases) {
        expect_word("cast");
        expect_symbol("(");
        Expr inner = parse_general(scope, aliases);
        expect_word("as");
        std::string type;
        int depth = 0;
        while (!(depth == 0 && peek().is_symbol(")"))) {
            if (peek().kind == TokenKind::end) fail("unterminated CAST");
            if (peek().is_symbol("(")) ++depth;
            if (peek().is_symbol(")")) --depth;
            const Token& t = next();
            if (!type.empty() && t.kind != TokenKind::symbol && type.back() != '(') type += ' ';
            type += t.kind == TokenKind::symbol ? t.text : t.lower;
        }
        expect_symbol(")");
        if (type.empty()) fail("missing CAST target type");
        if (!inner.has_column) return Expr{kMasked, inner.aggregates, false, nullptr};
        inner.canon = "cast(" + inner.canon + " as " + type + ")";
        inner.subquery = nullptr;
        return inner;
    }

    static std::string column_canon(const Source& src, const std::string& column) {
        return quote_ident(src.canonical) + "." + quote_ident(column);
    }

    Expr parse_column(const Scope& scope, bool aliases) {
        const std::size_t at = pos_;
        std::string first = take_name();
        if (accept_symbol(".")) {
            if (accept_symbol("*")) {
                const Source* src = find_qualifier(scope, first);
                if (!src) {
                    pos_ = at;
                    fail("unknown table or alias '" + first + "'");
                }
                return Expr{quote_ident(src->canonical) + ".*", 0, true, nullptr};
            }
            std::string column = take_name();
            const Source* src = find_qualifier(scope, first);
            if (!src) {
                pos_ = at;
                fail("unknown table or alias '" + first + "'");
            }
            if (src->def && !src->def->find_column(column)) {
                pos_ = at;
                fail("unknown column '" + first + "." + column + "'");
            }
            return Expr{column_canon(*src, column), 0, true, nullptr};
        }
        if (aliases)
            if (auto e = find_alias(scope, first)) return *e;
        for (const Scope* s = &scope; s; s = s->parent)
            for (const auto& src : s->sources) {
                if (src.def && src.def->find_column(first)) return Expr{column_canon(src, first), 0, true, nullptr};
                if (src.derived && std::find(src.outputs.begin(), src.outputs.end(), first) != src.outputs.end())
                    return Expr{column_canon(src, first), 0, true, nullptr};
            }
        if (auto e = find_alias(scope, first)) return *e;
        if (scope.sources.size() == 1 && (!scope.sources.front().def || !schema_checked()))
            return Expr{column_canon(scope.sources.front(), first), 0, true, nullptr};
        if (!schema_checked()) return Expr{quote_ident(first), 0, true, nullptr};
        pos_ = at;
        fail("unknown column '" + first + "'");
    }

    static std::optional<Expr> find_alias(const Scope& scope, const std::string& name) {
        for (const auto& [alias, e] : scope.select_aliases)
            if (alias == name) return e;
        return std::nullopt;
    }

    static const Source* find_qualifier(const Scope& scope, const std::string& q) {
        for (const Scope* s = &scope; s; s = s->parent) {
            for (const auto& src : s->sources)
                if (src.alias == q) return &src;
            for (const auto& src : s->sources)
                if (src.alias.empty() && src.canonical == q) return &src;
            for (const auto& src : s->sources)
                if (src.canonical == q) return &src;
        }
        return nullptr;
    }
};

}  // namespace

std::variant<SqlUnit, ParseError> parse_sql(std::string_view sql, const DatabaseSchema& schema) {
    auto lexed = tokenize(sql);
    if (auto* err = std::get_if<ParseError>(&lexed)) return *err;
    auto& tokens = std::get<std::vector<Token>>(lexed);
    if (tokens.size() == 1) return ParseError{0, "empty query"};
    try {
        Parser parser(std::move(tokens), schema);
        return parser.parse_statement();
    } catch (const Failure& f) {
        return ParseError{f.pos, f.reason};
    }
}

}  // namespace t2s::sql
