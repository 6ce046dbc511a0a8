#include <algorithm>
#include <map>

#include "sql_internal.hpp"
#include "t2s/sqlkit.hpp"

namespace t2s::sql {

namespace {

const char* set_op_word(SetOpKind k) {
    switch (k) {
        case SetOpKind::union_: return "union";
        case SetOpKind::intersect: return "intersect";
        case SetOpKind::except: return "except";
    }
    return "union";
}

std::string em_key(const SqlUnit& unit);

// Renders an operand; `nested` decides how subqueries are spelled so the
// same code serves both the SQL form and the order-insensitive EM key.
template <typename Nested>
std::string operand_text(const Operand& o, Nested nested) {
    switch (o.kind) {
        case Operand::Kind::masked: return "'value'";
        case Operand::Kind::subquery: return "(" + nested(*o.subquery) + ")";
        case Operand::Kind::expr: return o.expr;
    }
    return "";
}

template <typename Nested>
std::string predicate_text(const Predicate& p, Nested nested) {
    const std::string neg = p.negated ? "not " : "";
    auto rhs = [&](std::size_t i) { return operand_text(p.rhs.at(i), nested); };
    if (p.op == "exists") return neg + "exists " + rhs(0);
    if (p.op.empty()) return neg + p.lhs;
    if (p.op == "is") return p.lhs + (p.negated ? " is not null" : " is null");
    if (p.op == "between") return p.lhs + " " + neg + "between " + rhs(0) + " and " + rhs(1);
    if (p.op == "in") {
        if (p.rhs.size() == 1 && p.rhs[0].kind == Operand::Kind::subquery) return p.lhs + " " + neg + "in " + rhs(0);
        std::string items;
        for (std::size_t i = 0; i < p.rhs.size(); ++i) items += (i ? ", " : "") + rhs(i);
        return p.lhs + " " + neg + "in (" + items + ")";
    }
    if (p.op == "like" || p.op == "glob") return p.lhs + " " + neg + p.op + " " + rhs(0);
    return neg + p.lhs + " " + p.op + " " + rhs(0);
}

std::string sql_text(const SqlUnit& u) { return to_sql(u); }

std::string condition_sql(const Condition& c) {
    std::string out;
    for (std::size_t i = 0; i < c.preds.size(); ++i) {
        if (i) out += c.connectors[i - 1] == Connector::and_ ? " and " : " or ";
        out += predicate_text(c.preds[i], sql_text);
    }
    return out;
}

std::vector<std::string> sorted(std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    return v;
}

std::string condition_key(const Condition& c) {
    std::vector<std::string> preds;
    for (const auto& p : c.preds) preds.push_back(predicate_text(p, em_key));
    const auto ors = std::count(c.connectors.begin(), c.connectors.end(), Connector::or_);
    const auto ands = static_cast<long>(c.connectors.size()) - ors;
    return join(sorted(std::move(preds)), " ; ") + " |and=" + std::to_string(ands) + " or=" + std::to_string(ors);
}

struct ClauseKeys {
    std::map<std::string, std::string> parts;
};

ClauseKeys clause_keys(const SqlUnit& u) {
    ClauseKeys k;
    std::vector<std::string> items;
    for (const auto& s : u.select) items.push_back(s.expr);
    k.parts["select"] = join(sorted(std::move(items)), " , ");
    k.parts["distinct"] = u.distinct ? "1" : "0";
    std::vector<std::string> sources;
    for (const auto& f : u.from) sources.push_back(f.subquery ? "(" + em_key(*f.subquery) + ")" : f.table);
    k.parts["from"] = join(sorted(std::move(sources)), " , ");
    k.parts["join"] = condition_key(u.join);
    k.parts["where"] = condition_key(u.where);
    std::vector<std::string> groups;
    for (const auto& g : u.group_by) groups.push_back(g.expr);
    k.parts["group"] = join(sorted(std::move(groups)), " , ");
    k.parts["having"] = condition_key(u.having);
    std::string order;
    for (const auto& o : u.order_by) order += o.expr + (o.descending ? " desc" : " asc") + " , ";
    k.parts["order"] = order;
    k.parts["limit"] = u.has_limit ? "1" : "0";
    k.parts["set_op"] = u.set_op ? std::string(set_op_word(u.set_op->kind)) + (u.set_op->all ? " all " : " ") +
                                       em_key(*u.set_op->rhs)
                                 : "";
    return k;
}

std::string em_key(const SqlUnit& unit) {
    std::string out;
    for (const auto& [name, key] : clause_keys(unit).parts) out += name + "{" + key + "}";
    return out;
}

}  // namespace

std::string canonical(const Operand& o) { return operand_text(o, sql_text); }
std::string canonical(const Predicate& p) { return predicate_text(p, sql_text); }

std::string to_sql(const SqlUnit& u) {
    std::string out = "select ";
    if (u.distinct) out += "distinct ";
    for (std::size_t i = 0; i < u.select.size(); ++i) out += (i ? ", " : "") + u.select[i].expr;
    if (!u.from.empty()) {
        out += " from ";
        int derived = 0;
        for (std::size_t i = 0; i < u.from.size(); ++i) {
            if (i) out += " join ";
            const auto& f = u.from[i];
            if (f.subquery) out += "(" + to_sql(*f.subquery) + ") as __derived" + std::to_string(derived++);
            else out += detail::quote_ident(f.table);
        }
        if (!u.join.empty()) out += " on " + condition_sql(u.join);
    }
    if (!u.where.empty()) out += " where " + condition_sql(u.where);
    if (!u.group_by.empty()) {
        out += " group by ";
        for (std::size_t i = 0; i < u.group_by.size(); ++i) out += (i ? ", " : "") + u.group_by[i].expr;
    }
    if (!u.having.empty()) out += " having " + condition_sql(u.having);
    if (!u.order_by.empty()) {
        out += " order by ";
        for (std::size_t i = 0; i < u.order_by.size(); ++i)
            out += (i ? ", " : "") + u.order_by[i].expr + (u.order_by[i].descending ? " desc" : " asc");
    }
    if (u.has_limit) out += " limit 1";
    if (u.set_op) {
        out += std::string(" ") + set_op_word(u.set_op->kind) + (u.set_op->all ? " all " : " ");
        out += to_sql(*u.set_op->rhs);
    }
    return out;
}

bool operator==(const SqlUnit& a, const SqlUnit& b) { return to_sql(a) == to_sql(b); }

std::vector<std::string> em_diff(const SqlUnit& pred, const SqlUnit& gold) {
    const auto a = clause_keys(pred);
    const auto b = clause_keys(gold);
    std::vector<std::string> diff;
    for (const auto& [name, key] : a.parts)
        if (b.parts.at(name) != key) diff.push_back(name);
    return diff;
}

}  // namespace t2s::sql
