#include <algorithm>

#include "t2s/errors.hpp"
#include "t2s/sqlkit.hpp"

namespace t2s::sql {

namespace {

int count_or(const Condition& c) {
    return static_cast<int>(std::count(c.connectors.begin(), c.connectors.end(), Connector::or_));
}

int count_like(const Condition& c) {
    return static_cast<int>(std::count_if(c.preds.begin(), c.preds.end(), [](const Predicate& p) { return p.op == "like"; }));
}

int count_nested(const Condition& c) {
    int n = 0;
    for (const auto& p : c.preds)
        for (const auto& o : p.rhs)
            if (o.kind == Operand::Kind::subquery) ++n;
    return n;
}

// Spider's aggregation count reads slot 0 of each condition unit, which is
// the NOT flag, so negated predicates are what gets counted there.
int count_negated(const Condition& c) {
    return static_cast<int>(std::count_if(c.preds.begin(), c.preds.end(), [](const Predicate& p) { return p.negated; }));
}

}  // namespace

HardnessCounts hardness_counts(const SqlUnit& u) {
    HardnessCounts h;
    if (!u.where.empty()) ++h.component1;
    if (!u.group_by.empty()) ++h.component1;
    if (!u.order_by.empty()) ++h.component1;
    if (u.has_limit) ++h.component1;
    if (!u.from.empty()) h.component1 += static_cast<int>(u.from.size()) - 1;
    h.component1 += count_or(u.join) + count_or(u.where) + count_or(u.having);
    h.component1 += count_like(u.join) + count_like(u.where) + count_like(u.having);

    h.component2 = count_nested(u.join) + count_nested(u.where) + count_nested(u.having) + (u.set_op ? 1 : 0);

    int aggs = 0;
    for (const auto& s : u.select) aggs += s.aggregates > 0 ? 1 : 0;
    aggs += count_negated(u.where);
    for (const auto& g : u.group_by) aggs += g.aggregates > 0 ? 1 : 0;
    for (const auto& o : u.order_by) aggs += std::min(o.aggregates, 2);
    // HAVING is scanned without skipping its and/or tokens, which all count
    aggs += count_negated(u.having) + static_cast<int>(u.having.connectors.size());
    if (aggs > 1) ++h.others;
    if (u.select.size() > 1) ++h.others;
    if (u.where.preds.size() > 1) ++h.others;
    if (u.group_by.size() > 1) ++h.others;
    return h;
}

DifficultyLabel classify_difficulty(const SqlUnit& unit, DifficultyScheme scheme) {
    if (scheme != DifficultyScheme::spider4)
        throw ContractViolation("bird3 difficulty labels are supplied by the dataset, not computed");
    const auto [c1, c2, others] = hardness_counts(unit);
    Difficulty d;
    if (c1 <= 1 && others == 0 && c2 == 0)
        d = Difficulty::easy;
    else if ((others <= 2 && c1 <= 1 && c2 == 0) || (c1 <= 2 && others < 2 && c2 == 0))
        d = Difficulty::medium;
    else if ((others > 2 && c1 <= 2 && c2 == 0) || (c1 > 2 && c1 <= 3 && others <= 2 && c2 == 0) ||
             (c1 <= 1 && others == 0 && c2 <= 1))
        d = Difficulty::hard;
    else
        d = Difficulty::extra;
    return DifficultyLabel{DifficultyScheme::spider4, d};
}

}  // namespace t2s::sql
