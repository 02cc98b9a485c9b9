#include "qcache/algebra.hpp"
#include "qcache/detail/overloaded.hpp"

#include <algorithm>

namespace qcache {

JoinCondition JoinCondition::normalized() const {
    if (right < left) return {right, left};
    return *this;
}

std::string JoinCondition::toString() const { return left + "=" + right; }

std::string Aggregate::toString() const { return "sum(" + input + ")->" + output; }

std::vector<JoinCondition> canonicalConditions(std::vector<JoinCondition> conds) {
    for (auto& c : conds) c = c.normalized();
    std::sort(conds.begin(), conds.end());
    conds.erase(std::unique(conds.begin(), conds.end()), conds.end());
    return conds;
}

namespace {

using detail::Overloaded;

std::string conditionsToString(const std::vector<JoinCondition>& conds) {
    if (conds.empty()) return "x";
    std::string s;
    for (std::size_t i = 0; i < conds.size(); ++i) {
        if (i) s += ',';
        s += conds[i].toString();
    }
    return s;
}

}  // namespace

std::string toString(const Operator& op) {
    return std::visit(Overloaded{
                          [](const SelectOp& s) { return "select[" + s.predicate.toString() + "]"; },
                          [](const JoinOp& j) { return "join[" + conditionsToString(j.conditions) + "]"; },
                          [](const GroupAggOp& g) {
                              return "groupby[" + g.groupBy.toString() + ";" + g.aggregate.toString() + "]";
                          },
                      },
                      op);
}

QueryTreePtr scan(std::string relation) {
    return std::make_shared<const QueryTree>(QueryTree{ScanNode{std::move(relation)}});
}

QueryTreePtr select(Predicate predicate, QueryTreePtr child) {
    return std::make_shared<const QueryTree>(QueryTree{SelectNode{std::move(predicate), std::move(child)}});
}

QueryTreePtr join(JoinCondition condition, QueryTreePtr left, QueryTreePtr right) {
    return join(std::vector<JoinCondition>{std::move(condition)}, std::move(left), std::move(right));
}

QueryTreePtr join(std::vector<JoinCondition> conditions, QueryTreePtr left, QueryTreePtr right) {
    return std::make_shared<const QueryTree>(
        QueryTree{JoinNode{std::move(conditions), std::move(left), std::move(right)}});
}

QueryTreePtr groupAgg(AttributeSet groupBy, Aggregate aggregate, QueryTreePtr child) {
    return std::make_shared<const QueryTree>(
        QueryTree{GroupAggNode{std::move(groupBy), std::move(aggregate), std::move(child)}});
}

AttributeSet schemaOf(const QueryTree& t, const Catalog& catalog) {
    return std::visit(
        Overloaded{
            [&](const ScanNode& s) {
                const auto& rel = catalog.relation(s.relation);
                std::vector<std::string> names;
                for (const auto& a : rel.attributes) names.push_back(a.name);
                return AttributeSet(std::move(names));
            },
            [&](const SelectNode& s) {
                if (!s.child) throw SchemaError("select without input");
                auto schema = schemaOf(*s.child, catalog);
                for (const auto& a : attributesOf(s.predicate))
                    if (!schema.contains(a))
                        throw SchemaError("select references attribute '" + a + "' not in its input");
                return schema;
            },
            [&](const JoinNode& j) {
                if (!j.left || !j.right) throw SchemaError("join without both inputs");
                const auto l = schemaOf(*j.left, catalog);
                const auto r = schemaOf(*j.right, catalog);
                for (const auto& c : j.conditions) {
                    const bool ok = (l.contains(c.left) && r.contains(c.right)) ||
                                    (l.contains(c.right) && r.contains(c.left));
                    if (!ok)
                        throw SchemaError("join condition " + c.toString() + " does not connect its inputs");
                }
                for (const auto& a : r)
                    if (l.contains(a)) throw SchemaError("join inputs share attribute '" + a + "'");
                return l.unite(r);
            },
            [&](const GroupAggNode& g) {
                if (!g.child) throw SchemaError("group-by without input");
                const auto in = schemaOf(*g.child, catalog);
                for (const auto& a : g.groupBy)
                    if (!in.contains(a)) throw SchemaError("group-by attribute '" + a + "' not in its input");
                if (!in.contains(g.aggregate.input))
                    throw SchemaError("aggregate input '" + g.aggregate.input + "' not in its input");
                if (g.groupBy.contains(g.aggregate.output))
                    throw SchemaError("aggregate output collides with a group-by attribute");
                AttributeSet out = g.groupBy;
                out.insert(g.aggregate.output);
                return out;
            },
        },
        t.node);
}

void validate(const QueryTree& t, const Catalog& catalog) { (void)schemaOf(t, catalog); }

std::string toString(const QueryTree& t) {
    return std::visit(Overloaded{
                          [](const ScanNode& s) { return s.relation; },
                          [](const SelectNode& s) {
                              return "select[" + canonicalize(s.predicate).toString() + "](" +
                                     toString(*s.child) + ")";
                          },
                          [](const JoinNode& j) {
                              return "join[" + conditionsToString(canonicalConditions(j.conditions)) + "](" +
                                     toString(*j.left) + "," + toString(*j.right) + ")";
                          },
                          [](const GroupAggNode& g) {
                              return "groupby[" + g.groupBy.toString() + ";" + g.aggregate.toString() + "](" +
                                     toString(*g.child) + ")";
                          },
                      },
                      t.node);
}

}  // namespace qcache
