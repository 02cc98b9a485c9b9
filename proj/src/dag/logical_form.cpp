#include "qcache/dag.hpp"
#include "qcache/detail/overloaded.hpp"

#include <algorithm>

namespace qcache {

namespace {

using detail::Overloaded;

std::string joinKeys(const std::vector<std::string>& parts, const char* sep) {
    std::string s;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) s += sep;
        s += parts[i];
    }
    return s;
}

LogicalForm toSpj(const LogicalFormPtr& f) {
    if (f->kind == LogicalForm::Kind::Spj) return *f;
    LogicalForm s;
    s.kind = LogicalForm::Kind::Spj;
    s.sources = {f};
    s.schema = f->schema;
    return s;
}

LogicalFormPtr finishSpj(LogicalForm s) {
    std::sort(s.sources.begin(), s.sources.end(), [](const auto& a, const auto& b) { return a->key < b->key; });
    s.conditions = canonicalConditions(std::move(s.conditions));
    std::sort(s.conjuncts.begin(), s.conjuncts.end());
    s.conjuncts.erase(std::unique(s.conjuncts.begin(), s.conjuncts.end()), s.conjuncts.end());
    if (s.sources.size() == 1 && s.conditions.empty() && s.conjuncts.empty()) return s.sources.front();

    AttributeSet schema;
    std::vector<std::string> srcKeys;
    for (const auto& src : s.sources) {
        schema = schema.unite(src->schema);
        srcKeys.push_back(src->key);
    }
    s.schema = std::move(schema);
    std::vector<std::string> condKeys, conjKeys;
    for (const auto& c : s.conditions) condKeys.push_back(c.toString());
    for (const auto& c : s.conjuncts) conjKeys.push_back(c.toString());
    s.key = "spj(" + joinKeys(srcKeys, ",") + ";" + joinKeys(condKeys, ",") + ";" + joinKeys(conjKeys, " AND ") + ")";
    return std::make_shared<const LogicalForm>(std::move(s));
}

LogicalFormPtr makeAggregate(LogicalFormPtr input, AttributeSet groupBy, Aggregate agg) {
    LogicalForm a;
    a.kind = LogicalForm::Kind::Aggregate;
    a.schema = groupBy;
    a.schema.insert(agg.output);
    a.key = "agg(" + input->key + ";" + groupBy.toString() + ";" + agg.toString() + ")";
    a.input = std::move(input);
    a.groupBy = std::move(groupBy);
    a.aggregate = std::move(agg);
    return std::make_shared<const LogicalForm>(std::move(a));
}

}  // namespace

LogicalFormPtr LogicalForm::forRelation(const RelationInfo& rel) {
    LogicalForm f;
    f.kind = Kind::Relation;
    f.relation = rel.name;
    std::vector<std::string> names;
    for (const auto& a : rel.attributes) names.push_back(a.name);
    f.schema = AttributeSet(std::move(names));
    f.key = rel.name;
    return std::make_shared<const LogicalForm>(std::move(f));
}

LogicalFormPtr LogicalForm::apply(const Operator& op, const std::vector<LogicalFormPtr>& inputs) {
    return std::visit(
        Overloaded{
            [&](const SelectOp& s) {
                if (inputs.size() != 1) throw UsageError("select takes one input");
                LogicalForm f = toSpj(inputs[0]);
                for (auto& c : conjunctsOf(canonicalize(s.predicate))) f.conjuncts.push_back(std::move(c));
                return finishSpj(std::move(f));
            },
            [&](const JoinOp& j) {
                if (inputs.size() != 2) throw UsageError("join takes two inputs");
                LogicalForm f = toSpj(inputs[0]);
                const LogicalForm r = toSpj(inputs[1]);
                f.sources.insert(f.sources.end(), r.sources.begin(), r.sources.end());
                f.conditions.insert(f.conditions.end(), r.conditions.begin(), r.conditions.end());
                f.conditions.insert(f.conditions.end(), j.conditions.begin(), j.conditions.end());
                f.conjuncts.insert(f.conjuncts.end(), r.conjuncts.begin(), r.conjuncts.end());
                return finishSpj(std::move(f));
            },
            [&](const GroupAggOp& g) {
                if (inputs.size() != 1) throw UsageError("group-by takes one input");
                const auto& in = inputs[0];
                if (in->kind == Kind::Aggregate && g.aggregate == Aggregate::rollup(in->aggregate) &&
                    in->groupBy.includes(g.groupBy))
                    return makeAggregate(in->input, g.groupBy, in->aggregate);
                return makeAggregate(in, g.groupBy, g.aggregate);
            },
        },
        op);
}

Estimate estimateForm(const LogicalForm& form, const Catalog& catalog) {
    const double blockSize = static_cast<double>(catalog.blockSizeBytes());
    switch (form.kind) {
        case LogicalForm::Kind::Relation: return estimateBase(catalog.relation(form.relation), blockSize);
        case LogicalForm::Kind::Aggregate: {
            const Estimate in = estimateForm(*form.input, catalog);
            return estimateOutput(GroupAggOp{form.groupBy, form.aggregate}, std::span(&in, 1), catalog);
        }
        case LogicalForm::Kind::Spj: break;
    }
    Estimate acc = estimateForm(*form.sources.front(), catalog);
    AttributeSet accSchema = form.sources.front()->schema;
    std::vector<bool> used(form.conditions.size(), false);
    for (std::size_t i = 1; i < form.sources.size(); ++i) {
        const auto& src = *form.sources[i];
        JoinOp j;
        for (std::size_t c = 0; c < form.conditions.size(); ++c) {
            if (used[c]) continue;
            const auto& cond = form.conditions[c];
            const bool connects = (accSchema.contains(cond.left) && src.schema.contains(cond.right)) ||
                                  (accSchema.contains(cond.right) && src.schema.contains(cond.left));
            if (connects) {
                j.conditions.push_back(cond);
                used[c] = true;
            }
        }
        const Estimate pair[2] = {acc, estimateForm(src, catalog)};
        acc = estimateOutput(j, pair, catalog);
        accSchema = accSchema.unite(src.schema);
    }
    if (!form.conjuncts.empty()) {
        const Estimate in = acc;
        acc = estimateOutput(SelectOp{conjoin(form.conjuncts)}, std::span(&in, 1), catalog);
    }
    return acc;
}

}  // namespace qcache
