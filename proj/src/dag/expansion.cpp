#include "qcache/dag.hpp"

#include <algorithm>
#include <unordered_set>

namespace qcache {

namespace {

bool connects(const JoinCondition& c, const AttributeSet& a, const AttributeSet& b) {
    return (a.contains(c.left) && b.contains(c.right)) || (a.contains(c.right) && b.contains(c.left));
}

bool within(const Predicate& p, const AttributeSet& schema) {
    const auto attrs = attributesOf(p);
    return !attrs.empty() && schema.includes(attrs);
}

}  // namespace

class DagExpander {
public:
    explicit DagExpander(QueryDag& dag) : dag_(dag) {}

    // New operations get every rule; an existing operation whose input gained
    // a producer is combined with that producer only.
    void run() {
        while (!dag_.pendingExpansion_.empty() || !dag_.pendingPairs_.empty()) {
            std::vector<OpId> batch;
            batch.swap(dag_.pendingExpansion_);
            std::unordered_set<OpId> seen;
            for (OpId o : batch)
                if (seen.insert(o).second) apply(o);
            std::vector<std::pair<OpId, OpId>> pairs;
            pairs.swap(dag_.pendingPairs_);
            for (auto [parent, child] : pairs)
                if (!seen.count(parent)) applyPair(parent, child);
        }
    }

private:
    const OperationNode& op(OpId id) const { return dag_.ops_[id]; }
    const EquivalenceNode& node(EqId id) const { return dag_.nodes_[id]; }

    void apply(OpId id) {
        if (!op(id).alive || op(id).derived) return;
        const std::vector<OpId> children = node(op(id).inputs[0]).childOps;
        if (std::holds_alternative<JoinOp>(op(id).op)) {
            const auto& o = op(id);
            dag_.addOperationInto(o.op, {o.inputs[1], o.inputs[0]}, o.output, false);
            applyJoin(id, children);
        } else if (std::holds_alternative<SelectOp>(op(id).op)) {
            applySelect(id, children);
        }
    }

    void applyPair(OpId parent, OpId child) {
        const auto& p = op(parent);
        if (!p.alive || p.derived || !op(child).alive || op(child).output != p.inputs[0]) return;
        if (std::holds_alternative<JoinOp>(p.op)) applyJoin(parent, {child});
        else if (std::holds_alternative<SelectOp>(p.op)) applySelect(parent, {child});
    }

    void applyJoin(OpId id, const std::vector<OpId>& children) {
        if (!op(id).alive) return;
        const auto conds = std::get<JoinOp>(op(id).op).conditions;
        const EqId y = op(id).inputs[1];

        // (A j B) j Y  ->  A j (B j Y)
        for (OpId childId : children) {
            if (!op(id).alive) return;
            const auto& child = op(childId);
            if (!child.alive || child.derived || !std::holds_alternative<JoinOp>(child.op)) continue;
            const EqId a = child.inputs[0], b = child.inputs[1];
            std::vector<JoinCondition> all = conds;
            const auto& inner = std::get<JoinOp>(child.op).conditions;
            all.insert(all.end(), inner.begin(), inner.end());
            std::vector<JoinCondition> innerConds, outerConds;
            const auto& bs = node(b).schema();
            const auto& ys = node(dag_.resolve(y)).schema();
            for (const auto& c : all) (connects(c, bs, ys) ? innerConds : outerConds).push_back(c);
            const EqId by = dag_.addOperation(JoinOp{innerConds}, {b, y}, false);
            if (!op(id).alive) return;
            dag_.addOperationInto(JoinOp{outerConds}, {a, by}, op(id).output, false);
        }
    }

    void applySelect(OpId id, const std::vector<OpId>& children) {
        if (!op(id).alive) return;
        const Predicate pred = std::get<SelectOp>(op(id).op).predicate;
        for (OpId childId : children) {
            if (!op(id).alive) return;
            const auto& child = op(childId);
            if (!child.alive || child.derived) continue;
            if (const auto* j = std::get_if<JoinOp>(&child.op)) {
                pushDown(id, pred, *j, child.inputs[0], child.inputs[1]);
            } else if (const auto* s = std::get_if<SelectOp>(&child.op)) {
                auto conj = conjunctsOf(pred);
                auto more = conjunctsOf(s->predicate);
                conj.insert(conj.end(), more.begin(), more.end());
                const EqId y = child.inputs[0];
                dag_.addOperationInto(SelectOp{conjoin(std::move(conj))}, {y}, op(id).output, false);
            }
        }
    }

    // sel[P](L j R) -> sel[rest](sel[P_L](L) j sel[P_R](R))
    void pushDown(OpId id, const Predicate& pred, JoinOp join, EqId l, EqId r) {
        std::vector<Predicate> lc, rc, rest;
        const auto& ls = node(l).schema();
        const auto& rs = node(r).schema();
        for (const auto& c : conjunctsOf(pred)) {
            if (within(c, ls)) lc.push_back(c);
            else if (within(c, rs)) rc.push_back(c);
            else rest.push_back(c);
        }
        if (lc.empty() && rc.empty()) return;
        const EqId l2 = lc.empty() ? l : dag_.addOperation(SelectOp{conjoin(lc)}, {l}, false);
        const EqId r2 = rc.empty() ? r : dag_.addOperation(SelectOp{conjoin(rc)}, {r}, false);
        if (!op(id).alive) return;
        if (rest.empty()) {
            dag_.addOperationInto(std::move(join), {l2, r2}, op(id).output, false);
        } else {
            const EqId mid = dag_.addOperation(std::move(join), {l2, r2}, false);
            if (!op(id).alive) return;
            dag_.addOperationInto(SelectOp{conjoin(rest)}, {mid}, op(id).output, false);
        }
    }

    QueryDag& dag_;
};

void QueryDag::expand() {
    DagExpander(*this).run();
    collectGarbage();
    touch();
}

}  // namespace qcache
