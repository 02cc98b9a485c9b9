#include "qcache/optimizer.hpp"

#include <algorithm>
#include <limits>

namespace qcache {

BenefitSession::BenefitSession(const QueryDag& dag, std::vector<WeightedQuery> workload)
    : dag_(dag), workload_(std::move(workload)), dagVersion_(dag.version()) {
    cost_.assign(dag.nodeIdBound(), 0);
    stamp_.assign(dag.nodeIdBound(), 0);
    valid_.assign(dag.nodeIdBound(), 0);
    for (const auto& q : workload_)
        if (!dag.isAlive(q.root)) throw UsageError("session root e" + std::to_string(q.root) + " is not live");
}

void BenefitSession::checkVersion() const {
    if (dag_.version() != dagVersion_) throw UsageError("benefit session invalidated by a DAG mutation");
}

std::uint64_t BenefitSession::computedAt(EqId e) const { return e < stamp_.size() ? stamp_[e] : 0; }

void BenefitSession::invalidateAncestors(EqId e) {
    // A valid node has only valid descendants, so the walk can stop at invalid nodes.
    std::vector<EqId> stack;
    for (OpId o : dag_.node(e).parentOps) stack.push_back(dag_.op(o).output);
    while (!stack.empty()) {
        const EqId a = stack.back();
        stack.pop_back();
        if (!valid_[a]) continue;
        valid_[a] = 0;
        for (OpId o : dag_.node(a).parentOps) stack.push_back(dag_.op(o).output);
    }
}

void BenefitSession::switchTo(const MaterializedSet& s) {
    checkVersion();
    if (s == current_) return;
    std::vector<EqId> changed;
    std::set_symmetric_difference(current_.begin(), current_.end(), s.begin(), s.end(), std::back_inserter(changed));
    for (EqId e : changed) {
        if (!dag_.isAlive(e)) throw UsageError("materialized set holds dead node e" + std::to_string(e));
        invalidateAncestors(e);
    }
    current_ = s;
    ++epoch_;
}

double BenefitSession::computeCost(EqId e) {
    if (valid_[e]) return cost_[e];
    const auto& n = dag_.node(e);
    double best = n.isLeaf() ? 0 : std::numeric_limits<double>::infinity();
    if (!n.isLeaf()) {
        for (OpId o : n.childOps) {
            const auto& on = dag_.op(o);
            double c = on.execCostMs;
            for (EqId in : on.inputs) c += obtainCost(in);
            if (c < best) best = c;
        }
    }
    cost_[e] = best;
    valid_[e] = 1;
    stamp_[e] = epoch_ + 1;
    ++recomputations_;
    return best;
}

double BenefitSession::obtainCost(EqId e) {
    const double c = computeCost(e);
    if (!current_.contains(e)) return c;
    return std::min(c, dag_.node(e).reuseCostMs);
}

double BenefitSession::workloadCost(const MaterializedSet& s) {
    switchTo(s);
    double total = 0;
    for (const auto& q : workload_) total += obtainCost(q.root) * q.weight;
    return total;
}

double BenefitSession::nodeCost(EqId x, const MaterializedSet& s) {
    switchTo(s);
    return obtainCost(x);
}

double BenefitSession::benefit(EqId x, const MaterializedSet& s, Acquisition how) {
    if (!dag_.isAlive(x)) throw UsageError("benefit: e" + std::to_string(x) + " is not live");
    const double before = workloadCost(s);
    const double after = workloadCost(s.with(x));
    double acquire = 0;
    switch (how) {
        case Acquisition::Compute: acquire = nodeCost(x, s); break;
        case Acquisition::OnPlan: acquire = dag_.node(x).materializationCostMs; break;
        case Acquisition::Resident: acquire = 0; break;
    }
    return before - (after + acquire);
}

}  // namespace qcache
