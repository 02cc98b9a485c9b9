#include "qcache/optimizer.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <sstream>

namespace qcache {

MaterializedSet::MaterializedSet(std::initializer_list<EqId> ids) : MaterializedSet(std::vector<EqId>(ids)) {}

MaterializedSet::MaterializedSet(std::vector<EqId> ids) : ids_(std::move(ids)) {
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

bool MaterializedSet::contains(EqId id) const { return std::binary_search(ids_.begin(), ids_.end(), id); }

void MaterializedSet::insert(EqId id) {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id) ids_.insert(it, id);
}

void MaterializedSet::erase(EqId id) {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it != ids_.end() && *it == id) ids_.erase(it);
}

MaterializedSet MaterializedSet::with(EqId id) const {
    MaterializedSet s = *this;
    s.insert(id);
    return s;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();
constexpr OpId kNoOp = std::numeric_limits<OpId>::max();

}  // namespace

PlanCostEvaluator::PlanCostEvaluator(const QueryDag& dag, const MaterializedSet& m, bool memoize)
    : dag_(dag), m_(m), memoize_(memoize) {
    if (memoize_) {
        cost_.assign(dag.nodeIdBound(), 0);
        best_.assign(dag.nodeIdBound(), kNoOp);
        known_.assign(dag.nodeIdBound(), 0);
    }
}

std::pair<double, OpId> PlanCostEvaluator::evaluate(EqId e) {
    if (memoize_ && known_[e]) return {cost_[e], best_[e]};
    ++evaluations_;
    const auto& n = dag_.node(e);
    double best = n.isLeaf() ? 0 : kInfinity;
    OpId bestOp = kNoOp;
    if (!n.isLeaf()) {
        for (OpId o : n.childOps) {
            const auto& on = dag_.op(o);
            double c = on.execCostMs;
            for (EqId in : on.inputs) c += obtainCost(in);
            if (c < best) {
                best = c;
                bestOp = o;
            }
        }
    }
    if (memoize_) {
        cost_[e] = best;
        best_[e] = bestOp;
        known_[e] = 1;
    }
    return {best, bestOp};
}

double PlanCostEvaluator::computeCost(EqId e) { return evaluate(e).first; }

double PlanCostEvaluator::obtainCost(EqId e) {
    const double c = computeCost(e);
    if (!m_.contains(e)) return c;
    return std::min(c, dag_.node(e).reuseCostMs);
}

OpId PlanCostEvaluator::bestOp(EqId e) { return evaluate(e).second; }

// ---------------------------------------------------------------------------

std::vector<EqId> Plan::resultNodes() const {
    std::vector<EqId> out;
    for (const auto& [id, step] : steps)
        if (step.kind != PlanStep::Kind::Leaf) out.push_back(id);
    return out;
}

std::string Plan::toString(const QueryDag& dag) const {
    std::ostringstream out;
    std::function<void(EqId, int)> print = [&](EqId e, int depth) {
        const auto& step = steps.at(e);
        out << std::string(static_cast<std::size_t>(depth) * 2, ' ');
        switch (step.kind) {
            case PlanStep::Kind::Leaf: out << "scan " << *dag.node(e).baseRelation; break;
            case PlanStep::Kind::Reuse: out << "reuse e" << e; break;
            case PlanStep::Kind::Compute: out << qcache::toString(dag.op(step.op).op) << " -> e" << e; break;
        }
        out << "  [" << step.cost << " ms]\n";
        if (step.kind == PlanStep::Kind::Compute)
            for (EqId in : dag.op(step.op).inputs) print(in, depth + 1);
    };
    print(root, 0);
    return out.str();
}

Plan optimize(const QueryDag& dag, EqId root, const MaterializedSet& m, bool memoize) {
    if (!dag.isAlive(root)) throw UsageError("optimize: root e" + std::to_string(root) + " is not live");
    PlanCostEvaluator eval(dag, m, memoize);
    Plan plan;
    plan.root = root;
    plan.cost = eval.obtainCost(root);
    std::function<void(EqId)> choose = [&](EqId e) {
        if (plan.steps.count(e)) return;
        const auto& n = dag.node(e);
        PlanStep step;
        step.node = e;
        if (n.isLeaf()) {
            step.kind = PlanStep::Kind::Leaf;
            plan.steps.emplace(e, step);
            return;
        }
        const double compute = eval.computeCost(e);
        if (m.contains(e) && n.reuseCostMs < compute) {
            step.kind = PlanStep::Kind::Reuse;
            step.cost = n.reuseCostMs;
            plan.steps.emplace(e, step);
            return;
        }
        step.kind = PlanStep::Kind::Compute;
        step.op = eval.bestOp(e);
        step.cost = compute;
        if (step.op == kNoOp) throw UsageError("optimize: e" + std::to_string(e) + " has no computable plan");
        plan.steps.emplace(e, step);
        for (EqId in : dag.op(step.op).inputs) choose(in);
    };
    choose(root);
    return plan;
}

double workloadCost(const QueryDag& dag, std::span<const WeightedQuery> workload, const MaterializedSet& s) {
    PlanCostEvaluator eval(dag, s);
    double total = 0;
    for (const auto& q : workload) {
        if (!dag.isAlive(q.root)) throw UsageError("workload root e" + std::to_string(q.root) + " is not live");
        total += eval.obtainCost(q.root) * q.weight;
    }
    return total;
}

double acquisitionCost(const QueryDag& dag, EqId x, const MaterializedSet& s, Acquisition how) {
    switch (how) {
        case Acquisition::Compute: return PlanCostEvaluator(dag, s).obtainCost(x);
        case Acquisition::OnPlan: return dag.node(x).materializationCostMs;
        case Acquisition::Resident: return 0;
    }
    return 0;
}

double benefit(const QueryDag& dag, std::span<const WeightedQuery> workload, EqId x, const MaterializedSet& s,
               Acquisition how) {
    if (!dag.isAlive(x)) throw UsageError("benefit: e" + std::to_string(x) + " is not live");
    const double before = workloadCost(dag, workload, s);
    const double after = workloadCost(dag, workload, s.with(x));
    return before - (after + acquisitionCost(dag, x, s, how));
}

}  // namespace qcache
