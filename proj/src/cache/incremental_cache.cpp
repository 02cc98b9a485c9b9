#include "qcache/cache.hpp"

#include <algorithm>
#include <stdexcept>

namespace qcache {

std::string toString(IncrementalVariant v) {
    switch (v) {
        case IncrementalVariant::FinalQuery: return "Incremental/FinalQuery";
        case IncrementalVariant::NoFullCache: return "Incremental/NoFullCache";
        case IncrementalVariant::FullCache: return "Incremental/FullCache";
    }
    return "Incremental";
}

IncrementalCache::IncrementalCache(const Catalog& catalog, CostParams params, IncrementalConfig config)
    : config_(config),
      dag_(catalog, params),
      repset_(config.repsetSize, config.decay),
      cache_(config.capacityBlocks) {}

std::string IncrementalCache::name() const { return toString(config_.variant); }

void IncrementalCache::evictNode(EqId id, QueryOutcome& out) {
    dag_.setPinned(id, false);
    out.evicted.push_back(id);
}

QueryOutcome IncrementalCache::onQuery(const QueryTree& q) {
    const QueryId qid = nextQuery_++;
    const std::uint64_t stamp = qid + 1;
    QueryOutcome out;

    dag_.insertQuery(q, qid);
    dag_.expand();
    dag_.addSubsumptionDerivations();
    cache_.remap(dag_);
    const EqId root = *dag_.rootOf(qid);

    const Plan plan = optimize(dag_, root, cache_.materialized());
    out.planCostMs = plan.cost;
    if (tracing_) out.plan = plan.toString(dag_);
    for (const auto& [id, step] : plan.steps)
        if (step.kind == PlanStep::Kind::Reuse) cache_.touch(id, stamp);

    repset_.recordQuery(dag_, qid);

    // Candidates: previously marked results plus the results of this plan.
    std::vector<GreedyCandidate> candidates;
    for (EqId id : cache_.markedNodes()) candidates.push_back({id, Acquisition::Resident});
    std::vector<EqId> planNodes;
    if (config_.variant == IncrementalVariant::FinalQuery) {
        planNodes.push_back(root);
    } else {
        planNodes = plan.resultNodes();
    }
    for (EqId id : planNodes)
        candidates.push_back({id, cache_.contains(id) ? Acquisition::Resident : Acquisition::OnPlan});

    BenefitSession session(dag_, repset_.workload(dag_));
    lastSelection_ = greedySelect(session, candidates, cache_.capacityBlocks(), config_.greedyPruning);
    lastCandidates_ = std::move(candidates);
    for (const auto& step : lastSelection_.steps)
        if (step.benefit < 0) throw std::logic_error("greedy accepted a negative benefit");

    const auto& selected = lastSelection_.selected;
    auto isSelected = [&](EqId id) { return std::find(selected.begin(), selected.end(), id) != selected.end(); };
    for (EqId id : cache_.markedNodes())
        if (!isSelected(id)) cache_.setMarked(id, false);
    for (EqId id : selected)
        if (cache_.contains(id)) {
            cache_.setMarked(id, true);
            cache_.touch(id, stamp);
        }

    std::vector<EqId> admittedNow;
    auto admit = [&](EqId id, bool marked) {
        const auto& n = dag_.node(id);
        const double size = n.sizeBlocks();
        if (size > cache_.capacityBlocks()) return;
        auto victims = cache_.lcsLruEvict(size, admittedNow);
        if (!victims) return;
        for (EqId v : *victims) evictNode(v, out);
        if (!cache_.admit(id, size, stamp, marked)) return;
        dag_.setPinned(id, true);
        admittedNow.push_back(id);
        out.admitted.emplace_back(id, size);
        out.materializationCostMs += n.materializationCostMs;
    };
    for (EqId id : selected)
        if (!cache_.contains(id)) admit(id, true);

    if (config_.variant == IncrementalVariant::FullCache) {
        std::vector<EqId> rest = plan.resultNodes();
        std::stable_partition(rest.begin(), rest.end(), [&](EqId id) { return id == root; });
        for (EqId id : rest)
            if (!cache_.contains(id)) admit(id, false);
    }

    out.marked = cache_.markedNodes();
    out.occupancyBlocks = cache_.usedBlocks();
    cache_.checkCapacity();
    return out;
}

void IncrementalCache::checkInvariants() const {
    cache_.checkCapacity();
    if (cache_.markedBlocks() > cache_.capacityBlocks()) throw std::logic_error("marked results exceed capacity");
    for (const auto& e : cache_.entries()) {
        if (!dag_.isAlive(e.node) || !dag_.node(e.node).pinned)
            throw std::logic_error("cached e" + std::to_string(e.node) + " is not a pinned live node");
    }
}

}  // namespace qcache
