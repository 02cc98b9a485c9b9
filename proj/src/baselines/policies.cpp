#include "qcache/baselines.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace qcache {

// ---------------------------------------------------------------------------
// NoCache

NoCachePolicy::NoCachePolicy(const Catalog& catalog, CostParams params) : dag_(catalog, params) {}

QueryOutcome NoCachePolicy::onQuery(const QueryTree& q) {
    const QueryId qid = nextQuery_++;
    QueryOutcome out;
    const EqId root = dag_.insertQuery(q, qid);
    dag_.expand();
    dag_.addSubsumptionDerivations();
    const Plan plan = optimize(dag_, dag_.resolve(root), MaterializedSet{});
    out.planCostMs = plan.cost;
    if (tracing_) out.plan = plan.toString(dag_);
    dag_.removeQuery(qid);
    return out;
}

// ---------------------------------------------------------------------------
// InfCache

InfCachePolicy::InfCachePolicy(const Catalog& catalog, CostParams params) : dag_(catalog, params) {}

double InfCachePolicy::capacityBlocks() const { return std::numeric_limits<double>::infinity(); }

QueryOutcome InfCachePolicy::onQuery(const QueryTree& q) {
    const QueryId qid = nextQuery_++;
    QueryOutcome out;
    std::vector<EqId> before;
    for (EqId id : dag_.liveNodes())
        if (!dag_.node(id).isLeaf()) before.push_back(id);

    dag_.insertQuery(q, qid);
    dag_.expand();
    dag_.addSubsumptionDerivations();

    std::vector<EqId> stored;
    for (EqId id : before) {
        const EqId r = dag_.resolve(id);
        if (dag_.isAlive(r)) stored.push_back(r);
    }
    const MaterializedSet m(std::move(stored));
    occupancy_ = 0;
    for (EqId id : m) occupancy_ += dag_.node(id).sizeBlocks();

    const Plan plan = optimize(dag_, *dag_.rootOf(qid), m);
    out.planCostMs = plan.cost;
    out.occupancyBlocks = occupancy_;
    if (tracing_) out.plan = plan.toString(dag_);
    return out;
}

// ---------------------------------------------------------------------------
// Bounded policies

BoundedPolicy::BoundedPolicy(const Catalog& catalog, CostParams params, double capacityBlocks)
    : dag_(catalog, params), cache_(capacityBlocks) {}

QueryOutcome BoundedPolicy::onQuery(const QueryTree& q) {
    const QueryId qid = nextQuery_++;
    const std::uint64_t stamp = qid + 1;
    QueryOutcome out;

    dag_.insertQuery(q, qid);
    dag_.expand();
    dag_.addSubsumptionDerivations();
    cache_.remap(dag_);
    onRemap();
    const EqId root = *dag_.rootOf(qid);

    const Plan plan = optimize(dag_, root, cache_.materialized());
    out.planCostMs = plan.cost;
    if (tracing_) out.plan = plan.toString(dag_);
    for (const auto& [id, step] : plan.steps)
        if (step.kind == PlanStep::Kind::Reuse) cache_.touch(id, stamp);

    Context ctx{q, toString(q), root, plan, stamp, out};
    admit(ctx);

    dag_.removeQuery(qid);
    out.marked = cache_.markedNodes();
    out.occupancyBlocks = cache_.usedBlocks();
    cache_.checkCapacity();
    return out;
}

bool BoundedPolicy::store(EqId id, double sizeBlocks, Context& ctx) {
    if (cache_.contains(id) || !cache_.admit(id, sizeBlocks, ctx.stamp, false)) return false;
    dag_.setPinned(id, true);
    ctx.out.admitted.emplace_back(id, sizeBlocks);
    ctx.out.materializationCostMs += dag_.node(id).materializationCostMs;
    return true;
}

void BoundedPolicy::drop(EqId id, Context& ctx) {
    if (cache_.contains(id)) cache_.evict(id);
    dag_.setPinned(id, false);
    ctx.out.evicted.push_back(id);
}

void BoundedPolicy::checkInvariants() const {
    cache_.checkCapacity();
    for (const auto& e : cache_.entries())
        if (!dag_.isAlive(e.node) || !dag_.node(e.node).pinned)
            throw std::logic_error("cached e" + std::to_string(e.node) + " is not a pinned live node");
}

// ---------------------------------------------------------------------------
// LCS/LRU

void LcsLruPolicy::admit(Context& ctx) {
    std::vector<EqId> nodes = ctx.plan.resultNodes();
    std::stable_partition(nodes.begin(), nodes.end(), [&](EqId id) { return id == ctx.root; });
    std::vector<EqId> admitted;
    for (EqId id : nodes) {
        if (cache_.contains(id)) {
            cache_.touch(id, ctx.stamp);
            continue;
        }
        const double size = dag_.node(id).sizeBlocks();
        if (size > cache_.capacityBlocks()) continue;
        auto victims = cache_.lcsLruEvict(size, admitted);
        if (!victims) continue;
        for (EqId v : *victims) drop(v, ctx);
        if (store(id, size, ctx)) admitted.push_back(id);
    }
}

// ---------------------------------------------------------------------------
// Metric-based policies

void ResultStats::recordAccess(std::uint64_t stamp) {
    ++accessCount;
    lastAccesses.push_back(stamp);
    while (lastAccesses.size() > 10) lastAccesses.pop_front();
}

double ResultStats::rateOfUse(std::uint64_t now) const {
    if (lastAccesses.empty()) return 0;
    if (lastAccesses.size() == 1) return 1.0 / static_cast<double>(now - std::min(now, admittedAt) + 1);
    const double span = static_cast<double>(now - lastAccesses.front());
    return static_cast<double>(lastAccesses.size()) / std::max(span, 1.0);
}

MetricPolicy::MetricPolicy(const Catalog& catalog, CostParams params, double capacityBlocks)
    : BoundedPolicy(catalog, params, capacityBlocks) {}

void MetricPolicy::onRemap() {
    std::map<EqId, std::string> remapped;
    for (auto& [id, key] : keys_) remapped.emplace(dag_.resolve(id), key);
    keys_ = std::move(remapped);
}

void MetricPolicy::admit(Context& ctx) {
    const std::uint64_t now = ctx.stamp;
    std::vector<std::string> accessed{ctx.key};
    for (const auto& [id, step] : ctx.plan.steps)
        if (step.kind == PlanStep::Kind::Reuse)
            if (auto it = keys_.find(id); it != keys_.end()) accessed.push_back(it->second);
    std::sort(accessed.begin(), accessed.end());
    accessed.erase(std::unique(accessed.begin(), accessed.end()), accessed.end());
    for (const auto& k : accessed) stats_[k].recordAccess(now);

    const EqId root = ctx.root;
    if (cache_.contains(root)) {
        cache_.touch(root, now);
        return;
    }
    const double size = dag_.node(root).sizeBlocks();
    if (size > cache_.capacityBlocks()) return;
    const double candidate = candidateMetric(ctx);

    std::vector<EqId> victims;
    if (cache_.freeBlocks() < size) {
        std::vector<std::pair<double, EqId>> ranked;
        for (const auto& e : cache_.entries()) ranked.emplace_back(metric(e.node, now), e.node);
        std::sort(ranked.begin(), ranked.end());
        double freed = cache_.freeBlocks();
        for (const auto& [m, id] : ranked) {
            if (freed >= size) break;
            if (!(m < candidate)) return;
            freed += cache_.entry(id).sizeBlocks;
            victims.push_back(id);
        }
        if (freed < size) return;
    }
    for (EqId v : victims) {
        drop(v, ctx);
        keys_.erase(v);
    }
    if (!store(root, size, ctx)) return;
    keys_[root] = ctx.key;
    auto& s = stats_[ctx.key];
    s.admittedAt = now;
    s.sizeBlocks = size;
}

double DynaMatPolicy::candidateMetric(const Context& ctx) {
    const MaterializedSet none;
    auto& s = stats_[ctx.key];
    s.computeCostMs = PlanCostEvaluator(dag_, none).computeCost(ctx.root);
    const double size = dag_.node(ctx.root).sizeBlocks();
    return static_cast<double>(s.accessCount) * s.computeCostMs / size;
}

double DynaMatPolicy::metric(EqId id, std::uint64_t) {
    const auto& s = stats_.at(keys_.at(id));
    return static_cast<double>(s.accessCount) * s.computeCostMs / cache_.entry(id).sizeBlocks;
}

double WatchmanPolicy::costGivenCache(EqId id) {
    if (!eval_ || evalVersion_ != dag_.version() || !(evalSet_ == cache_.materialized())) {
        evalSet_ = cache_.materialized();
        evalVersion_ = dag_.version();
        eval_ = std::make_unique<PlanCostEvaluator>(dag_, evalSet_);
    }
    return eval_->computeCost(id);
}

double WatchmanPolicy::candidateMetric(const Context& ctx) {
    ResultStats s = stats_[ctx.key];
    s.admittedAt = ctx.stamp;
    s.computeCostMs = costGivenCache(ctx.root);
    stats_[ctx.key].computeCostMs = s.computeCostMs;
    return s.rateOfUse(ctx.stamp) * s.computeCostMs / dag_.node(ctx.root).sizeBlocks();
}

double WatchmanPolicy::metric(EqId id, std::uint64_t now) {
    auto& s = stats_.at(keys_.at(id));
    s.computeCostMs = costGivenCache(id);
    return s.rateOfUse(now) * s.computeCostMs / cache_.entry(id).sizeBlocks;
}

}  // namespace qcache
