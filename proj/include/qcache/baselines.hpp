// Reference caching policies sharing the per-query interface.
#pragma once

#include "qcache/cache.hpp"

#include <deque>
#include <map>
#include <memory>
#include <string>

namespace qcache {

/// Optimizes every query from scratch; nothing is ever stored.
class NoCachePolicy : public CachePolicy {
public:
    NoCachePolicy(const Catalog& catalog, CostParams params);

    std::string name() const override { return "NoCache"; }
    QueryOutcome onQuery(const QueryTree& q) override;
    double capacityBlocks() const override { return 0; }
    double occupancyBlocks() const override { return 0; }
    void checkInvariants() const override {}

private:
    QueryDag dag_;
    QueryId nextQuery_ = 0;
};

/// Unbounded cache holding every result computable before the current query
/// arrives, without materialization charges. Keeps all queries in its DAG.
class InfCachePolicy : public CachePolicy {
public:
    InfCachePolicy(const Catalog& catalog, CostParams params);

    std::string name() const override { return "InfCache"; }
    QueryOutcome onQuery(const QueryTree& q) override;
    double capacityBlocks() const override;
    double occupancyBlocks() const override { return occupancy_; }
    void checkInvariants() const override {}

    const QueryDag& dag() const { return dag_; }

private:
    QueryDag dag_;
    QueryId nextQuery_ = 0;
    double occupancy_ = 0;
};

/// Shared plumbing of the bounded baselines: the DAG holds the current query
/// and the cached results only.
class BoundedPolicy : public CachePolicy {
public:
    BoundedPolicy(const Catalog& catalog, CostParams params, double capacityBlocks);

    QueryOutcome onQuery(const QueryTree& q) final;
    double capacityBlocks() const override { return cache_.capacityBlocks(); }
    double occupancyBlocks() const override { return cache_.usedBlocks(); }
    void checkInvariants() const override;

    const QueryDag& dag() const { return dag_; }
    const CacheState& cache() const { return cache_; }

protected:
    struct Context {
        const QueryTree& query;
        std::string key;  // canonical query text
        EqId root;
        const Plan& plan;
        std::uint64_t stamp;
        QueryOutcome& out;
    };

    virtual void admit(Context& ctx) = 0;
    virtual void onRemap() {}

    /// Stores `id`, charging its materialization. Returns false if it was not admitted.
    bool store(EqId id, double sizeBlocks, Context& ctx);
    void drop(EqId id, Context& ctx);

    QueryDag dag_;
    CacheState cache_;
    QueryId nextQuery_ = 0;
};

/// Admits every result of each plan, evicting the largest results first and
/// the least recently used among equal sizes.
class LcsLruPolicy : public BoundedPolicy {
public:
    using BoundedPolicy::BoundedPolicy;
    std::string name() const override { return "LcsLru"; }

protected:
    void admit(Context& ctx) override;
};

struct ResultStats {
    std::uint64_t accessCount = 0;
    std::deque<std::uint64_t> lastAccesses;  // at most ten stamps, oldest first
    std::uint64_t admittedAt = 0;
    double computeCostMs = 0;
    double sizeBlocks = 0;

    void recordAccess(std::uint64_t stamp);
    /// Accesses per stamp over the window; a single access counts from admission.
    double rateOfUse(std::uint64_t now) const;
};

/// Caches final query results only, replacing results of lowest
/// access-weighted cost per block.
class MetricPolicy : public BoundedPolicy {
public:
    MetricPolicy(const Catalog& catalog, CostParams params, double capacityBlocks);

    const std::map<std::string, ResultStats>& stats() const { return stats_; }
    /// Metric of a cached result at the given stamp.
    virtual double metric(EqId id, std::uint64_t now) = 0;

protected:
    void admit(Context& ctx) override;
    void onRemap() override;
    virtual double candidateMetric(const Context& ctx) = 0;

    std::map<std::string, ResultStats> stats_;  // by canonical query text
    std::map<EqId, std::string> keys_;          // cached node -> query text
};

/// access count over the whole history * cost from base data / size.
class DynaMatPolicy : public MetricPolicy {
public:
    using MetricPolicy::MetricPolicy;
    std::string name() const override { return "DynaMat"; }
    double metric(EqId id, std::uint64_t now) override;

protected:
    double candidateMetric(const Context& ctx) override;
};

/// rate of use over the last ten accesses * cost given the other cached
/// results / size.
class WatchmanPolicy : public MetricPolicy {
public:
    using MetricPolicy::MetricPolicy;
    std::string name() const override { return "Watchman"; }
    double metric(EqId id, std::uint64_t now) override;

protected:
    double candidateMetric(const Context& ctx) override;

private:
    double costGivenCache(EqId id);

    // Shared across entries: a cached node is never its own descendant, so
    // one evaluator over the whole cache serves every entry.
    MaterializedSet evalSet_;
    std::uint64_t evalVersion_ = 0;
    std::unique_ptr<PlanCostEvaluator> eval_;
};

}  // namespace qcache
