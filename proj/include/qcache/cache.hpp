// Cache management: representative set, cache contents, greedy selection and
// the incremental cache manager.
#pragma once

#include "qcache/dag.hpp"
#include "qcache/optimizer.hpp"

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace qcache {

// ---------------------------------------------------------------------------
// Representative set

/// Window over the most recent query instances. Position i (0 = newest)
/// contributes decay^i to the weight of its query.
class RepresentativeSet {
public:
    explicit RepresentativeSet(std::size_t capacity = 10, double decay = 0.9);

    std::size_t capacity() const { return capacity_; }
    double decay() const { return decay_; }

    /// Prepends `queryId`; returns the ids that fell out of the window.
    std::vector<QueryId> push(QueryId queryId);
    /// As push(), additionally releasing evicted queries from the DAG.
    std::vector<QueryId> recordQuery(QueryDag& dag, QueryId queryId);

    /// Newest first.
    const std::deque<QueryId>& entries() const { return entries_; }
    double positionWeight(std::size_t position) const;

    /// One entry per distinct root (after unification), ordered by most recent
    /// occurrence, weighted by the sum of decay^i over its occurrences.
    std::vector<WeightedQuery> workload(const QueryDag& dag) const;

private:
    std::size_t capacity_;
    double decay_;
    std::deque<QueryId> entries_;
};

// ---------------------------------------------------------------------------
// Cache contents

struct CacheEntry {
    EqId node = 0;
    double sizeBlocks = 0;
    bool marked = false;
    std::uint64_t lastUse = 0;
};

class CacheState {
public:
    explicit CacheState(double capacityBlocks);

    double capacityBlocks() const { return capacity_; }
    double usedBlocks() const;
    double freeBlocks() const { return capacity_ - usedBlocks(); }
    double markedBlocks() const;

    bool contains(EqId id) const;
    const CacheEntry& entry(EqId id) const;
    /// Sorted by node id.
    const std::vector<CacheEntry>& entries() const { return entries_; }
    MaterializedSet materialized() const;
    std::vector<EqId> markedNodes() const;

    /// Adds an entry if it fits in the free space; returns false otherwise.
    bool admit(EqId id, double sizeBlocks, std::uint64_t stamp, bool marked);
    void evict(EqId id);
    void touch(EqId id, std::uint64_t stamp);
    void setMarked(EqId id, bool marked);

    /// Evicts unmarked entries not in `protect`, largest first and least
    /// recently used among equal sizes, until `neededBlocks` fit. If that is
    /// impossible nothing is evicted and nullopt is returned.
    std::optional<std::vector<EqId>> lcsLruEvict(double neededBlocks, const std::vector<EqId>& protect = {});

    /// Rewrites ids absorbed by unification, merging entries that collapse.
    void remap(const QueryDag& dag);

    /// Throws std::logic_error if the contents exceed the capacity.
    void checkCapacity() const;

private:
    CacheEntry* find(EqId id);

    double capacity_;
    std::vector<CacheEntry> entries_;
};

// ---------------------------------------------------------------------------
// Greedy selection

struct GreedyCandidate {
    EqId node = 0;
    Acquisition how = Acquisition::Compute;
};

struct GreedyStep {
    EqId node = 0;
    double benefit = 0;
    double sizeBlocks = 0;
};

struct GreedyResult {
    std::vector<EqId> selected;  // in selection order
    std::vector<GreedyStep> steps;
    std::uint64_t benefitEvaluations = 0;
};

/// Benefit per block, with zero-size results ranked by the sign of their benefit.
double benefitDensity(double benefit, double sizeBlocks);

/// Repeatedly selects the candidate of highest benefit per block among those
/// that still fit in `cacheSizeBlocks`, stopping when none fits or the best
/// benefit is negative. Ties go to the lowest node id. With `pruning`,
/// candidates are re-evaluated in order of their previous density and the scan
/// stops once no stale density can beat the best fresh one.
GreedyResult greedySelect(BenefitSession& session, std::vector<GreedyCandidate> candidates, double cacheSizeBlocks,
                          bool pruning = true);

// ---------------------------------------------------------------------------
// Policies

/// Outcome of processing one query.
struct QueryOutcome {
    double planCostMs = 0;
    double materializationCostMs = 0;
    double occupancyBlocks = 0;
    std::vector<std::pair<EqId, double>> admitted;  // node, size in blocks
    std::vector<EqId> evicted;
    std::vector<EqId> marked;
    std::string plan;  // rendered plan, filled only when tracing
};

/// Per-query interface shared by every caching policy.
class CachePolicy {
public:
    virtual ~CachePolicy() = default;
    virtual std::string name() const = 0;
    virtual QueryOutcome onQuery(const QueryTree& q) = 0;
    virtual double capacityBlocks() const = 0;
    virtual double occupancyBlocks() const = 0;
    /// Throws std::logic_error on a violated capacity or bookkeeping invariant.
    virtual void checkInvariants() const = 0;
    void setTracing(bool on) { tracing_ = on; }

protected:
    bool tracing_ = false;
};

enum class IncrementalVariant { FinalQuery, NoFullCache, FullCache };

std::string toString(IncrementalVariant v);

struct IncrementalConfig {
    IncrementalVariant variant = IncrementalVariant::NoFullCache;
    double capacityBlocks = 0;
    std::size_t repsetSize = 10;
    double decay = 0.9;
    bool greedyPruning = true;
};

/// Optimizes each query against the cache, maintains the representative set,
/// selects results greedily and admits selected plan results as marked
/// entries, replacing unmarked ones by LCS/LRU.
class IncrementalCache : public CachePolicy {
public:
    IncrementalCache(const Catalog& catalog, CostParams params, IncrementalConfig config);

    std::string name() const override;
    QueryOutcome onQuery(const QueryTree& q) override;
    double capacityBlocks() const override { return cache_.capacityBlocks(); }
    double occupancyBlocks() const override { return cache_.usedBlocks(); }
    void checkInvariants() const override;

    const QueryDag& dag() const { return dag_; }
    const CacheState& cache() const { return cache_; }
    const RepresentativeSet& repset() const { return repset_; }
    /// Greedy trace of the most recent query.
    const GreedyResult& lastSelection() const { return lastSelection_; }
    const std::vector<GreedyCandidate>& lastCandidates() const { return lastCandidates_; }

private:
    void evictNode(EqId id, QueryOutcome& out);

    IncrementalConfig config_;
    QueryDag dag_;
    RepresentativeSet repset_;
    CacheState cache_;
    QueryId nextQuery_ = 0;
    GreedyResult lastSelection_;
    std::vector<GreedyCandidate> lastCandidates_;
};

}  // namespace qcache
