// Fixtures, generators and brute-force oracles shared by the unit and
// acceptance tests. Oracles deliberately avoid the library's own search code.
#pragma once

#include "qcache/harness.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <vector>

namespace qcache::testing {

// ---------------------------------------------------------------------------
// Fixtures

/// Relations R0..R{n-1}; Ri has key ri_k (distinct = rows), ri_a in [0, 19]
/// and ri_b in [0, 99]. Row counts grow with i so join orders differ in cost.
Catalog chainCatalog(int n = 5);
/// R0 ⋈ R1 ⋈ ... ⋈ R{n-1}, left-deep, joining ri_a with r{i+1}_k.
QueryTreePtr chainJoin(int n);

/// One relation E(A, dno, age, sal) with the given row count, plus a small
/// relation D(d_dno, d_floor) to join with.
Catalog employeeCatalog(std::int64_t rows = 100000);

// ---------------------------------------------------------------------------
// Expansion oracle

/// Number of ordered (left, right) splits of every subset of n relations with
/// at least two members, counted by explicit enumeration.
std::uint64_t orderedPartitionCount(int n);
/// Per subset bit mask: the set of ordered splits (left mask, right mask).
std::map<std::uint32_t, std::set<std::pair<std::uint32_t, std::uint32_t>>> orderedPartitions(int n);

/// Relations under a node, as a bit mask over R0..R{n-1}.
std::uint32_t relationMask(const QueryDag& dag, EqId id);

// ---------------------------------------------------------------------------
// Plan enumeration oracle

struct PlanSummary {
    double cost = 0;
    bool usesDerived = false;
    bool usesReuse = false;
    friend auto operator<=>(const PlanSummary&, const PlanSummary&) = default;
};

/// Every distinct (cost, flags) over all complete plans obtaining `root`,
/// where nodes in `m` may be read back instead of computed.
std::set<PlanSummary> enumeratePlans(const QueryDag& dag, EqId root, const MaterializedSet& m);
/// Minimum plan cost by exhaustive enumeration.
double bruteForceCost(const QueryDag& dag, EqId root, const MaterializedSet& m);
/// Minimum over plans that do (or do not) use a derived operation; +inf if none.
double bruteForceCost(const QueryDag& dag, EqId root, const MaterializedSet& m, bool derived);

// ---------------------------------------------------------------------------
// Greedy oracle

struct OracleStep {
    EqId node = 0;
    double benefit = 0;
    double density = 0;
};

/// Plain greedy selection by benefit per block, recomputing every candidate's
/// benefit from scratch with the free functions each round. Ties go to the
/// lowest node id; stops when nothing fits or the best benefit is negative.
std::vector<OracleStep> greedyOracle(const QueryDag& dag, std::span<const WeightedQuery> workload,
                                     const std::vector<GreedyCandidate>& candidates, double capacityBlocks);

// ---------------------------------------------------------------------------
// Reachability oracle

/// Nodes reachable from the registered roots and pinned nodes, by plain DFS.
std::set<EqId> reachableNodes(const QueryDag& dag);
/// Sharable nodes recomputed pairwise from per-root and per-input reachability.
std::set<EqId> sharableOracle(const QueryDag& dag);

// ---------------------------------------------------------------------------
// Generators

/// Random predicate over `attrs` with values in [0, 20): atoms, ANDs and ORs up to `depth`.
Predicate randomPredicate(std::mt19937_64& rng, const std::vector<std::string>& attrs, int depth = 2);

/// Random query over chainCatalog: a join of 1..maxRelations consecutive
/// relations, up to `maxSelects` select atoms on ri_a / ri_b, optionally grouped.
QueryTreePtr randomChainQuery(std::mt19937_64& rng, int maxRelations, int maxSelects, bool allowGroupBy = true);

/// Uniformly chosen subset of at most `k` non-leaf live nodes.
MaterializedSet randomMaterialized(std::mt19937_64& rng, const QueryDag& dag, std::size_t k);

}  // namespace qcache::testing
