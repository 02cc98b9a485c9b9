// Consolidated AND-OR DAG of a query workload.
#pragma once

#include "qcache/algebra.hpp"
#include "qcache/costmodel.hpp"

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace qcache {

using EqId = std::uint32_t;
using OpId = std::uint32_t;
using QueryId = std::uint64_t;

// ---------------------------------------------------------------------------
// Logical forms

struct LogicalForm;
using LogicalFormPtr = std::shared_ptr<const LogicalForm>;

/// Normalized description of the result an expression computes, independent
/// of operator order. A select-project-join block is a set of sources (base
/// relations or aggregates), join conditions and selection conjuncts; an
/// aggregate is an input block, a group-by set and a sum.
struct LogicalForm {
    enum class Kind { Relation, Spj, Aggregate };

    Kind kind = Kind::Relation;
    std::string relation;                    // Relation
    std::vector<LogicalFormPtr> sources;     // Spj, sorted by key
    std::vector<JoinCondition> conditions;   // Spj, canonical
    std::vector<Predicate> conjuncts;        // Spj, canonical, sorted, unique
    LogicalFormPtr input;                    // Aggregate
    AttributeSet groupBy;                    // Aggregate
    Aggregate aggregate;                     // Aggregate
    AttributeSet schema;
    std::string key;

    static LogicalFormPtr forRelation(const RelationInfo& rel);
    /// Form of `op` applied to `inputs`. Re-aggregating a finer sum by a
    /// subset of its group-by attributes yields the coarser aggregate of the
    /// original input.
    static LogicalFormPtr apply(const Operator& op, const std::vector<LogicalFormPtr>& inputs);
};

/// Path-independent estimate: sources joined in key order, then the
/// selection, then the aggregate.
Estimate estimateForm(const LogicalForm& form, const Catalog& catalog);

// ---------------------------------------------------------------------------
// Nodes

struct EquivalenceNode {
    EqId id = 0;
    std::string signature;
    std::vector<OpId> childOps;   // operations producing this result
    std::vector<OpId> parentOps;  // operations consuming it
    std::optional<std::string> baseRelation;
    bool pinned = false;
    bool alive = true;
    LogicalFormPtr form;
    Estimate estimate;
    double reuseCostMs = 0;
    double materializationCostMs = 0;

    bool isLeaf() const { return baseRelation.has_value(); }
    const AttributeSet& schema() const { return form->schema; }
    /// Whole blocks occupied when stored.
    double sizeBlocks() const { return std::ceil(estimate.blocks); }
};

struct OperationNode {
    OpId id = 0;
    Operator op;
    std::vector<EqId> inputs;
    EqId output = 0;
    bool derived = false;  // added by subsumption; never rewritten by expansion
    bool alive = true;
    double execCostMs = 0;  // operator alone; leaf inputs charged a scan
};

// ---------------------------------------------------------------------------
// DAG

class QueryDag {
public:
    QueryDag(const Catalog& catalog, CostParams params = {});

    QueryDag(const QueryDag&) = delete;
    QueryDag& operator=(const QueryDag&) = delete;

    const Catalog& catalog() const { return *catalog_; }
    const CostParams& params() const { return params_; }

    /// Adds every subexpression of `q`, reusing nodes whose signature exists,
    /// and registers the root under `queryId`. Throws UsageError on a
    /// duplicate id and SchemaError on an ill-typed tree.
    EqId insertQuery(const QueryTree& q, QueryId queryId);
    /// Unregisters `queryId` and deletes nodes no longer reachable from any
    /// registered root or pinned node.
    void removeQuery(QueryId queryId);

    /// Applies join commutativity, join associativity, select pushdown and
    /// select merging to fixpoint.
    void expand();
    /// Merges two nodes denoting the same result. Returns the survivor.
    EqId unify(EqId a, EqId b);
    /// Adds select-implication, equality-disjunction and group-by-union
    /// derivations between results sharing an input, then re-expands.
    void addSubsumptionDerivations();

    /// Cached nodes stay alive (with their descendants) while pinned.
    void setPinned(EqId id, bool pinned);

    /// Number of registered queries whose root reaches `id`. Recounted on
    /// first use after a mutation.
    std::uint32_t referenceCount(EqId id) const;

    /// Nodes reachable from at least two distinct root nodes, or reachable from two
    /// different inputs of one operation that is itself reachable from a root.
    std::vector<EqId> sharableNodes() const;

    /// Follows unification forwarding. Returns `id` unchanged if it was never absorbed.
    EqId resolve(EqId id) const;
    const EquivalenceNode& node(EqId id) const;
    const OperationNode& op(OpId id) const;
    bool isAlive(EqId id) const { return id < nodes_.size() && nodes_[id].alive; }
    std::optional<EqId> findBySignature(const std::string& signature) const;
    std::optional<OpId> findOperation(const Operator& op, const std::vector<EqId>& inputs) const;

    std::vector<EqId> liveNodes() const;
    std::vector<OpId> liveOps() const;
    std::size_t nodeCount() const { return liveNodeCount_; }
    std::size_t opCount() const { return liveOpCount_; }
    /// Upper bound (exclusive) of ids handed out so far.
    std::size_t nodeIdBound() const { return nodes_.size(); }

    const std::vector<std::pair<QueryId, EqId>>& roots() const { return roots_; }
    std::optional<EqId> rootOf(QueryId queryId) const;

    /// Incremented by every mutation.
    std::uint64_t version() const { return version_; }

    /// Full structural check; throws std::logic_error describing the first violation.
    void checkInvariants() const;
    std::string toDot() const;

private:
    friend class DagExpander;
    friend class SubsumptionPass;

    EqId leafNode(const std::string& relation);
    EqId insertTree(const QueryTree& t);
    EqId getOrCreate(const LogicalFormPtr& form);
    /// Adds `op(inputs)` producing the node of its logical form. Returns the output node.
    EqId addOperation(Operator op, std::vector<EqId> inputs, bool derived);
    /// Adds `op(inputs)` into `output`. Unifies if the operation already
    /// produces a different node. Returns the surviving output.
    EqId addOperationInto(Operator op, std::vector<EqId> inputs, EqId output, bool derived);
    /// Absorbs the larger id into the smaller, cascading into parents that
    /// become identical. No garbage collection.
    EqId mergeNodes(EqId first, EqId second);
    void deleteOperation(OpId id);
    void refreshReferenceCounts() const;
    void collectGarbage();
    void touch() { ++version_; }

    std::optional<OpId> lookupOperation(const Operator& canonicalOp, const std::vector<EqId>& inputs) const;
    void indexOperation(OpId id);
    void unindexOperation(OpId id);

    const Catalog* catalog_;
    CostParams params_;
    std::vector<EquivalenceNode> nodes_;
    std::vector<OperationNode> ops_;
    std::unordered_map<std::string, EqId> signatureIndex_;
    std::unordered_map<std::string, EqId> aliases_;  // signatures of absorbed nodes
    std::unordered_multimap<std::size_t, OpId> opIndex_;  // by operator and input hash
    std::unordered_map<EqId, EqId> forward_;
    std::vector<std::pair<QueryId, EqId>> roots_;
    std::vector<OpId> pendingExpansion_;
    std::vector<std::pair<OpId, OpId>> pendingPairs_;  // (parent op, new child op of its input)
    std::vector<OpId> pendingSubsumption_;  // new non-derived select and group-by ops
    std::unordered_map<std::string, std::uint32_t> predicateIds_;
    std::vector<ImplicationForm> predicateForms_;  // by predicate id
    struct PredicateMasks {
        std::uint64_t has = 0;    // attributes p constrains at all
        std::uint64_t needs = 0;  // attributes q restricts; p must constrain them to imply q
        bool exact = true;        // false once attribute bits run out
    };
    std::vector<PredicateMasks> predicateMasks_;  // by predicate id
    std::unordered_map<std::string, unsigned> attributeBits_;
    std::vector<std::uint32_t> opPredicateIds_;  // by OpId, 0 = not interned yet, else id + 1
    std::unordered_map<std::uint64_t, bool> impliesMemo_;  // (predicate id, predicate id)
    std::vector<EqId> liveList_;        // superset of live node ids
    std::vector<EqId> createdSinceGc_;
    bool gcDirty_ = false;              // something may have become unreachable
    mutable std::vector<std::uint32_t> refCounts_;
    mutable std::uint64_t refCountsVersion_ = ~std::uint64_t{0};
    std::size_t liveNodeCount_ = 0;
    std::size_t liveOpCount_ = 0;
    std::uint64_t version_ = 0;
};

}  // namespace qcache
