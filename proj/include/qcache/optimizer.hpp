// Cache-aware best-plan search over the DAG and workload benefit evaluation.
#pragma once

#include "qcache/dag.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace qcache {

/// Set of equivalence nodes treated as stored results.
class MaterializedSet {
public:
    MaterializedSet() = default;
    MaterializedSet(std::initializer_list<EqId> ids);
    explicit MaterializedSet(std::vector<EqId> ids);

    bool contains(EqId id) const;
    void insert(EqId id);
    void erase(EqId id);
    bool empty() const { return ids_.empty(); }
    std::size_t size() const { return ids_.size(); }
    const std::vector<EqId>& ids() const { return ids_; }
    auto begin() const { return ids_.begin(); }
    auto end() const { return ids_.end(); }
    MaterializedSet with(EqId id) const;

    friend bool operator==(const MaterializedSet&, const MaterializedSet&) = default;

private:
    std::vector<EqId> ids_;  // sorted, unique
};

struct PlanStep {
    enum class Kind { Leaf, Reuse, Compute };
    EqId node = 0;
    Kind kind = Kind::Compute;
    OpId op = 0;      // Compute only
    double cost = 0;  // cost charged for obtaining this node in the plan
};

struct Plan {
    EqId root = 0;
    double cost = 0;
    std::map<EqId, PlanStep> steps;

    /// Non-leaf nodes used by the plan, whether computed or reused.
    std::vector<EqId> resultNodes() const;
    /// Indented rendering, one node per line.
    std::string toString(const QueryDag& dag) const;
};

/// Evaluates cost(e) = min over child operations of exec(o) + sum C(input),
/// where C(e) = min(cost(e), reusecost(e)) for e in M and cost(e) otherwise.
/// Leaves cost 0; their scan is part of exec(o). Ties go to the lowest op id.
class PlanCostEvaluator {
public:
    PlanCostEvaluator(const QueryDag& dag, const MaterializedSet& m, bool memoize = true);

    /// Cost of computing `e` without reusing `e` itself.
    double computeCost(EqId e);
    /// C(e): cost of obtaining `e` given the materialized set.
    double obtainCost(EqId e);
    OpId bestOp(EqId e);

    std::uint64_t evaluations() const { return evaluations_; }

private:
    std::pair<double, OpId> evaluate(EqId e);

    const QueryDag& dag_;
    const MaterializedSet& m_;
    bool memoize_;
    std::vector<double> cost_;
    std::vector<OpId> best_;
    std::vector<char> known_;
    std::uint64_t evaluations_ = 0;
};

/// Minimum-cost plan for `root`. Throws UsageError for a dead root.
Plan optimize(const QueryDag& dag, EqId root, const MaterializedSet& m, bool memoize = true);

struct WeightedQuery {
    EqId root = 0;
    double weight = 1;
};

/// sum over queries of optimize(root, S).cost * weight, in the given order.
double workloadCost(const QueryDag& dag, std::span<const WeightedQuery> workload, const MaterializedSet& s);

/// How a candidate would be obtained if selected.
enum class Acquisition {
    Compute,   // charged cost(x, S)
    OnPlan,    // produced by the executing plan; charged its materialization cost
    Resident,  // already stored; free
};

double acquisitionCost(const QueryDag& dag, EqId x, const MaterializedSet& s, Acquisition how);

/// cost(R, S) - (cost(R, S + {x}) + acquisition cost of x).
double benefit(const QueryDag& dag, std::span<const WeightedQuery> workload, EqId x, const MaterializedSet& s,
               Acquisition how);

/// Benefit evaluation that keeps per-node best costs across calls and, when
/// the materialized set changes, re-derives only strict ancestors of nodes
/// whose membership changed. Results are bit-identical to the free functions.
/// The DAG must not change during the session's lifetime.
class BenefitSession {
public:
    BenefitSession(const QueryDag& dag, std::vector<WeightedQuery> workload);

    double workloadCost(const MaterializedSet& s);
    double nodeCost(EqId x, const MaterializedSet& s);
    double benefit(EqId x, const MaterializedSet& s, Acquisition how);

    /// Session epoch at which `e` was last (re)computed; 0 if never.
    std::uint64_t computedAt(EqId e) const;
    std::uint64_t recomputations() const { return recomputations_; }
    const std::vector<WeightedQuery>& workload() const { return workload_; }
    const QueryDag& dag() const { return dag_; }

private:
    void switchTo(const MaterializedSet& s);
    void invalidateAncestors(EqId e);
    double computeCost(EqId e);
    double obtainCost(EqId e);
    void checkVersion() const;

    const QueryDag& dag_;
    std::vector<WeightedQuery> workload_;
    std::uint64_t dagVersion_;
    MaterializedSet current_;
    std::vector<double> cost_;
    std::vector<std::uint64_t> stamp_;
    std::vector<char> valid_;
    std::uint64_t epoch_ = 0;
    std::uint64_t recomputations_ = 0;
};

}  // namespace qcache
