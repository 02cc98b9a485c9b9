#include "support.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <string>

namespace qcache::testing {

namespace {

std::string rel(int i) { return "R" + std::to_string(i); }
std::string attr(int i, const char* suffix) { return "r" + std::to_string(i) + "_" + suffix; }

}  // namespace

Catalog chainCatalog(int n) {
    std::vector<RelationInfo> rels;
    for (int i = 0; i < n; ++i) {
        const std::int64_t rows = 2000 * (i + 1) * (i + 1);
        RelationInfo r{rel(i), rows, 40 + 8 * i, {}, attr(i, "k")};
        r.attributes.push_back({attr(i, "k"), rows, 1, rows, 4});
        r.attributes.push_back({attr(i, "a"), 20, 0, 19, 4});
        r.attributes.push_back({attr(i, "b"), 100, 0, 99, 4});
        rels.push_back(std::move(r));
    }
    return Catalog(std::move(rels), 4096);
}

QueryTreePtr chainJoin(int n) {
    QueryTreePtr t = scan(rel(0));
    for (int i = 1; i < n; ++i) t = join(JoinCondition{attr(i - 1, "a"), attr(i, "k")}, t, scan(rel(i)));
    return t;
}

Catalog employeeCatalog(std::int64_t rows) {
    RelationInfo e{"E", rows, 64, {}, std::nullopt};
    e.attributes.push_back({"A", 100, 0, 99, 4});
    e.attributes.push_back({"dno", 50, 1, 50, 4});
    e.attributes.push_back({"age", 45, 20, 64, 4});
    e.attributes.push_back({"sal", 1000, 1, 1000, 4});
    RelationInfo d{"D", 50, 32, {{"d_dno", 50, 1, 50, 4}, {"d_floor", 10, 1, 10, 4}}, "d_dno"};
    return Catalog({e, d}, 4096);
}

// ---------------------------------------------------------------------------

std::map<std::uint32_t, std::set<std::pair<std::uint32_t, std::uint32_t>>> orderedPartitions(int n) {
    std::map<std::uint32_t, std::set<std::pair<std::uint32_t, std::uint32_t>>> out;
    const std::uint32_t all = (1u << n) - 1;
    for (std::uint32_t s = 1; s <= all; ++s) {
        std::vector<int> members;
        for (int i = 0; i < n; ++i)
            if (s & (1u << i)) members.push_back(i);
        if (members.size() < 2) continue;
        // Assign each member to the left or right side; both sides non-empty.
        const std::uint32_t ways = 1u << members.size();
        for (std::uint32_t pick = 1; pick + 1 < ways; ++pick) {
            std::uint32_t left = 0;
            for (std::size_t k = 0; k < members.size(); ++k)
                if (pick & (1u << k)) left |= 1u << members[k];
            out[s].emplace(left, s & ~left);
        }
    }
    return out;
}

std::uint64_t orderedPartitionCount(int n) {
    std::uint64_t total = 0;
    for (const auto& [s, splits] : orderedPartitions(n)) total += splits.size();
    return total;
}

std::uint32_t relationMask(const QueryDag& dag, EqId id) {
    std::function<std::uint32_t(const LogicalForm&)> mask = [&](const LogicalForm& f) -> std::uint32_t {
        switch (f.kind) {
            case LogicalForm::Kind::Relation: return 1u << std::stoi(f.relation.substr(1));
            case LogicalForm::Kind::Spj: {
                std::uint32_t m = 0;
                for (const auto& s : f.sources) m |= mask(*s);
                return m;
            }
            case LogicalForm::Kind::Aggregate: return mask(*f.input);
        }
        return 0;
    };
    return mask(*dag.node(id).form);
}

// ---------------------------------------------------------------------------

std::set<PlanSummary> enumeratePlans(const QueryDag& dag, EqId root, const MaterializedSet& m) {
    std::map<EqId, std::set<PlanSummary>> memo;
    std::function<const std::set<PlanSummary>&(EqId)> plans = [&](EqId e) -> const std::set<PlanSummary>& {
        if (auto it = memo.find(e); it != memo.end()) return it->second;
        std::set<PlanSummary> out;
        const auto& n = dag.node(e);
        if (n.isLeaf()) {
            out.insert({0, false, false});
        } else {
            for (OpId o : n.childOps) {
                const auto& op = dag.op(o);
                std::vector<PlanSummary> partial{{op.execCostMs, op.derived, false}};
                for (EqId in : op.inputs) {
                    std::vector<PlanSummary> next;
                    for (const auto& p : partial)
                        for (const auto& q : plans(in))
                            next.push_back({p.cost + q.cost, p.usesDerived || q.usesDerived, p.usesReuse || q.usesReuse});
                    partial = std::move(next);
                }
                out.insert(partial.begin(), partial.end());
            }
            if (m.contains(e)) out.insert({n.reuseCostMs, false, true});
        }
        return memo.emplace(e, std::move(out)).first->second;
    };
    return plans(root);
}

double bruteForceCost(const QueryDag& dag, EqId root, const MaterializedSet& m) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : enumeratePlans(dag, root, m)) best = std::min(best, p.cost);
    return best;
}

double bruteForceCost(const QueryDag& dag, EqId root, const MaterializedSet& m, bool derived) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : enumeratePlans(dag, root, m))
        if (p.usesDerived == derived) best = std::min(best, p.cost);
    return best;
}

// ---------------------------------------------------------------------------

std::vector<OracleStep> greedyOracle(const QueryDag& dag, std::span<const WeightedQuery> workload,
                                     const std::vector<GreedyCandidate>& candidates, double capacityBlocks) {
    std::map<EqId, Acquisition> pool;
    for (const auto& c : candidates) pool.emplace(c.node, c.how);
    std::vector<OracleStep> out;
    MaterializedSet chosen;
    double used = 0;
    while (true) {
        bool found = false;
        OracleStep best;
        for (const auto& [id, how] : pool) {
            const double size = dag.node(id).sizeBlocks();
            if (chosen.contains(id) || used + size > capacityBlocks) continue;
            const double b = benefit(dag, workload, id, chosen, how);
            double d;
            if (size > 0)
                d = b / size;
            else
                d = b > 0 ? std::numeric_limits<double>::infinity() : (b < 0 ? -std::numeric_limits<double>::infinity() : 0);
            // Ascending id order, so a strict comparison keeps the lowest id on ties.
            if (!found || d > best.density) {
                best = {id, b, d};
                found = true;
            }
        }
        if (!found || best.benefit < 0) break;
        chosen.insert(best.node);
        used += dag.node(best.node).sizeBlocks();
        out.push_back(best);
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

std::set<EqId> reachFrom(const QueryDag& dag, EqId start) {
    std::set<EqId> seen{start};
    std::vector<EqId> todo{start};
    while (!todo.empty()) {
        const EqId e = todo.back();
        todo.pop_back();
        for (OpId o : dag.node(e).childOps)
            for (EqId in : dag.op(o).inputs)
                if (seen.insert(in).second) todo.push_back(in);
    }
    return seen;
}

}  // namespace

std::set<EqId> reachableNodes(const QueryDag& dag) {
    std::set<EqId> out;
    std::vector<EqId> starts;
    for (const auto& [q, root] : dag.roots()) starts.push_back(root);
    for (EqId id : dag.liveNodes())
        if (dag.node(id).pinned) starts.push_back(id);
    for (EqId s : starts) {
        const auto r = reachFrom(dag, s);
        out.insert(r.begin(), r.end());
    }
    return out;
}

std::set<EqId> sharableOracle(const QueryDag& dag) {
    std::set<EqId> roots;
    for (const auto& [q, root] : dag.roots()) roots.insert(root);
    std::map<EqId, int> hits;
    std::set<EqId> reachable;
    for (EqId r : roots)
        for (EqId e : reachFrom(dag, r)) {
            ++hits[e];
            reachable.insert(e);
        }
    std::set<EqId> out;
    for (const auto& [e, h] : hits)
        if (h >= 2) out.insert(e);
    for (EqId e : reachable)
        for (OpId o : dag.node(e).childOps) {
            const auto& ins = dag.op(o).inputs;
            for (std::size_t a = 0; a < ins.size(); ++a)
                for (std::size_t b = a + 1; b < ins.size(); ++b) {
                    const auto ra = reachFrom(dag, ins[a]);
                    for (EqId x : reachFrom(dag, ins[b]))
                        if (ra.count(x)) out.insert(x);
                }
        }
    return out;
}

// ---------------------------------------------------------------------------

Predicate randomPredicate(std::mt19937_64& rng, const std::vector<std::string>& attrs, int depth) {
    std::uniform_int_distribution<int> kind(0, depth > 0 ? 2 : 0);
    const int k = kind(rng);
    if (k == 0) {
        static constexpr Comparator ops[] = {Comparator::Eq, Comparator::Lt, Comparator::Le, Comparator::Gt,
                                             Comparator::Ge};
        const auto& a = attrs[std::uniform_int_distribution<std::size_t>(0, attrs.size() - 1)(rng)];
        return Predicate::atom(a, ops[std::uniform_int_distribution<int>(0, 4)(rng)],
                               std::uniform_int_distribution<std::int64_t>(0, 19)(rng));
    }
    std::vector<Predicate> children;
    const int count = std::uniform_int_distribution<int>(2, 3)(rng);
    for (int i = 0; i < count; ++i) children.push_back(randomPredicate(rng, attrs, depth - 1));
    return k == 1 ? Predicate::conjunction(std::move(children)) : Predicate::disjunction(std::move(children));
}

QueryTreePtr randomChainQuery(std::mt19937_64& rng, int maxRelations, int maxSelects, bool allowGroupBy) {
    const int len = std::uniform_int_distribution<int>(1, maxRelations)(rng);
    const int start = std::uniform_int_distribution<int>(0, 5 - len)(rng);
    QueryTreePtr t = scan(rel(start));
    for (int i = start + 1; i < start + len; ++i)
        t = join(JoinCondition{attr(i - 1, "a"), attr(i, "k")}, t, scan(rel(i)));

    const int selects = std::uniform_int_distribution<int>(0, maxSelects)(rng);
    if (selects > 0) {
        std::vector<Predicate> atoms;
        for (int s = 0; s < selects; ++s) {
            const int r = std::uniform_int_distribution<int>(start, start + len - 1)(rng);
            const bool useA = std::bernoulli_distribution(0.5)(rng);
            const auto op = std::bernoulli_distribution(0.5)(rng) ? Comparator::Eq : Comparator::Lt;
            atoms.push_back(Predicate::atom(attr(r, useA ? "a" : "b"), op,
                                            std::uniform_int_distribution<std::int64_t>(1, 15)(rng)));
        }
        t = select(atoms.size() == 1 ? atoms.front() : Predicate::conjunction(std::move(atoms)), t);
    }
    if (allowGroupBy && std::bernoulli_distribution(0.5)(rng)) {
        AttributeSet g;
        for (int i = start; i < start + len; ++i)
            if (std::bernoulli_distribution(0.5)(rng)) g.insert(attr(i, "b"));
        t = groupAgg(g, Aggregate::sum(attr(start, "a")), t);
    }
    return t;
}

MaterializedSet randomMaterialized(std::mt19937_64& rng, const QueryDag& dag, std::size_t k) {
    std::vector<EqId> pool;
    for (EqId id : dag.liveNodes())
        if (!dag.node(id).isLeaf()) pool.push_back(id);
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::size_t take = std::min(pool.size(), std::uniform_int_distribution<std::size_t>(0, k)(rng));
    return MaterializedSet(std::vector<EqId>(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take)));
}

}  // namespace qcache::testing
