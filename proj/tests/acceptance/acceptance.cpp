// Runs the seven acceptance criteria and prints one PASS/FAIL line each.
// Exit status is non-zero if any criterion fails.
#include "support.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstring>
#include <functional>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

using namespace qcache;
using namespace qcache::testing;

namespace {

using Clock = std::chrono::steady_clock;

bool sameBits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

double secondsSince(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Verdict {
    bool ok = true;
    std::string detail;
};

struct RandomDag {
    Catalog catalog = chainCatalog();
    std::unique_ptr<QueryDag> dag;
    std::vector<EqId> roots;

    RandomDag(std::mt19937_64& rng, int queries) {
        dag = std::make_unique<QueryDag>(catalog);
        for (int q = 0; q < queries; ++q)
            roots.push_back(dag->insertQuery(*randomChainQuery(rng, 4, 2), static_cast<QueryId>(q)));
        dag->expand();
        dag->addSubsumptionDerivations();
        for (auto& r : roots) r = dag->resolve(r);
    }
};

// ---------------------------------------------------------------------------

Verdict dagExpansion() {
    Verdict v;
    std::ostringstream d;
    for (int n = 2; n <= 5; ++n) {
        const Catalog c = chainCatalog(n);
        QueryDag dag(c);
        dag.insertQuery(*chainJoin(n), 0);
        dag.expand();
        std::size_t joins = 0;
        for (OpId o : dag.liveOps())
            if (std::holds_alternative<JoinOp>(dag.op(o).op)) ++joins;
        const std::size_t wantNodes = (std::size_t{1} << n) - 1;
        const auto wantOps = orderedPartitionCount(n);
        d << "n=" << n << ": " << dag.nodeCount() << "/" << wantNodes << " nodes, " << joins << "/" << wantOps
          << " ops; ";
        if (dag.nodeCount() != wantNodes || joins != wantOps) v.ok = false;
    }
    v.detail = d.str();
    return v;
}

Verdict optimizerOracle() {
    std::mt19937_64 rng(1001);
    int roots = 0, mismatches = 0;
    for (int i = 0; i < 200; ++i) {
        RandomDag d(rng, std::uniform_int_distribution<int>(1, 3)(rng));
        const auto m = randomMaterialized(rng, *d.dag, 3);
        for (EqId r : d.roots) {
            ++roots;
            if (!sameBits(optimize(*d.dag, r, m).cost, bruteForceCost(*d.dag, r, m))) ++mismatches;
        }
    }
    return {mismatches == 0, "200 DAGs, " + std::to_string(roots) + " roots, " + std::to_string(mismatches) +
                                 " mismatches"};
}

Verdict sessionOracle() {
    std::mt19937_64 rng(1002);
    int queries = 0, mismatches = 0;
    while (queries < 1000) {
        RandomDag d(rng, 3);
        std::vector<WeightedQuery> w;
        for (EqId r : d.roots) w.push_back({r, std::uniform_real_distribution<double>(0.1, 1.0)(rng)});
        BenefitSession session(*d.dag, w);
        std::vector<EqId> pool;
        for (EqId e : d.dag->liveNodes())
            if (!d.dag->node(e).isLeaf()) pool.push_back(e);
        for (int k = 0; k < 25 && queries < 1000; ++k, ++queries) {
            const auto s = randomMaterialized(rng, *d.dag, 3);
            const EqId x = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
            const auto how = static_cast<Acquisition>(std::uniform_int_distribution<int>(0, 2)(rng));
            if (!sameBits(session.benefit(x, s, how), benefit(*d.dag, w, x, s, how))) ++mismatches;
        }
    }
    return {mismatches == 0, std::to_string(queries) + " benefit queries, " + std::to_string(mismatches) + " mismatches"};
}

Verdict greedyOracleCheck() {
    std::mt19937_64 rng(1003);
    const Catalog c = chainCatalog();
    int rounds = 0, accepted = 0, wrongStep = 0, worseObjective = 0;
    for (; rounds < 200; ++rounds) {
        QueryDag dag(c);
        for (int q = 0; q < 3; ++q) dag.insertQuery(*randomChainQuery(rng, 3, 2), q);
        dag.expand();
        dag.addSubsumptionDerivations();
        RepresentativeSet repset(3, 0.9);
        for (QueryId q : {0, 1, 2}) repset.push(q);
        const auto workload = repset.workload(dag);

        std::vector<GreedyCandidate> candidates;
        for (EqId id : randomMaterialized(rng, dag, 8))
            candidates.push_back({id, static_cast<Acquisition>(std::uniform_int_distribution<int>(0, 2)(rng))});
        double total = 0;
        for (const auto& cand : candidates) total += dag.node(cand.node).sizeBlocks();
        const double capacity = std::uniform_real_distribution<double>(0, 1)(rng) * total;

        BenefitSession session(dag, workload);
        const auto got = greedySelect(session, candidates, capacity, false);
        const auto want = greedyOracle(dag, workload, candidates, capacity);
        accepted += static_cast<int>(got.steps.size());
        if (got.steps.size() != want.size()) {
            ++wrongStep;
        } else {
            for (std::size_t i = 0; i < want.size(); ++i)
                if (got.steps[i].node != want[i].node || !sameBits(got.steps[i].benefit, want[i].benefit)) ++wrongStep;
        }

        MaterializedSet s;
        double objective = 0;
        for (EqId id : got.selected) {
            const auto how = std::find_if(candidates.begin(), candidates.end(),
                                          [&](const GreedyCandidate& g) { return g.node == id; })->how;
            objective += acquisitionCost(dag, id, s, how);
            s.insert(id);
        }
        objective += workloadCost(dag, workload, s);
        if (objective > workloadCost(dag, workload, {}) * (1 + 1e-12)) ++worseObjective;
    }
    return {wrongStep == 0 && worseObjective == 0,
            std::to_string(rounds) + " repsets, " + std::to_string(accepted) + " acceptances, " +
                std::to_string(wrongStep) + " non-maximal steps, " + std::to_string(worseObjective) +
                " objectives above empty"};
}

Verdict subsumptionSuite() {
    struct Family {
        const char* name;
        std::vector<QueryTreePtr> queries;
        std::function<EqId(const QueryDag&, const std::vector<EqId>&)> derivedNode;
    };
    const auto A = [](Comparator op, std::int64_t v) { return Predicate::atom("A", op, v); };
    std::vector<Family> families;
    families.push_back({"range", {select(A(Comparator::Lt, 5), scan("E")), select(A(Comparator::Lt, 10), scan("E"))},
                        [](const QueryDag&, const std::vector<EqId>& r) { return r[1]; }});
    families.push_back({"equality disjunction",
                        {select(A(Comparator::Eq, 5), scan("E")), select(A(Comparator::Eq, 10), scan("E"))},
                        [&](const QueryDag& dag, const std::vector<EqId>&) {
                            const auto both = canonicalize(
                                Predicate::disjunction({A(Comparator::Eq, 5), A(Comparator::Eq, 10)}));
                            return dag.op(*dag.findOperation(SelectOp{both}, {*dag.findBySignature("E")})).output;
                        }});
    families.push_back({"group-by union",
                        {groupAgg({"dno"}, Aggregate::sum("sal"), scan("E")),
                         groupAgg({"age"}, Aggregate::sum("sal"), scan("E"))},
                        [](const QueryDag& dag, const std::vector<EqId>&) {
                            return dag.op(*dag.findOperation(GroupAggOp{{"age", "dno"}, Aggregate::sum("sal")},
                                                             {*dag.findBySignature("E")}))
                                .output;
                        }});

    int cases = 0, through = 0, direct = 0, wrong = 0;
    std::ostringstream d;
    for (const auto& f : families) {
        for (std::int64_t rows : {2000, 100000, 2000000}) {
            const Catalog c = employeeCatalog(rows);
            QueryDag dag(c);
            std::vector<EqId> roots;
            for (std::size_t i = 0; i < f.queries.size(); ++i) roots.push_back(dag.insertQuery(*f.queries[i], i));
            dag.expand();
            dag.addSubsumptionDerivations();
            const EqId derived = f.derivedNode(dag, roots);
            for (const MaterializedSet& m : {MaterializedSet{}, MaterializedSet{derived}}) {
                for (EqId r : roots) {
                    if (r == derived) continue;
                    ++cases;
                    const Plan p = optimize(dag, r, m);
                    bool usesDerived = false;
                    for (const auto& [id, step] : p.steps)
                        if (step.kind == PlanStep::Kind::Compute && dag.op(step.op).derived) usesDerived = true;
                    const double via = bruteForceCost(dag, r, m, true);
                    const double without = bruteForceCost(dag, r, m, false);
                    const bool cheaper = via < without;
                    if (usesDerived != cheaper || !sameBits(p.cost, std::min(via, without))) {
                        ++wrong;
                        d << f.name << " rows=" << rows << " |M|=" << m.size() << " mismatch; ";
                    }
                    (usesDerived ? through : direct)++;
                }
            }
        }
    }
    d << cases << " cases, " << through << " through the derived node, " << direct << " direct, " << wrong
      << " disagreements";
    return {wrong == 0 && through > 0 && direct > 0, d.str()};
}

// ---------------------------------------------------------------------------

std::string summaryText(const std::vector<ExperimentResult>& r) {
    std::ostringstream out;
    writeSummaryCsv(out, r);
    return out.str();
}

std::string detailText(const ExperimentResult& r) {
    std::ostringstream out;
    writeDetailCsv(out, r);
    return out.str();
}

struct CellKey {
    std::uint64_t seed;
    QueryKind kind;
    Distribution dist;
    double fraction;
    auto operator<=>(const CellKey&) const = default;
};

Verdict gridOrdering(const std::vector<ExperimentResult>& results, double seconds) {
    std::map<CellKey, std::map<PolicyKind, double>> cells;
    for (const auto& r : results) {
        const auto& c = r.config;
        cells[{c.workload.seed, c.workload.kind, c.workload.distribution, c.cacheFraction}][c.policy] =
            r.totalMeasuredMs;
    }

    int orderViolations = 0;
    std::map<std::uint64_t, bool> bHolds, cHolds;
    std::ostringstream d;
    for (const auto& [key, t] : cells) {
        bHolds.emplace(key.seed, true);
        cHolds.emplace(key.seed, true);
        const double inf = t.at(PolicyKind::InfCache), none = t.at(PolicyKind::NoCache);
        for (const auto& [p, v] : t)
            if (v < inf || v > none) {
                ++orderViolations;
                d << "(a) " << toString(p) << " s" << key.seed << " " << toString(key.kind) << "/"
                  << toString(key.dist) << " f" << key.fraction << "; ";
            }

        // Unique best among the realizable policies.
        PolicyKind best = PolicyKind::NoCache;
        int atBest = 0;
        for (const auto& [p, v] : t) {
            if (p == PolicyKind::InfCache) continue;
            if (atBest == 0 || v < t.at(best)) {
                best = p;
                atBest = 1;
            } else if (v == t.at(best)) {
                ++atBest;
            }
        }
        if (best == PolicyKind::LcsLru && atBest == 1) {
            cHolds[key.seed] = false;
            d << "(c) LcsLru best at s" << key.seed << " " << toString(key.kind) << "/" << toString(key.dist) << " f"
              << key.fraction << "; ";
        }

        if (key.kind == QueryKind::CubePoints && key.fraction == 0.05) {
            const double inc = t.at(PolicyKind::IncNoFullCache);
            const double rival =
                std::min({t.at(PolicyKind::DynaMat), t.at(PolicyKind::Watchman), t.at(PolicyKind::LcsLru)});
            if (!(inc < rival)) {
                bHolds[key.seed] = false;
                d << "(b) s" << key.seed << " " << toString(key.dist) << ": NoFullCache " << std::fixed
                  << std::setprecision(0) << inc << " vs best baseline " << rival << std::defaultfloat << "; ";
            }
        }
    }
    const auto count = [](const std::map<std::uint64_t, bool>& m) {
        return static_cast<int>(std::count_if(m.begin(), m.end(), [](const auto& e) { return e.second; }));
    };
    const int b = count(bHolds), c = count(cHolds), seeds = static_cast<int>(bHolds.size());
    const bool timeOk = seconds < 15 * 60;
    d << "(a) " << orderViolations << " violations; (b) " << b << "/" << seeds << " seeds; (c) " << c << "/" << seeds
      << " seeds; grid " << std::fixed << std::setprecision(1) << seconds << " s (limit 900 s)";
    return {orderViolations == 0 && b >= 4 && c >= 4 && timeOk, d.str()};
}

Verdict gridReplay(const std::vector<ExperimentResult>& first, const std::vector<ExperimentResult>& second) {
    int differing = 0;
    std::size_t records = 0, overCapacity = 0;
    if (summaryText(first) != summaryText(second)) ++differing;
    for (std::size_t i = 0; i < first.size(); ++i)
        if (i >= second.size() || detailText(first[i]) != detailText(second[i])) ++differing;
    for (const auto* run : {&first, &second})
        for (const auto& r : *run) {
            if (r.config.policy == PolicyKind::InfCache) continue;
            for (const auto& q : r.perQuery) {
                ++records;
                if (q.occupancyBlocks > r.capacityBlocks) ++overCapacity;
            }
        }
    return {differing == 0 && overCapacity == 0 && records > 0,
            std::to_string(first.size() + 1) + " CSV files compared, " + std::to_string(differing) + " differ; " +
                std::to_string(records) + " per-query capacity checks, " + std::to_string(overCapacity) + " over"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    unsigned threads = 0;
    std::vector<int> only;
    std::string outDir;
    app.add_option("--threads", threads, "Grid worker threads (0 = hardware concurrency)");
    app.add_option("--only", only, "Run only these criteria")->delimiter(',')->check(CLI::Range(1, 7));
    app.add_option("--grid-out", outDir, "Also write the grid CSVs here");
    CLI11_PARSE(app, argc, argv);

    auto wanted = [&](int k) { return only.empty() || std::find(only.begin(), only.end(), k) != only.end(); };
    bool allOk = true;
    auto report = [&](int k, const char* what, double limitSeconds, const std::function<Verdict()>& run) {
        if (!wanted(k)) return;
        const auto t0 = Clock::now();
        Verdict v;
        try {
            v = run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double s = secondsSince(t0);
        if (s >= limitSeconds) {
            v.ok = false;
            v.detail += "; over the " + std::to_string(static_cast<int>(limitSeconds)) + " s limit";
        }
        allOk = allOk && v.ok;
        std::cout << (v.ok ? "PASS" : "FAIL") << " criterion " << k << " (" << what << ", " << std::fixed
                  << std::setprecision(2) << s << " s): " << v.detail << std::endl;
    };

    report(1, "DAG expansion", 1, dagExpansion);
    report(2, "optimizer vs brute force", 30, optimizerOracle);
    report(3, "benefit session vs recomputation", 60, sessionOracle);
    report(4, "greedy step oracle", 30, greedyOracleCheck);
    report(5, "subsumption suite", 5, subsumptionSuite);

    if (wanted(6) || wanted(7)) {
        const auto configs = expandGrid(GridSpec{});
        const GridOptions opts{threads, true};
        std::vector<ExperimentResult> first;
        double gridSeconds = 0;
        std::string gridError;
        try {
            const auto t0 = Clock::now();
            first = runGrid(configs, opts);
            gridSeconds = secondsSince(t0);
            if (!outDir.empty()) writeGridOutput(outDir, first);
        } catch (const std::exception& e) {
            gridError = e.what();
        }
        const unsigned used = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
        std::cout << "grid: " << configs.size() << " configurations on " << used << " thread(s), " << std::fixed
                  << std::setprecision(1) << gridSeconds << " s" << std::endl;
        report(6, "grid ordering", 1e9, [&]() -> Verdict {
            if (!gridError.empty()) return {false, "grid failed: " + gridError};
            return gridOrdering(first, gridSeconds);
        });
        report(7, "grid replay", 1e9, [&]() -> Verdict {
            if (!gridError.empty()) return {false, "grid failed: " + gridError};
            return gridReplay(first, runGrid(configs, opts));
        });
    }
    return allOk ? 0 : 1;
}
