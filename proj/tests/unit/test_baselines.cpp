#include "support.hpp"

#include <doctest.h>

using namespace qcache;
using namespace qcache::testing;

namespace {

double freshCost(const Catalog& c, const QueryTree& q) {
    QueryDag dag(c);
    const EqId root = dag.insertQuery(q, 0);
    dag.expand();
    dag.addSubsumptionDerivations();
    return optimize(dag, dag.resolve(root), {}).cost;
}

QueryTreePtr employeeRange(std::int64_t below) { return select(Predicate::atom("A", Comparator::Lt, below), scan("E")); }

}  // namespace

TEST_CASE("no-cache policy is stateless") {
    const Catalog c = buildStarCatalog(0.01);
    NoCachePolicy policy(c, {});
    const QueryGenerator gen(WorkloadSpec{}, c);
    for (std::size_t i = 0; i < 15; ++i) {
        const auto q = gen.queryAt(i);
        const auto out = policy.onQuery(*q);
        CHECK(out.planCostMs == freshCost(c, *q));
        CHECK(out.admitted.empty());
        CHECK(out.materializationCostMs == 0);
    }
    CHECK(policy.capacityBlocks() == 0);
}

TEST_CASE("unbounded cache never costs more than no cache") {
    const Catalog c = buildStarCatalog(0.01);
    InfCachePolicy inf(c, {});
    WorkloadSpec w;
    w.distribution = Distribution::Zipf;
    const QueryGenerator gen(w, c);
    for (std::size_t i = 0; i < 40; ++i) {
        const auto q = gen.queryAt(i);
        const auto out = inf.onQuery(*q);
        const double none = freshCost(c, *q);
        if (i == 0) CHECK(out.planCostMs == none);
        CHECK(out.planCostMs <= none);
        CHECK(out.materializationCostMs == 0);
    }
    const auto again = inf.onQuery(*gen.queryAt(3));
    const EqId root = *inf.dag().rootOf(40);
    CHECK(again.planCostMs == inf.dag().node(root).reuseCostMs);
}

TEST_CASE("rate of use") {
    ResultStats one;
    one.admittedAt = 1;
    one.recordAccess(1);
    CHECK(one.rateOfUse(10) == doctest::Approx(0.1));

    ResultStats many;
    for (std::uint64_t t = 0; t < 12; ++t) many.recordAccess(10 * t);
    CHECK(many.lastAccesses.size() == 10);
    CHECK(many.accessCount == 12);
    CHECK(many.rateOfUse(120) == doctest::Approx(0.1));
    CHECK(ResultStats{}.rateOfUse(5) == 0);
}

TEST_CASE("access-count metric decides replacement") {
    const Catalog c = employeeCatalog();
    // Capacity holds exactly the wide range result.
    QueryDag probe(c);
    const EqId wide = probe.insertQuery(*employeeRange(50), 0);
    const EqId narrow = probe.insertQuery(*employeeRange(10), 1);
    const double capacity = probe.node(wide).sizeBlocks();
    REQUIRE(probe.node(narrow).sizeBlocks() * 4 < capacity);

    for (int repeats : {2, 6}) {
        DynaMatPolicy policy(c, {}, capacity);
        for (int i = 0; i < repeats; ++i) policy.onQuery(*employeeRange(50));
        REQUIRE(policy.cache().entries().size() == 1);
        const EqId wideId = policy.cache().entries().front().node;
        const auto& s = policy.stats().at(toString(*employeeRange(50)));
        CHECK(s.accessCount == static_cast<std::uint64_t>(repeats));
        CHECK(policy.metric(wideId, repeats) ==
              doctest::Approx(repeats * s.computeCostMs / policy.cache().entry(wideId).sizeBlocks));

        const auto out = policy.onQuery(*employeeRange(10));
        if (repeats == 2) {
            CHECK(out.evicted == std::vector<EqId>{wideId});
            CHECK(out.admitted.size() == 1);
        } else {
            CHECK(out.evicted.empty());
            CHECK(out.admitted.empty());
            CHECK(policy.cache().contains(wideId));
        }
        CHECK_NOTHROW(policy.checkInvariants());
    }
}

TEST_CASE("metric policies cache final results only") {
    const Catalog c = buildStarCatalog(0.01);
    const QueryGenerator gen(WorkloadSpec{}, c);
    DynaMatPolicy dynamat(c, {}, 131);
    WatchmanPolicy watchman(c, {}, 131);
    for (std::size_t i = 0; i < 25; ++i) {
        const auto q = gen.queryAt(i);
        for (MetricPolicy* p : {static_cast<MetricPolicy*>(&dynamat), static_cast<MetricPolicy*>(&watchman)}) {
            const auto out = p->onQuery(*q);
            CHECK(out.admitted.size() <= 1);
            CHECK(out.occupancyBlocks <= 131);
            CHECK_NOTHROW(p->checkInvariants());
        }
    }
}

TEST_CASE("cached aggregates answer coarser group-bys") {
    const Catalog c = employeeCatalog();
    LcsLruPolicy policy(c, {}, 10000);
    const auto fine = groupAgg({"age", "dno"}, Aggregate::sum("sal"), scan("E"));
    const auto coarse = groupAgg({"dno"}, Aggregate::sum("sal"), scan("E"));
    policy.onQuery(*fine);
    CHECK(policy.cache().entries().size() == 1);
    policy.setTracing(true);
    const auto out = policy.onQuery(*coarse);
    CHECK(out.planCostMs < freshCost(c, *coarse));
    CHECK(out.plan.find("reuse") != std::string::npos);
}

TEST_CASE("largest-first policy admits plan results within capacity") {
    const Catalog c = buildStarCatalog(0.01);
    WorkloadSpec w;
    w.kind = QueryKind::CubeSlices;
    const QueryGenerator gen(w, c);
    LcsLruPolicy policy(c, {}, 0.05 * c.totalBlocks());
    int admittedAny = 0;
    for (std::size_t i = 0; i < 40; ++i) {
        const auto out = policy.onQuery(*gen.queryAt(i));
        CHECK(out.occupancyBlocks <= policy.capacityBlocks());
        CHECK(out.marked.empty());
        if (!out.admitted.empty()) ++admittedAny;
        CHECK_NOTHROW(policy.checkInvariants());
    }
    CHECK(admittedAny > 0);
}
