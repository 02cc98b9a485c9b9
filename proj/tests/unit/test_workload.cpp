#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace qcache;
using namespace qcache::testing;

TEST_CASE("catalog scaling") {
    const Catalog small = buildStarCatalog(0.01);
    CHECK(small.relation("SUPPLIER").rowCount == 100);
    CHECK(small.relation("PART").rowCount == 2000);
    CHECK(small.relation("TIME").rowCount == 26);  // 25.56 rounded up
    CHECK(small.relation("ORDERS").rowCount == 60000);
    CHECK(small.totalBlocks() == 2623);

    const Catalog tiny = buildStarCatalog(1e-6);
    for (const auto& r : tiny.relations()) CHECK(r.rowCount >= 1);

    const Catalog full = buildStarCatalog(1.0);
    double bytes = 0;
    for (const auto& r : full.relations()) bytes += static_cast<double>(r.rowCount) * static_cast<double>(r.rowWidthBytes);
    CHECK(std::abs(bytes - 1e9) <= 0.1e9);

    CHECK_THROWS_AS(buildStarCatalog(0), UsageError);
    CHECK_THROWS_AS(buildStarCatalog(-1), UsageError);
}

TEST_CASE("foreign keys range over dimension keys") {
    for (double scale : {0.001, 0.01, 0.3}) {
        const Catalog c = buildStarCatalog(scale);
        const auto& orders = c.relation("ORDERS");
        const std::pair<const char*, const char*> fks[] = {
            {"o_suppkey", "SUPPLIER"}, {"o_partkey", "PART"}, {"o_custkey", "CUSTOMER"}, {"o_timekey", "TIME"}};
        for (const auto& [fk, dim] : fks) {
            const auto* a = c.findAttribute(fk);
            REQUIRE(a != nullptr);
            CHECK(a->distinctCount == std::min(c.relation(dim).rowCount, orders.rowCount));
            CHECK(a->maxValue == c.relation(dim).rowCount);
        }
    }
}

TEST_CASE("streams are deterministic in the seed") {
    const Catalog c = buildStarCatalog(0.01);
    WorkloadSpec w;
    w.queryCount = 200;
    const auto a = QueryGenerator(w, c).stream();
    const auto b = QueryGenerator(w, c).stream();
    CHECK(a == b);
    CHECK(QueryGenerator(w, c).specAt(137) == a[137]);
    w.seed = 2;
    CHECK(QueryGenerator(w, c).stream() != a);
}

TEST_CASE("query shapes by kind") {
    const Catalog c = buildStarCatalog(0.01);
    for (auto kind : {QueryKind::CubePoints, QueryKind::CubeSlices}) {
        WorkloadSpec w;
        w.kind = kind;
        w.queryCount = 500;
        int ranges = 0;
        for (const auto& q : QueryGenerator(w, c).stream()) {
            CHECK((q.kind == kind));
            CHECK(q.atoms.size() <= 3);
            std::set<std::string> attrs;
            for (const auto& a : q.atoms) {
                attrs.insert(a.attribute);
                const auto* info = c.findAttribute(a.attribute);
                REQUIRE(info != nullptr);
                CHECK(a.constant >= info->minValue);
                CHECK(a.constant <= info->maxValue);
                if (a.op != Comparator::Eq) ++ranges;
            }
            CHECK(attrs.size() == q.atoms.size());
            for (const auto& g : q.groupBy)
                CHECK(std::find(groupByAttributes().begin(), groupByAttributes().end(), g) != groupByAttributes().end());
        }
        if (kind == QueryKind::CubePoints)
            CHECK(ranges == 0);
        else
            CHECK(ranges > 100);
    }
}

TEST_CASE("uniform group-by subsets are equally frequent") {
    const Catalog c = buildStarCatalog(0.01);
    WorkloadSpec w;
    w.queryCount = 100000;
    const QueryGenerator gen(w, c);
    std::map<std::string, int> counts;
    for (std::size_t i = 0; i < w.queryCount; ++i) {
        std::string key;
        for (const auto& g : gen.specAt(i).groupBy) key += g + ",";
        ++counts[key];
    }
    CHECK(counts.size() == 32);
    const double n = static_cast<double>(w.queryCount), p = 1.0 / 32;
    const double sigma = std::sqrt(n * p * (1 - p));
    for (const auto& [key, k] : counts) CHECK(std::abs(k - n * p) <= 3 * sigma);
}

TEST_CASE("Zipf sampler") {
    const ZipfSampler z(32, 0.5);
    double total = 0;
    for (std::size_t r = 0; r < 32; ++r) {
        total += z.probability(r);
        if (r > 0) CHECK(z.probability(r) < z.probability(r - 1));
    }
    CHECK(total == doctest::Approx(1.0));
    CHECK(z.probability(0) / z.probability(3) == doctest::Approx(2.0));

    std::mt19937_64 rng(61);
    std::vector<int> hits(32);
    const int n = 200000;
    for (int i = 0; i < n; ++i) ++hits[z(rng)];
    for (std::size_t r = 0; r < 32; ++r) {
        const double p = z.probability(r);
        CHECK(std::abs(hits[r] - n * p) <= 4 * std::sqrt(n * p * (1 - p)));
    }
    CHECK(ZipfSampler(5, 0).probability(4) == doctest::Approx(0.2));
    CHECK_THROWS_AS(ZipfSampler(0, 1), UsageError);
}

TEST_CASE("popular group-by subsets rotate") {
    const Catalog c = buildStarCatalog(0.01);
    WorkloadSpec w;
    w.distribution = Distribution::Zipf;
    w.rotationInterval = 32;
    const QueryGenerator gen(w, c);
    CHECK(gen.groupBySubsetAtRank(0, 0) == 0);
    CHECK(gen.groupBySubsetAtRank(0, 31) == 0);
    CHECK(gen.groupBySubsetAtRank(0, 32) == 1);
    CHECK(gen.groupBySubsetAtRank(31, 32) == 0);
    CHECK(gen.groupBySubsetAtRank(5, 32 * 40) == (5 + 40) % 32);
}

TEST_CASE("query lines round trip") {
    const Catalog c = buildStarCatalog(0.01);
    WorkloadSpec w;
    w.kind = QueryKind::CubeSlices;
    w.queryCount = 100;
    for (const auto& q : QueryGenerator(w, c).stream()) {
        CHECK(QuerySpec::parseLine(q.toLine()) == q);
        CHECK_NOTHROW(validate(*buildQuery(q), c));
    }
    const auto q = QuerySpec::parseLine("kind=CubePoints select= groupby=");
    CHECK(q.atoms.empty());
    CHECK(q.groupBy.empty());
    CHECK_THROWS_AS(QuerySpec::parseLine("select=p_brand=1"), UsageError);
    CHECK_THROWS_AS(QuerySpec::parseLine("kind=Cube"), UsageError);
    CHECK_THROWS_AS(QuerySpec::parseLine("kind=CubePoints colour=red"), UsageError);
}

TEST_CASE("workload validation") {
    WorkloadSpec w;
    CHECK_NOTHROW(w.validate());
    w.rotationInterval = 0;
    CHECK_THROWS_AS(w.validate(), UsageError);
    w = {};
    w.queryCount = 0;
    CHECK_THROWS_AS(w.validate(), UsageError);
    w = {};
    w.zipfTheta = -1;
    CHECK_THROWS_AS(w.validate(), UsageError);
    CHECK((parseDistribution("Zipf") == Distribution::Zipf));
    CHECK_THROWS_AS(parseQueryKind("Cubes"), UsageError);
}
