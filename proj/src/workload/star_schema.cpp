#include "qcache/workload.hpp"

#include <algorithm>
#include <cmath>

namespace qcache {

namespace {

struct DimAttr {
    const char* name;
    std::int64_t distinct;
    std::int64_t minValue;
};

std::int64_t scaled(std::int64_t rows, double scale) {
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(static_cast<double>(rows) * scale - 1e-9)));
}

AttributeInfo keyAttr(const std::string& name, std::int64_t rows) { return {name, rows, 1, rows, 4}; }

AttributeInfo valueAttr(const DimAttr& a, std::int64_t rows) {
    const std::int64_t d = std::min(a.distinct, rows);
    return {a.name, d, a.minValue, a.minValue + a.distinct - 1, 4};
}

RelationInfo dimension(const std::string& name, std::int64_t rows, std::int64_t width, const std::string& key,
                       std::initializer_list<DimAttr> attrs) {
    RelationInfo r{name, rows, width, {keyAttr(key, rows)}, key};
    for (const auto& a : attrs) r.attributes.push_back(valueAttr(a, rows));
    return r;
}

}  // namespace

Catalog buildStarCatalog(double scale) {
    if (!(scale > 0) || !std::isfinite(scale)) throw UsageError("catalog scale must be positive");
    const std::int64_t suppliers = scaled(10'000, scale);
    const std::int64_t parts = scaled(200'000, scale);
    const std::int64_t customers = scaled(150'000, scale);
    const std::int64_t days = scaled(2'556, scale);
    const std::int64_t orders = scaled(6'000'000, scale);

    std::vector<RelationInfo> rels;
    rels.push_back(dimension("SUPPLIER", suppliers, 160, "s_suppkey", {{"s_nation", 25, 0}}));
    rels.push_back(dimension("PART", parts, 155, "p_partkey",
                             {{"p_brand", 25, 0}, {"p_type", 150, 0}, {"p_size", 50, 1}, {"p_container", 40, 0}}));
    rels.push_back(dimension("CUSTOMER", customers, 180, "c_custkey", {{"c_nation", 25, 0}, {"c_mktsegment", 5, 0}}));
    rels.push_back(dimension("TIME", days, 32, "t_timekey", {{"t_month", 12, 1}, {"t_year", 7, 1992}}));

    RelationInfo fact{"ORDERS", orders, 169, {}, std::nullopt};
    fact.attributes.push_back(valueAttr({"o_quantity", 50, 1}, orders));
    fact.attributes.push_back(keyAttr("o_suppkey", suppliers));
    fact.attributes.push_back(keyAttr("o_partkey", parts));
    fact.attributes.push_back(keyAttr("o_custkey", customers));
    fact.attributes.push_back(keyAttr("o_timekey", days));
    for (auto& a : fact.attributes) a.distinctCount = std::min(a.distinctCount, orders);
    rels.push_back(std::move(fact));
    return Catalog(std::move(rels), 4096);
}

const std::vector<std::string>& groupByAttributes() {
    static const std::vector<std::string> attrs{"o_suppkey", "o_partkey", "o_custkey", "t_month", "t_year"};
    return attrs;
}

const std::vector<std::string>& selectableAttributes() {
    static const std::vector<std::string> attrs{"o_quantity",  "s_nation", "p_brand",      "p_type", "p_size",
                                                "p_container", "c_nation", "c_mktsegment", "t_month", "t_year"};
    return attrs;
}

QueryTreePtr buildQuery(const QuerySpec& q) {
    QueryTreePtr t = join(JoinCondition{"o_suppkey", "s_suppkey"}, scan("ORDERS"), scan("SUPPLIER"));
    t = join(JoinCondition{"o_partkey", "p_partkey"}, t, scan("PART"));
    t = join(JoinCondition{"o_custkey", "c_custkey"}, t, scan("CUSTOMER"));
    t = join(JoinCondition{"o_timekey", "t_timekey"}, t, scan("TIME"));
    if (!q.atoms.empty()) {
        std::vector<Predicate> atoms;
        for (const auto& a : q.atoms) atoms.push_back(Predicate::atom(a.attribute, a.op, a.constant));
        t = select(Predicate::conjunction(std::move(atoms)), t);
    }
    return groupAgg(q.groupBy, Aggregate::sum("o_quantity"), t);
}

}  // namespace qcache
