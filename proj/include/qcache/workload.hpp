// Star-schema catalog and aggregate query stream generation.
#pragma once

#include "qcache/algebra.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace qcache {

/// ORDERS fact table with SUPPLIER, PART, CUSTOMER and TIME dimensions.
/// Scale 1 is roughly 1 GB of base data; row counts scale linearly, rounded up.
Catalog buildStarCatalog(double scale = 1.0);

/// Attributes a query may group by, in subset-bit order.
const std::vector<std::string>& groupByAttributes();
/// Attributes a query may select on.
const std::vector<std::string>& selectableAttributes();

enum class QueryKind { CubePoints, CubeSlices };
enum class Distribution { Uniform, Zipf };

std::string toString(QueryKind k);
std::string toString(Distribution d);
QueryKind parseQueryKind(std::string_view s);
Distribution parseDistribution(std::string_view s);

struct WorkloadSpec {
    QueryKind kind = QueryKind::CubePoints;
    Distribution distribution = Distribution::Uniform;
    std::size_t queryCount = 1000;
    std::size_t rotationInterval = 32;
    double zipfTheta = 0.5;
    std::uint64_t seed = 1;

    void validate() const;
};

/// A generated query: its selection atoms and group-by set.
struct QuerySpec {
    QueryKind kind = QueryKind::CubePoints;
    std::vector<Atom> atoms;
    AttributeSet groupBy;

    /// "kind=CubePoints select=p_brand=3&t_year<1995 groupby=o_suppkey,t_month"
    std::string toLine() const;
    static QuerySpec parseLine(std::string_view line);

    friend bool operator==(const QuerySpec&, const QuerySpec&) = default;
};

/// sum(o_quantity) grouped by the spec's attributes over the filtered star join.
QueryTreePtr buildQuery(const QuerySpec& q);

/// Inverse-CDF sampler over ranks 0..n-1 with P(r) proportional to 1/(r+1)^theta.
class ZipfSampler {
public:
    ZipfSampler(std::size_t n, double theta);
    std::size_t operator()(std::mt19937_64& rng) const;
    double probability(std::size_t rank) const;
    std::size_t size() const { return cumulative_.size(); }

private:
    std::vector<double> cumulative_;
};

/// Deterministic in (spec, catalog, index). Each decision point draws from its
/// own generator seeded by (seed, index, decision tag).
class QueryGenerator {
public:
    QueryGenerator(WorkloadSpec spec, const Catalog& catalog);

    const WorkloadSpec& spec() const { return spec_; }
    QuerySpec specAt(std::size_t index) const;
    QueryTreePtr queryAt(std::size_t index) const { return buildQuery(specAt(index)); }
    std::vector<QuerySpec> stream() const;

    /// Group-by subset (bit mask over groupByAttributes()) at the given
    /// frequency rank for query `index`, after rotation.
    std::uint32_t groupBySubsetAtRank(std::size_t rank, std::size_t index) const;

private:
    std::size_t drawRank(std::mt19937_64& rng, std::size_t n) const;

    WorkloadSpec spec_;
    const Catalog* catalog_;
};

}  // namespace qcache
