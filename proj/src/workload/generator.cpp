#include "qcache/workload.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qcache {

std::string toString(QueryKind k) { return k == QueryKind::CubePoints ? "CubePoints" : "CubeSlices"; }
std::string toString(Distribution d) { return d == Distribution::Uniform ? "Uniform" : "Zipf"; }

QueryKind parseQueryKind(std::string_view s) {
    if (s == "CubePoints") return QueryKind::CubePoints;
    if (s == "CubeSlices") return QueryKind::CubeSlices;
    throw UsageError("unknown query kind '" + std::string(s) + "'");
}

Distribution parseDistribution(std::string_view s) {
    if (s == "Uniform") return Distribution::Uniform;
    if (s == "Zipf") return Distribution::Zipf;
    throw UsageError("unknown distribution '" + std::string(s) + "'");
}

void WorkloadSpec::validate() const {
    if (queryCount == 0) throw UsageError("workload.queryCount must be positive");
    if (rotationInterval == 0) throw UsageError("workload.rotationInterval must be positive");
    if (!(zipfTheta >= 0) || !std::isfinite(zipfTheta)) throw UsageError("workload.zipfTheta must be non-negative");
}

// ---------------------------------------------------------------------------
// Query specs

std::string QuerySpec::toLine() const {
    std::string g;
    for (const auto& a : groupBy) g += (g.empty() ? "" : ",") + a;
    return "kind=" + toString(kind) + " select=" + formatAtomList(atoms) + " groupby=" + g;
}

QuerySpec QuerySpec::parseLine(std::string_view line) {
    QuerySpec q;
    bool sawKind = false;
    std::istringstream in{std::string(line)};
    std::string field;
    while (in >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) throw UsageError("malformed field '" + field + "'");
        const std::string name = field.substr(0, eq), value = field.substr(eq + 1);
        if (name == "kind") {
            q.kind = parseQueryKind(value);
            sawKind = true;
        } else if (name == "select") {
            q.atoms = parseAtomList(value);
        } else if (name == "groupby") {
            std::istringstream parts(value);
            std::string a;
            while (std::getline(parts, a, ','))
                if (!a.empty()) q.groupBy.insert(a);
        } else {
            throw UsageError("unknown field '" + name + "'");
        }
    }
    if (!sawKind) throw UsageError("query line lacks kind=");
    return q;
}

// ---------------------------------------------------------------------------
// Zipf

ZipfSampler::ZipfSampler(std::size_t n, double theta) {
    if (n == 0) throw UsageError("Zipf domain must be non-empty");
    double total = 0;
    for (std::size_t r = 0; r < n; ++r) {
        total += 1.0 / std::pow(static_cast<double>(r + 1), theta);
        cumulative_.push_back(total);
    }
    for (auto& c : cumulative_) c /= total;
    cumulative_.back() = 1.0;
}

std::size_t ZipfSampler::operator()(std::mt19937_64& rng) const {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
}

double ZipfSampler::probability(std::size_t rank) const {
    return cumulative_.at(rank) - (rank == 0 ? 0.0 : cumulative_[rank - 1]);
}

// ---------------------------------------------------------------------------
// Generator

namespace {

enum class Decision : std::uint32_t { AtomCount = 1, Attribute, Comparator, Constant, GroupBy };

std::mt19937_64 decisionRng(std::uint64_t seed, std::size_t index, Decision d) {
    const auto i = static_cast<std::uint64_t>(index);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32),
                      static_cast<std::uint32_t>(d)};
    return std::mt19937_64(seq);
}

}  // namespace

QueryGenerator::QueryGenerator(WorkloadSpec spec, const Catalog& catalog) : spec_(spec), catalog_(&catalog) {
    spec_.validate();
    for (const auto& a : selectableAttributes())
        if (!catalog.findAttribute(a)) throw SchemaError("catalog lacks attribute " + a);
    for (const auto& a : groupByAttributes())
        if (!catalog.findAttribute(a)) throw SchemaError("catalog lacks attribute " + a);
}

std::size_t QueryGenerator::drawRank(std::mt19937_64& rng, std::size_t n) const {
    if (spec_.distribution == Distribution::Zipf) return ZipfSampler(n, spec_.zipfTheta)(rng);
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::uint32_t QueryGenerator::groupBySubsetAtRank(std::size_t rank, std::size_t index) const {
    const std::size_t subsets = std::size_t{1} << groupByAttributes().size();
    const std::size_t shift = index / spec_.rotationInterval;
    return static_cast<std::uint32_t>((rank + shift) % subsets);
}

QuerySpec QueryGenerator::specAt(std::size_t index) const {
    QuerySpec q;
    q.kind = spec_.kind;

    auto countRng = decisionRng(spec_.seed, index, Decision::AtomCount);
    auto attrRng = decisionRng(spec_.seed, index, Decision::Attribute);
    auto cmpRng = decisionRng(spec_.seed, index, Decision::Comparator);
    auto constRng = decisionRng(spec_.seed, index, Decision::Constant);
    auto groupRng = decisionRng(spec_.seed, index, Decision::GroupBy);

    const std::size_t atoms = std::uniform_int_distribution<std::size_t>(0, 3)(countRng);
    std::vector<std::string> pool = selectableAttributes();
    for (std::size_t k = 0; k < atoms; ++k) {
        const std::size_t pick = drawRank(attrRng, pool.size());
        const std::string attr = pool[pick];
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));

        Comparator op = Comparator::Eq;
        if (spec_.kind == QueryKind::CubeSlices && std::bernoulli_distribution(0.5)(cmpRng)) {
            static constexpr Comparator ranges[] = {Comparator::Lt, Comparator::Le, Comparator::Gt, Comparator::Ge};
            op = ranges[std::uniform_int_distribution<int>(0, 3)(cmpRng)];
        }
        const AttributeInfo& info = *catalog_->findAttribute(attr);
        const auto domain = static_cast<std::size_t>(info.maxValue - info.minValue + 1);
        const auto value = info.minValue + static_cast<std::int64_t>(drawRank(constRng, domain));
        q.atoms.push_back({attr, op, value});
    }
    std::sort(q.atoms.begin(), q.atoms.end());

    const std::size_t subsets = std::size_t{1} << groupByAttributes().size();
    const std::uint32_t mask = groupBySubsetAtRank(drawRank(groupRng, subsets), index);
    for (std::size_t b = 0; b < groupByAttributes().size(); ++b)
        if (mask & (1u << b)) q.groupBy.insert(groupByAttributes()[b]);
    return q;
}

std::vector<QuerySpec> QueryGenerator::stream() const {
    std::vector<QuerySpec> out;
    out.reserve(spec_.queryCount);
    for (std::size_t i = 0; i < spec_.queryCount; ++i) out.push_back(specAt(i));
    return out;
}

}  // namespace qcache
