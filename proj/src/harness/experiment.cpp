#include "qcache/harness.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace qcache {

namespace {

const std::vector<std::pair<PolicyKind, std::string>>& policyNames() {
    static const std::vector<std::pair<PolicyKind, std::string>> names{
        {PolicyKind::NoCache, "NoCache"},
        {PolicyKind::InfCache, "InfCache"},
        {PolicyKind::LcsLru, "LcsLru"},
        {PolicyKind::DynaMat, "DynaMat"},
        {PolicyKind::Watchman, "Watchman"},
        {PolicyKind::IncFinalQuery, "Incremental/FinalQuery"},
        {PolicyKind::IncNoFullCache, "Incremental/NoFullCache"},
        {PolicyKind::IncFullCache, "Incremental/FullCache"},
    };
    return names;
}

std::string exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string toString(PolicyKind p) {
    for (const auto& [k, n] : policyNames())
        if (k == p) return n;
    return "?";
}

PolicyKind parsePolicy(std::string_view s) {
    for (const auto& [k, n] : policyNames())
        if (n == s) return k;
    throw UsageError("unknown policy '" + std::string(s) + "'");
}

const std::vector<PolicyKind>& allPolicies() {
    static const std::vector<PolicyKind> all = [] {
        std::vector<PolicyKind> v;
        for (const auto& [k, n] : policyNames()) v.push_back(k);
        return v;
    }();
    return all;
}

bool ignoresCapacity(PolicyKind p) { return p == PolicyKind::NoCache || p == PolicyKind::InfCache; }

void ExperimentConfig::validate() const {
    workload.validate();
    if (!(cacheFraction >= 0 && cacheFraction <= 1)) throw UsageError("cacheFraction must lie in [0, 1]");
    if (!(catalogScale > 0) || !std::isfinite(catalogScale)) throw UsageError("catalogScale must be positive");
    if (repsetSize == 0) throw UsageError("repsetSize must be positive");
    if (!(decay > 0 && decay <= 1)) throw UsageError("decay must lie in (0, 1]");
    if (warmupCount + measuredCount != workload.queryCount)
        throw UsageError("warmupCount + measuredCount (" + std::to_string(warmupCount + measuredCount) +
                         ") must equal workload.queryCount (" + std::to_string(workload.queryCount) + ")");
}

double cacheCapacityBlocks(const Catalog& catalog, double fraction) {
    return std::floor(fraction * static_cast<double>(catalog.totalBlocks()));
}

std::unique_ptr<CachePolicy> makePolicy(const ExperimentConfig& cfg, const Catalog& catalog, CostParams params) {
    const double capacity = cacheCapacityBlocks(catalog, cfg.cacheFraction);
    auto incremental = [&](IncrementalVariant v) {
        return std::make_unique<IncrementalCache>(
            catalog, params, IncrementalConfig{v, capacity, cfg.repsetSize, cfg.decay, cfg.greedyPruning});
    };
    switch (cfg.policy) {
        case PolicyKind::NoCache: return std::make_unique<NoCachePolicy>(catalog, params);
        case PolicyKind::InfCache: return std::make_unique<InfCachePolicy>(catalog, params);
        case PolicyKind::LcsLru: return std::make_unique<LcsLruPolicy>(catalog, params, capacity);
        case PolicyKind::DynaMat: return std::make_unique<DynaMatPolicy>(catalog, params, capacity);
        case PolicyKind::Watchman: return std::make_unique<WatchmanPolicy>(catalog, params, capacity);
        case PolicyKind::IncFinalQuery: return incremental(IncrementalVariant::FinalQuery);
        case PolicyKind::IncNoFullCache: return incremental(IncrementalVariant::NoFullCache);
        case PolicyKind::IncFullCache: return incremental(IncrementalVariant::FullCache);
    }
    throw UsageError("unknown policy");
}

double ExperimentResult::recomputeTotal() const {
    double total = 0;
    for (const auto& r : perQuery)
        if (r.index >= config.warmupCount) total += r.planCostMs + r.materializationCostMs;
    return total;
}

ExperimentResult runExperiment(const ExperimentConfig& cfg, CostParams params) {
    cfg.validate();
    params.validate();
    const Catalog catalog = buildStarCatalog(cfg.catalogScale);
    const QueryGenerator gen(cfg.workload, catalog);
    auto policy = makePolicy(cfg, catalog, params);

    ExperimentResult result;
    result.config = cfg;
    result.capacityBlocks = cacheCapacityBlocks(catalog, cfg.cacheFraction);
    result.perQuery.reserve(cfg.workload.queryCount);
    for (std::size_t i = 0; i < cfg.workload.queryCount; ++i) {
        const QueryOutcome out = policy->onQuery(*gen.queryAt(i));
        policy->checkInvariants();
        result.perQuery.push_back(
            {i, out.planCostMs, out.materializationCostMs, out.occupancyBlocks, out.admitted, out.evicted, out.marked});
        if (i >= cfg.warmupCount) result.totalMeasuredMs += out.planCostMs + out.materializationCostMs;
    }
    return result;
}

long long roundMs(double ms) { return static_cast<long long>(std::floor(ms + 0.5)); }

void writeDetailCsv(std::ostream& out, const ExperimentResult& r) {
    out << "index,phase,plan_ms,materialization_ms,occupancy_blocks,admitted,evicted,marked\n";
    for (const auto& q : r.perQuery) {
        out << q.index << ',' << (q.index < r.config.warmupCount ? "warmup" : "measured") << ','
            << exact(q.planCostMs) << ',' << exact(q.materializationCostMs) << ',' << exact(q.occupancyBlocks) << ',';
        for (std::size_t k = 0; k < q.admitted.size(); ++k)
            out << (k ? ";" : "") << q.admitted[k].first << ':' << exact(q.admitted[k].second);
        out << ',';
        for (std::size_t k = 0; k < q.evicted.size(); ++k) out << (k ? ";" : "") << q.evicted[k];
        out << ',';
        for (std::size_t k = 0; k < q.marked.size(); ++k) out << (k ? ";" : "") << q.marked[k];
        out << '\n';
    }
}

void writeSummaryCsv(std::ostream& out, const std::vector<ExperimentResult>& results) {
    out << "policy,kind,distribution,seed,cache_fraction,capacity_blocks,total_measured_ms\n";
    for (const auto& r : results) {
        const auto& c = r.config;
        out << toString(c.policy) << ',' << toString(c.workload.kind) << ',' << toString(c.workload.distribution)
            << ',' << c.workload.seed << ',' << exact(c.cacheFraction) << ',' << exact(r.capacityBlocks) << ','
            << roundMs(r.totalMeasuredMs) << '\n';
    }
}

std::string detailFileName(const ExperimentConfig& cfg) {
    std::string policy = toString(cfg.policy);
    for (auto& ch : policy)
        if (ch == '/') ch = '-';
    char frac[32];
    std::snprintf(frac, sizeof frac, "%g", cfg.cacheFraction);
    return policy + "_" + toString(cfg.workload.kind) + "_" + toString(cfg.workload.distribution) + "_s" +
           std::to_string(cfg.workload.seed) + "_f" + frac + ".csv";
}

}  // namespace qcache
