// Experiment driver: runs policies over generated streams and reports totals.
#pragma once

#include "qcache/baselines.hpp"
#include "qcache/cache.hpp"
#include "qcache/workload.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace qcache {

enum class PolicyKind { NoCache, InfCache, LcsLru, DynaMat, Watchman, IncFinalQuery, IncNoFullCache, IncFullCache };

std::string toString(PolicyKind p);
PolicyKind parsePolicy(std::string_view s);
const std::vector<PolicyKind>& allPolicies();
/// Policies whose behaviour does not depend on the cache size.
bool ignoresCapacity(PolicyKind p);

struct ExperimentConfig {
    WorkloadSpec workload;
    PolicyKind policy = PolicyKind::IncNoFullCache;
    double cacheFraction = 0.05;  // of total base-data blocks
    double catalogScale = 1.0;
    std::size_t repsetSize = 10;
    double decay = 0.9;
    std::size_t warmupCount = 100;
    std::size_t measuredCount = 900;
    bool greedyPruning = true;

    /// Throws UsageError naming the offending field.
    void validate() const;
};

/// floor(fraction * total base-data blocks).
double cacheCapacityBlocks(const Catalog& catalog, double fraction);

std::unique_ptr<CachePolicy> makePolicy(const ExperimentConfig& cfg, const Catalog& catalog, CostParams params = {});

struct QueryRecord {
    std::size_t index = 0;
    double planCostMs = 0;
    double materializationCostMs = 0;
    double occupancyBlocks = 0;
    std::vector<std::pair<EqId, double>> admitted;
    std::vector<EqId> evicted;
    std::vector<EqId> marked;
};

struct ExperimentResult {
    ExperimentConfig config;
    double capacityBlocks = 0;
    std::vector<QueryRecord> perQuery;
    double totalMeasuredMs = 0;

    /// Sum of plan and materialization costs over the measured range, in index order.
    double recomputeTotal() const;
};

/// Feeds the generated stream to the configured policy, checking the policy's
/// invariants after every query. Deterministic in `cfg`.
ExperimentResult runExperiment(const ExperimentConfig& cfg, CostParams params = {});

/// Integer milliseconds, halves rounded up.
long long roundMs(double ms);

/// Header plus one row per query:
/// index,phase,plan_ms,materialization_ms,occupancy_blocks,admitted,evicted,marked
void writeDetailCsv(std::ostream& out, const ExperimentResult& r);
/// Header plus one row per result:
/// policy,kind,distribution,seed,cache_fraction,capacity_blocks,total_measured_ms
void writeSummaryCsv(std::ostream& out, const std::vector<ExperimentResult>& results);
std::string detailFileName(const ExperimentConfig& cfg);

/// Cross product of workloads, policies and cache fractions sharing the
/// remaining settings.
struct GridSpec {
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::vector<QueryKind> kinds{QueryKind::CubePoints, QueryKind::CubeSlices};
    std::vector<Distribution> distributions{Distribution::Uniform, Distribution::Zipf};
    std::vector<PolicyKind> policies = allPolicies();
    std::vector<double> cacheFractions{0, 0.05, 0.16, 0.32, 0.5};
    double catalogScale = 0.01;
    std::size_t repsetSize = 10;
    double decay = 0.9;
    std::size_t warmupCount = 100;
    std::size_t measuredCount = 900;
    bool greedyPruning = true;
};

/// Ordered by seed, kind, distribution, cache fraction, policy.
std::vector<ExperimentConfig> expandGrid(const GridSpec& spec);

struct GridOptions {
    unsigned threads = 0;  // 0 = hardware concurrency
    bool keepDetails = true;
};

/// Runs every config, in parallel across configs. Results follow config order.
/// Capacity-independent policies run once per workload and are reused.
std::vector<ExperimentResult> runGrid(const std::vector<ExperimentConfig>& configs, const GridOptions& options = {},
                                      CostParams params = {});

/// Writes summary.csv and, if present, one detail file per result. On an I/O
/// failure leaves a PARTIAL marker file in `dir` and throws std::runtime_error.
void writeGridOutput(const std::filesystem::path& dir, const std::vector<ExperimentResult>& results);

}  // namespace qcache
