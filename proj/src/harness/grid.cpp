#include "qcache/harness.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace qcache {

namespace {

std::string capacityFreeKey(const ExperimentConfig& c) {
    std::ostringstream k;
    k << toString(c.policy) << '|' << toString(c.workload.kind) << '|' << toString(c.workload.distribution) << '|'
      << c.workload.seed << '|' << c.workload.queryCount << '|' << c.workload.rotationInterval << '|'
      << c.workload.zipfTheta << '|' << c.catalogScale << '|' << c.warmupCount << '|' << c.measuredCount;
    return k.str();
}

}  // namespace

std::vector<ExperimentConfig> expandGrid(const GridSpec& spec) {
    std::vector<ExperimentConfig> out;
    for (auto seed : spec.seeds)
        for (auto kind : spec.kinds)
            for (auto dist : spec.distributions)
                for (double fraction : spec.cacheFractions)
                    for (auto policy : spec.policies) {
                        ExperimentConfig c;
                        c.workload.kind = kind;
                        c.workload.distribution = dist;
                        c.workload.seed = seed;
                        c.workload.queryCount = spec.warmupCount + spec.measuredCount;
                        c.policy = policy;
                        c.cacheFraction = fraction;
                        c.catalogScale = spec.catalogScale;
                        c.repsetSize = spec.repsetSize;
                        c.decay = spec.decay;
                        c.warmupCount = spec.warmupCount;
                        c.measuredCount = spec.measuredCount;
                        c.greedyPruning = spec.greedyPruning;
                        out.push_back(c);
                    }
    return out;
}

std::vector<ExperimentResult> runGrid(const std::vector<ExperimentConfig>& configs, const GridOptions& options,
                                      CostParams params) {
    if (configs.empty()) throw UsageError("grid has no configurations");
    for (const auto& c : configs) c.validate();

    std::vector<std::size_t> jobOf(configs.size());
    std::vector<std::size_t> jobs;  // index of the config each job runs
    std::map<std::string, std::size_t> shared;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        if (ignoresCapacity(configs[i].policy)) {
            auto [it, fresh] = shared.emplace(capacityFreeKey(configs[i]), jobs.size());
            if (fresh) jobs.push_back(i);
            jobOf[i] = it->second;
        } else {
            jobOf[i] = jobs.size();
            jobs.push_back(i);
        }
    }

    std::vector<ExperimentResult> done(jobs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failureMutex;
    auto worker = [&] {
        for (std::size_t j; (j = next++) < jobs.size();) {
            try {
                done[j] = runExperiment(configs[jobs[j]], params);
            } catch (...) {
                std::lock_guard lock(failureMutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, jobs.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    std::map<double, Catalog> catalogs;
    std::vector<ExperimentResult> results;
    results.reserve(configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i) {
        ExperimentResult r = done[jobOf[i]];
        if (r.config.cacheFraction != configs[i].cacheFraction) {
            auto it = catalogs.find(configs[i].catalogScale);
            if (it == catalogs.end())
                it = catalogs.emplace(configs[i].catalogScale, buildStarCatalog(configs[i].catalogScale)).first;
            r.capacityBlocks = cacheCapacityBlocks(it->second, configs[i].cacheFraction);
        }
        r.config = configs[i];
        if (!options.keepDetails) r.perQuery.clear();
        results.push_back(std::move(r));
    }
    return results;
}

void writeGridOutput(const std::filesystem::path& dir, const std::vector<ExperimentResult>& results) {
    namespace fs = std::filesystem;
    auto fail = [&](const std::string& what) {
        std::ofstream marker(dir / "PARTIAL");
        marker << what << '\n';
        throw std::runtime_error(what);
    };
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
    fs::remove(dir / "PARTIAL", ec);

    const bool details = std::any_of(results.begin(), results.end(), [](const auto& r) { return !r.perQuery.empty(); });
    if (details) {
        fs::create_directories(dir / "details", ec);
        if (ec) fail("cannot create " + (dir / "details").string() + ": " + ec.message());
        for (const auto& r : results) {
            if (r.perQuery.empty()) continue;
            const fs::path p = dir / "details" / detailFileName(r.config);
            std::ofstream out(p);
            writeDetailCsv(out, r);
            if (!out) fail("failed writing " + p.string());
        }
    }
    std::ofstream out(dir / "summary.csv");
    writeSummaryCsv(out, results);
    if (!out) fail("failed writing " + (dir / "summary.csv").string());
}

}  // namespace qcache
