// qcache: run caching experiments over generated star-schema query streams.
#include "qcache/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

using namespace qcache;
using nlohmann::json;

namespace {

std::filesystem::path outputDir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("QCACHE_OUTPUT_DIR"); env && *env) return env;
    return {};
}

template <class T, class F>
std::vector<T> parseList(const std::vector<std::string>& items, F parse) {
    std::vector<T> out;
    for (const auto& s : items) out.push_back(parse(s));
    return out;
}

GridSpec gridFromJson(const json& j) {
    GridSpec g;
    auto strings = [&](const char* key) { return j.at(key).get<std::vector<std::string>>(); };
    if (j.contains("seeds")) g.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("kinds")) g.kinds = parseList<QueryKind>(strings("kinds"), parseQueryKind);
    if (j.contains("distributions"))
        g.distributions = parseList<Distribution>(strings("distributions"), parseDistribution);
    if (j.contains("policies")) g.policies = parseList<PolicyKind>(strings("policies"), parsePolicy);
    if (j.contains("cacheFractions")) g.cacheFractions = j.at("cacheFractions").get<std::vector<double>>();
    g.catalogScale = j.value("catalogScale", g.catalogScale);
    g.repsetSize = j.value("repsetSize", g.repsetSize);
    g.decay = j.value("decay", g.decay);
    g.warmupCount = j.value("warmupCount", g.warmupCount);
    g.measuredCount = j.value("measuredCount", g.measuredCount);
    g.greedyPruning = j.value("greedyPruning", g.greedyPruning);
    return g;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Query result caching experiments"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run one policy on one stream");
    std::string policy = "Incremental/NoFullCache", kind = "CubePoints", dist = "Uniform", runOut;
    ExperimentConfig cfg;
    bool noPruning = false;
    run->add_option("--policy", policy, "Policy name")->capture_default_str();
    run->add_option("--kind", kind, "CubePoints or CubeSlices")->capture_default_str();
    run->add_option("--distribution", dist, "Uniform or Zipf")->capture_default_str();
    run->add_option("--seed", cfg.workload.seed, "Stream seed")->capture_default_str();
    run->add_option("--fraction", cfg.cacheFraction, "Cache size as a fraction of the base data")->capture_default_str();
    run->add_option("--scale", cfg.catalogScale, "Catalog scale")->capture_default_str();
    run->add_option("--warmup", cfg.warmupCount, "Warmup queries")->capture_default_str();
    run->add_option("--measured", cfg.measuredCount, "Measured queries")->capture_default_str();
    run->add_option("--repset", cfg.repsetSize, "Representative set size")->capture_default_str();
    run->add_option("--decay", cfg.decay, "Representative set decay")->capture_default_str();
    run->add_flag("--no-pruning", noPruning, "Re-evaluate every greedy candidate at each step");
    run->add_option("-o,--output-dir", runOut, "Write summary and per-query CSV here");

    // grid
    auto* grid = app.add_subcommand("grid", "Run a grid of experiments from a JSON config");
    std::string gridFile, gridOut;
    std::vector<std::uint64_t> seeds;
    std::vector<double> fractions;
    std::vector<std::string> policies, kinds, dists;
    unsigned threads = 0;
    bool summaryOnly = false;
    grid->add_option("config", gridFile, "JSON grid config")->check(CLI::ExistingFile);
    grid->add_option("--seeds", seeds, "Override seeds")->delimiter(',');
    grid->add_option("--fractions", fractions, "Override cache fractions")->delimiter(',');
    grid->add_option("--policies", policies, "Override policies")->delimiter(',');
    grid->add_option("--kinds", kinds, "Override query kinds")->delimiter(',');
    grid->add_option("--distributions", dists, "Override distributions")->delimiter(',');
    grid->add_option("--threads", threads, "Worker threads (0 = all cores)");
    grid->add_flag("--summary-only", summaryOnly, "Skip per-query detail files");
    grid->add_option("-o,--output-dir", gridOut, "Output directory");

    // catalog
    auto* cat = app.add_subcommand("catalog", "Print the star-schema catalog");
    double catScale = 1.0;
    cat->add_option("--scale", catScale, "Catalog scale")->capture_default_str();

    // stream
    auto* stream = app.add_subcommand("stream", "Print a generated query stream");
    WorkloadSpec ws;
    std::string streamKind = "CubePoints", streamDist = "Uniform";
    double streamScale = 0.01;
    stream->add_option("--kind", streamKind)->capture_default_str();
    stream->add_option("--distribution", streamDist)->capture_default_str();
    stream->add_option("--seed", ws.seed)->capture_default_str();
    stream->add_option("--count", ws.queryCount)->capture_default_str();
    stream->add_option("--scale", streamScale, "Catalog scale for value domains")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            cfg.policy = parsePolicy(policy);
            cfg.workload.kind = parseQueryKind(kind);
            cfg.workload.distribution = parseDistribution(dist);
            cfg.workload.queryCount = cfg.warmupCount + cfg.measuredCount;
            cfg.greedyPruning = !noPruning;
            const auto result = runExperiment(cfg);
            std::cout << toString(cfg.policy) << ' ' << toString(cfg.workload.kind) << '/'
                      << toString(cfg.workload.distribution) << " fraction=" << cfg.cacheFraction
                      << " total_ms=" << roundMs(result.totalMeasuredMs) << '\n';
            if (auto dir = outputDir(runOut); !dir.empty()) writeGridOutput(dir, {result});
        } else if (*grid) {
            GridSpec spec;
            if (!gridFile.empty()) {
                std::ifstream in(gridFile);
                spec = gridFromJson(json::parse(in));
            }
            if (!seeds.empty()) spec.seeds = seeds;
            if (!fractions.empty()) spec.cacheFractions = fractions;
            if (!policies.empty()) spec.policies = parseList<PolicyKind>(policies, parsePolicy);
            if (!kinds.empty()) spec.kinds = parseList<QueryKind>(kinds, parseQueryKind);
            if (!dists.empty()) spec.distributions = parseList<Distribution>(dists, parseDistribution);
            const auto results = runGrid(expandGrid(spec), GridOptions{threads, !summaryOnly});
            const auto dir = outputDir(gridOut);
            if (dir.empty()) {
                writeSummaryCsv(std::cout, results);
            } else {
                writeGridOutput(dir, results);
                std::cout << "wrote " << results.size() << " rows to " << (dir / "summary.csv").string() << '\n';
            }
        } else if (*cat) {
            buildStarCatalog(catScale).write(std::cout);
        } else if (*stream) {
            ws.kind = parseQueryKind(streamKind);
            ws.distribution = parseDistribution(streamDist);
            const Catalog catalog = buildStarCatalog(streamScale);
            for (const auto& q : QueryGenerator(ws, catalog).stream()) std::cout << q.toLine() << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
