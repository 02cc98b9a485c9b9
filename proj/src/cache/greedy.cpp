#include "qcache/cache.hpp"

#include <algorithm>
#include <limits>

namespace qcache {

double benefitDensity(double benefit, double sizeBlocks) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (sizeBlocks > 0) return benefit / sizeBlocks;
    if (benefit > 0) return inf;
    return benefit < 0 ? -inf : 0;
}

GreedyResult greedySelect(BenefitSession& session, std::vector<GreedyCandidate> candidates, double cacheSizeBlocks,
                          bool pruning) {
    std::sort(candidates.begin(), candidates.end(),
              [](const GreedyCandidate& a, const GreedyCandidate& b) { return a.node < b.node; });
    candidates.erase(std::unique(candidates.begin(), candidates.end(),
                                 [](const GreedyCandidate& a, const GreedyCandidate& b) { return a.node == b.node; }),
                     candidates.end());

    const auto& dag = session.dag();
    const std::size_t n = candidates.size();
    std::vector<double> size(n);
    for (std::size_t i = 0; i < n; ++i) size[i] = dag.node(candidates[i].node).sizeBlocks();
    std::vector<double> stale(n, std::numeric_limits<double>::infinity());
    std::vector<char> taken(n, 0);

    GreedyResult result;
    MaterializedSet chosen;
    double used = 0;
    while (true) {
        std::vector<std::size_t> feasible;
        for (std::size_t i = 0; i < n; ++i)
            if (!taken[i] && used + size[i] <= cacheSizeBlocks) feasible.push_back(i);
        if (feasible.empty()) break;
        if (pruning)
            std::stable_sort(feasible.begin(), feasible.end(),
                             [&](std::size_t a, std::size_t b) { return stale[a] > stale[b]; });

        std::size_t best = n;
        double bestDensity = 0, bestBenefit = 0;
        for (std::size_t i : feasible) {
            if (pruning && best != n) {
                // Stale densities bound fresh ones from above while benefits do not grow.
                if (stale[i] < bestDensity) break;
                if (stale[i] == bestDensity && candidates[i].node > candidates[best].node) break;
            }
            const double b = session.benefit(candidates[i].node, chosen, candidates[i].how);
            ++result.benefitEvaluations;
            const double d = benefitDensity(b, size[i]);
            stale[i] = d;
            if (best == n || d > bestDensity || (d == bestDensity && candidates[i].node < candidates[best].node)) {
                best = i;
                bestDensity = d;
                bestBenefit = b;
            }
        }
        if (bestBenefit < 0) break;
        taken[best] = 1;
        used += size[best];
        chosen.insert(candidates[best].node);
        result.selected.push_back(candidates[best].node);
        result.steps.push_back({candidates[best].node, bestBenefit, size[best]});
    }
    return result;
}

}  // namespace qcache
