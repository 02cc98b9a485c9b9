#include "qcache/cache.hpp"

#include <cmath>
#include <map>

namespace qcache {

RepresentativeSet::RepresentativeSet(std::size_t capacity, double decay) : capacity_(capacity), decay_(decay) {
    if (capacity_ == 0) throw UsageError("representative set capacity must be positive");
    if (!(decay_ > 0 && decay_ <= 1)) throw UsageError("decay must lie in (0, 1]");
}

std::vector<QueryId> RepresentativeSet::push(QueryId queryId) {
    entries_.push_front(queryId);
    std::vector<QueryId> evicted;
    while (entries_.size() > capacity_) {
        evicted.push_back(entries_.back());
        entries_.pop_back();
    }
    return evicted;
}

std::vector<QueryId> RepresentativeSet::recordQuery(QueryDag& dag, QueryId queryId) {
    auto evicted = push(queryId);
    for (QueryId q : evicted) dag.removeQuery(q);
    return evicted;
}

double RepresentativeSet::positionWeight(std::size_t position) const {
    return std::pow(decay_, static_cast<double>(position));
}

std::vector<WeightedQuery> RepresentativeSet::workload(const QueryDag& dag) const {
    std::vector<WeightedQuery> out;
    std::map<EqId, std::size_t> slot;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto root = dag.rootOf(entries_[i]);
        if (!root) throw UsageError("representative query " + std::to_string(entries_[i]) + " is not in the DAG");
        auto [it, fresh] = slot.emplace(*root, out.size());
        if (fresh) out.push_back({*root, 0});
        out[it->second].weight += positionWeight(i);
    }
    return out;
}

}  // namespace qcache
