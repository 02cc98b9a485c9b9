#include "qcache/cache.hpp"

#include <algorithm>
#include <stdexcept>

namespace qcache {

CacheState::CacheState(double capacityBlocks) : capacity_(capacityBlocks) {
    if (!(capacity_ >= 0)) throw UsageError("cache capacity must be non-negative");
}

double CacheState::usedBlocks() const {
    double used = 0;
    for (const auto& e : entries_) used += e.sizeBlocks;
    return used;
}

double CacheState::markedBlocks() const {
    double used = 0;
    for (const auto& e : entries_)
        if (e.marked) used += e.sizeBlocks;
    return used;
}

CacheEntry* CacheState::find(EqId id) {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                               [](const CacheEntry& e, EqId v) { return e.node < v; });
    return it != entries_.end() && it->node == id ? &*it : nullptr;
}

bool CacheState::contains(EqId id) const { return const_cast<CacheState*>(this)->find(id) != nullptr; }

const CacheEntry& CacheState::entry(EqId id) const {
    const auto* e = const_cast<CacheState*>(this)->find(id);
    if (!e) throw UsageError("e" + std::to_string(id) + " is not cached");
    return *e;
}

MaterializedSet CacheState::materialized() const {
    std::vector<EqId> ids;
    for (const auto& e : entries_) ids.push_back(e.node);
    return MaterializedSet(std::move(ids));
}

std::vector<EqId> CacheState::markedNodes() const {
    std::vector<EqId> ids;
    for (const auto& e : entries_)
        if (e.marked) ids.push_back(e.node);
    return ids;
}

bool CacheState::admit(EqId id, double sizeBlocks, std::uint64_t stamp, bool marked) {
    if (contains(id)) throw UsageError("e" + std::to_string(id) + " is already cached");
    if (!(sizeBlocks >= 0)) throw UsageError("cache entry size must be non-negative");
    if (usedBlocks() + sizeBlocks > capacity_) return false;
    auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                               [](const CacheEntry& e, EqId v) { return e.node < v; });
    entries_.insert(it, CacheEntry{id, sizeBlocks, marked, stamp});
    return true;
}

void CacheState::evict(EqId id) {
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const CacheEntry& e) { return e.node == id; });
    if (it == entries_.end()) throw UsageError("e" + std::to_string(id) + " is not cached");
    entries_.erase(it);
}

void CacheState::touch(EqId id, std::uint64_t stamp) {
    if (auto* e = find(id)) e->lastUse = std::max(e->lastUse, stamp);
}

void CacheState::setMarked(EqId id, bool marked) {
    auto* e = find(id);
    if (!e) throw UsageError("e" + std::to_string(id) + " is not cached");
    e->marked = marked;
}

std::optional<std::vector<EqId>> CacheState::lcsLruEvict(double neededBlocks, const std::vector<EqId>& protect) {
    double available = freeBlocks();
    if (available >= neededBlocks) return std::vector<EqId>{};
    std::vector<const CacheEntry*> victims;
    for (const auto& e : entries_)
        if (!e.marked && std::find(protect.begin(), protect.end(), e.node) == protect.end()) victims.push_back(&e);
    std::sort(victims.begin(), victims.end(), [](const CacheEntry* a, const CacheEntry* b) {
        if (a->sizeBlocks != b->sizeBlocks) return a->sizeBlocks > b->sizeBlocks;
        if (a->lastUse != b->lastUse) return a->lastUse < b->lastUse;
        return a->node < b->node;
    });
    std::vector<EqId> chosen;
    for (const auto* v : victims) {
        if (available >= neededBlocks) break;
        available += v->sizeBlocks;
        chosen.push_back(v->node);
    }
    if (available < neededBlocks) return std::nullopt;
    for (EqId id : chosen) evict(id);
    return chosen;
}

void CacheState::remap(const QueryDag& dag) {
    bool changed = false;
    for (auto& e : entries_) {
        const EqId r = dag.resolve(e.node);
        if (r != e.node) {
            e.node = r;
            changed = true;
        }
    }
    if (!changed) return;
    std::sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) { return a.node < b.node; });
    std::vector<CacheEntry> merged;
    for (const auto& e : entries_) {
        if (!merged.empty() && merged.back().node == e.node) {
            auto& m = merged.back();
            m.marked = m.marked || e.marked;
            m.lastUse = std::max(m.lastUse, e.lastUse);
            m.sizeBlocks = dag.node(e.node).sizeBlocks();
        } else {
            merged.push_back(e);
        }
    }
    entries_ = std::move(merged);
}

void CacheState::checkCapacity() const {
    const double used = usedBlocks();
    if (used > capacity_)
        throw std::logic_error("cache holds " + std::to_string(used) + " blocks, capacity " +
                               std::to_string(capacity_));
}

}  // namespace qcache
