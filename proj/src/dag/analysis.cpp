#include "qcache/dag.hpp"

#include <algorithm>
#include <cstdint>
#include <unordered_map>

namespace qcache {

namespace {

using Bits = std::vector<std::uint64_t>;

bool intersects(const Bits& a, const Bits& b, std::vector<std::size_t>& out) {
    bool any = false;
    for (std::size_t w = 0; w < a.size(); ++w) {
        std::uint64_t both = a[w] & b[w];
        while (both) {
            const int bit = __builtin_ctzll(both);
            out.push_back(w * 64 + static_cast<std::size_t>(bit));
            both &= both - 1;
            any = true;
        }
    }
    return any;
}

}  // namespace

std::vector<EqId> QueryDag::sharableNodes() const {
    // Compact index over nodes reachable from any root, in post-order.
    std::unordered_map<EqId, std::size_t> index;
    std::vector<EqId> order;
    for (const auto& [qid, root] : roots_) {
        if (index.count(root)) continue;
        std::vector<std::pair<EqId, bool>> stack{{root, false}};
        while (!stack.empty()) {
            auto [e, expanded] = stack.back();
            stack.pop_back();
            if (index.count(e)) continue;
            if (expanded) {
                index.emplace(e, order.size());
                order.push_back(e);
                continue;
            }
            stack.emplace_back(e, true);
            for (OpId o : nodes_[e].childOps)
                for (EqId in : ops_[o].inputs)
                    if (!index.count(in)) stack.emplace_back(in, false);
        }
    }
    const std::size_t n = order.size();
    const std::size_t words = (n + 63) / 64;
    std::vector<Bits> desc(n, Bits(words, 0));
    for (std::size_t i = 0; i < n; ++i) {
        Bits& d = desc[i];
        d[i / 64] |= std::uint64_t{1} << (i % 64);
        for (OpId o : nodes_[order[i]].childOps)
            for (EqId in : ops_[o].inputs) {
                const Bits& c = desc[index.at(in)];
                for (std::size_t w = 0; w < words; ++w) d[w] |= c[w];
            }
    }

    std::vector<char> sharable(n, 0);
    std::vector<std::uint32_t> count(n, 0);
    std::vector<EqId> distinctRoots;
    for (const auto& [qid, root] : roots_) distinctRoots.push_back(root);
    std::sort(distinctRoots.begin(), distinctRoots.end());
    distinctRoots.erase(std::unique(distinctRoots.begin(), distinctRoots.end()), distinctRoots.end());
    for (EqId root : distinctRoots) {
        const Bits& d = desc[index.at(root)];
        for (std::size_t i = 0; i < n; ++i)
            if ((d[i / 64] >> (i % 64)) & 1U)
                if (++count[i] >= 2) sharable[i] = 1;
    }
    std::vector<std::size_t> common;
    for (std::size_t i = 0; i < n; ++i) {
        for (OpId o : nodes_[order[i]].childOps) {
            const auto& ins = ops_[o].inputs;
            for (std::size_t a = 0; a < ins.size(); ++a)
                for (std::size_t b = a + 1; b < ins.size(); ++b) {
                    common.clear();
                    if (intersects(desc[index.at(ins[a])], desc[index.at(ins[b])], common))
                        for (std::size_t c : common) sharable[c] = 1;
                }
        }
    }
    std::vector<EqId> out;
    for (std::size_t i = 0; i < n; ++i)
        if (sharable[i]) out.push_back(order[i]);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace qcache
