#include "qcache/dag.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>

namespace qcache {

class SubsumptionPass {
public:
    explicit SubsumptionPass(QueryDag& dag) : dag_(dag) {}

    void run() {
        expandNow();
        while (!dag_.pendingSubsumption_.empty()) {
            std::vector<OpId> batch;
            batch.swap(dag_.pendingSubsumption_);
            std::sort(batch.begin(), batch.end());
            batch.erase(std::unique(batch.begin(), batch.end()), batch.end());
            for (OpId o : batch) process(o);
            expandNow();
        }
    }

private:
    // expand() also collects garbage, which is safe between rounds.
    void expandNow() { dag_.expand(); }

    const OperationNode& op(OpId id) const { return dag_.ops_[id]; }

    bool pairable(OpId id) const {
        const auto& o = op(id);
        return o.alive && !o.derived && o.inputs.size() == 1 && !std::holds_alternative<JoinOp>(o.op);
    }

    // Pairs a new select or group-by with every other one over the same input.
    void process(OpId id) {
        if (!pairable(id)) return;
        const EqId x = op(id).inputs[0];
        std::vector<OpId> siblings;
        for (OpId o : dag_.nodes_[x].parentOps)
            if (o != id && pairable(o) && op(o).inputs[0] == x) siblings.push_back(o);
        if (std::holds_alternative<SelectOp>(op(id).op)) {
            for (OpId o : siblings) {
                if (!pairable(id)) return;
                if (pairable(o) && std::holds_alternative<SelectOp>(op(o).op)) pairSelects(id, o);
            }
            if (pairable(id)) equalityGroup(id);
        } else {
            for (OpId o : siblings) {
                if (!pairable(id)) return;
                if (pairable(o) && std::holds_alternative<GroupAggOp>(op(o).op)) pairGroups(id, o);
            }
        }
    }

    void pairSelects(OpId i, OpId j) {
        const Predicate& pi = std::get<SelectOp>(op(i).op).predicate;
        const Predicate& pj = std::get<SelectOp>(op(j).op).predicate;
        const EqId a = op(i).output, b = op(j).output;
        if (a == b) return;
        const std::uint32_t ki = predicateId(i), kj = predicateId(j);
        const bool ij = impliesById(ki, kj);
        const bool ji = impliesById(kj, ki);
        // sel[p](E) == sel[p](sel[q](E)) when p implies q.
        if (ij && ji) dag_.mergeNodes(a, b);
        else if (ij) dag_.addOperationInto(SelectOp{pi}, {b}, a, true);
        else if (ji) dag_.addOperationInto(SelectOp{pj}, {a}, b, true);
    }

    std::uint32_t predicateId(OpId id) {
        auto& ids = dag_.opPredicateIds_;
        if (ids.size() <= id) ids.resize(dag_.ops_.size(), 0);
        if (!ids[id]) {
            const auto& p = std::get<SelectOp>(op(id).op).predicate;
            auto [it, fresh] = dag_.predicateIds_.emplace(p.toString(), dag_.predicateIds_.size());
            if (fresh) {
                dag_.predicateForms_.push_back(implicationForm(p));
                dag_.predicateMasks_.push_back(masksOf(dag_.predicateForms_.back()));
            }
            ids[id] = it->second + 1;
        }
        return ids[id] - 1;
    }

    QueryDag::PredicateMasks masksOf(const ImplicationForm& f) {
        QueryDag::PredicateMasks m;
        auto bit = [&](const std::string& attr) -> std::uint64_t {
            auto [it, fresh] = dag_.attributeBits_.emplace(attr, dag_.attributeBits_.size());
            if (it->second >= 64) {
                m.exact = false;
                return 0;
            }
            return std::uint64_t{1} << it->second;
        };
        for (const auto& [attr, set] : f.ranges) {
            const std::uint64_t b = bit(attr);
            m.has |= b;
            constexpr std::pair<std::int64_t, std::int64_t> all{std::numeric_limits<std::int64_t>::min(),
                                                                std::numeric_limits<std::int64_t>::max()};
            if (!(set.size() == 1 && set.front() == all)) m.needs |= b;
        }
        for (const auto& c : f.multi)
            for (const auto& attr : attributesOf(c).names()) {
                const std::uint64_t b = bit(attr);
                m.has |= b;
                m.needs |= b;
            }
        return m;
    }

    bool impliesById(std::uint32_t p, std::uint32_t q) {
        const auto& mp = dag_.predicateMasks_[p];
        const auto& mq = dag_.predicateMasks_[q];
        if (mp.exact && mq.exact && !dag_.predicateForms_[p].unsatisfiable && (mq.needs & ~mp.has)) return false;
        const std::uint64_t key = (std::uint64_t{p} << 32) | q;
        auto it = dag_.impliesMemo_.find(key);
        if (it == dag_.impliesMemo_.end())
            it = dag_.impliesMemo_.emplace(key, implies(dag_.predicateForms_[p], dag_.predicateForms_[q])).first;
        return it->second;
    }

    static const Atom* singleEquality(const Operator& o) {
        const auto* s = std::get_if<SelectOp>(&o);
        if (!s || s->predicate.kind() != Predicate::Kind::Atom) return nullptr;
        return s->predicate.atomValue().op == Comparator::Eq ? &s->predicate.atomValue() : nullptr;
    }

    void equalityGroup(OpId id) {
        const Atom* atom = singleEquality(op(id).op);
        if (!atom) return;
        const std::string attr = atom->attribute;
        const EqId x = op(id).inputs[0];
        std::map<std::int64_t, std::vector<EqId>> byValue;
        for (OpId o : dag_.nodes_[x].parentOps) {
            if (!pairable(o) || op(o).inputs[0] != x) continue;
            const Atom* a = singleEquality(op(o).op);
            if (a && a->attribute == attr) byValue[a->constant].push_back(op(o).output);
        }
        if (byValue.size() < 2) return;
        std::vector<Predicate> atoms;
        for (const auto& [value, nodes] : byValue) atoms.push_back(Predicate::atom(attr, Comparator::Eq, value));
        const EqId d = dag_.addOperation(SelectOp{Predicate::disjunction(atoms)}, {x}, false);
        for (const auto& [value, nodes] : byValue)
            for (EqId n : nodes) {
                const EqId target = dag_.resolve(n);
                if (!dag_.isAlive(target)) continue;
                dag_.addOperationInto(SelectOp{Predicate::atom(attr, Comparator::Eq, value)}, {dag_.resolve(d)}, target,
                                      true);
            }
    }

    void pairGroups(OpId i, OpId j) {
        const GroupAggOp gi = std::get<GroupAggOp>(op(i).op);
        const GroupAggOp gj = std::get<GroupAggOp>(op(j).op);
        const EqId x = op(i).inputs[0];
        const EqId ni = op(i).output, nj = op(j).output;
        if (gi.aggregate != gj.aggregate || gi.groupBy == gj.groupBy) return;
        if (gj.groupBy.includes(gi.groupBy)) {
            rollup(gi, nj, ni);
        } else if (gi.groupBy.includes(gj.groupBy)) {
            rollup(gj, ni, nj);
        } else {
            const GroupAggOp merged{gi.groupBy.unite(gj.groupBy), gi.aggregate};
            const EqId u = dag_.addOperation(merged, {x}, false);
            rollup(gi, u, ni);
            rollup(gj, u, nj);
        }
    }

    // coarse == group[coarse.groupBy; rollup](fine)
    void rollup(const GroupAggOp& coarse, EqId fine, EqId target) {
        fine = dag_.resolve(fine);
        target = dag_.resolve(target);
        if (fine == target || !dag_.isAlive(fine) || !dag_.isAlive(target)) return;
        dag_.addOperationInto(GroupAggOp{coarse.groupBy, Aggregate::rollup(coarse.aggregate)}, {fine}, target, true);
    }

    QueryDag& dag_;
};

void QueryDag::addSubsumptionDerivations() {
    SubsumptionPass(*this).run();
    collectGarbage();
    touch();
}

}  // namespace qcache
