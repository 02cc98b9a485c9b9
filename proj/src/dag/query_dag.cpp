#include "qcache/dag.hpp"
#include "qcache/detail/overloaded.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qcache {

namespace {

using detail::Overloaded;

void eraseValue(std::vector<OpId>& v, OpId x) { v.erase(std::remove(v.begin(), v.end(), x), v.end()); }

void insertSorted(std::vector<OpId>& v, OpId x) {
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it == v.end() || *it != x) v.insert(it, x);
}

}  // namespace

QueryDag::QueryDag(const Catalog& catalog, CostParams params) : catalog_(&catalog), params_(params) {
    params_.validate();
    if (params_.blockSizeBytes != static_cast<double>(catalog.blockSizeBytes()))
        throw UsageError("cost parameters and catalog disagree on the block size");
}

namespace {

void mix(std::size_t& h, std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); }

std::size_t hashPredicate(const Predicate& p) {
    std::size_t h = static_cast<std::size_t>(p.kind());
    if (p.kind() == Predicate::Kind::Atom) {
        const auto& a = p.atomValue();
        mix(h, std::hash<std::string>{}(a.attribute));
        mix(h, static_cast<std::size_t>(a.op));
        mix(h, std::hash<std::int64_t>{}(a.constant));
    } else {
        for (const auto& c : p.children()) mix(h, hashPredicate(c));
    }
    return h;
}

std::size_t operationHash(const Operator& op, const std::vector<EqId>& inputs) {
    std::size_t h = op.index();
    std::visit(Overloaded{
                   [&](const SelectOp& s) { mix(h, hashPredicate(s.predicate)); },
                   [&](const JoinOp& j) {
                       for (const auto& c : j.conditions) {
                           mix(h, std::hash<std::string>{}(c.left));
                           mix(h, std::hash<std::string>{}(c.right));
                       }
                   },
                   [&](const GroupAggOp& g) {
                       for (const auto& a : g.groupBy) mix(h, std::hash<std::string>{}(a));
                       mix(h, std::hash<std::string>{}(g.aggregate.input));
                       mix(h, std::hash<std::string>{}(g.aggregate.output));
                   },
               },
               op);
    for (EqId id : inputs) mix(h, id);
    return h;
}

}  // namespace

std::optional<OpId> QueryDag::lookupOperation(const Operator& canonicalOp, const std::vector<EqId>& inputs) const {
    auto [lo, hi] = opIndex_.equal_range(operationHash(canonicalOp, inputs));
    for (auto it = lo; it != hi; ++it) {
        const auto& o = ops_[it->second];
        if (o.inputs == inputs && o.op == canonicalOp) return o.id;
    }
    return std::nullopt;
}

void QueryDag::indexOperation(OpId id) { opIndex_.emplace(operationHash(ops_[id].op, ops_[id].inputs), id); }

void QueryDag::unindexOperation(OpId id) {
    auto [lo, hi] = opIndex_.equal_range(operationHash(ops_[id].op, ops_[id].inputs));
    for (auto it = lo; it != hi; ++it)
        if (it->second == id) {
            opIndex_.erase(it);
            return;
        }
}

EqId QueryDag::resolve(EqId id) const {
    for (auto it = forward_.find(id); it != forward_.end(); it = forward_.find(id)) id = it->second;
    return id;
}

const EquivalenceNode& QueryDag::node(EqId id) const {
    if (id >= nodes_.size()) throw UsageError("unknown equivalence node " + std::to_string(id));
    return nodes_[id];
}

const OperationNode& QueryDag::op(OpId id) const {
    if (id >= ops_.size()) throw UsageError("unknown operation node " + std::to_string(id));
    return ops_[id];
}

std::optional<EqId> QueryDag::findBySignature(const std::string& signature) const {
    if (auto it = signatureIndex_.find(signature); it != signatureIndex_.end()) return it->second;
    if (auto it = aliases_.find(signature); it != aliases_.end()) {
        const EqId id = resolve(it->second);
        if (isAlive(id)) return id;
    }
    return std::nullopt;
}

namespace {

Operator canonicalOperator(const Operator& op) {
    return std::visit(Overloaded{
                          [](const SelectOp& s) -> Operator { return SelectOp{canonicalize(s.predicate)}; },
                          [](const JoinOp& j) -> Operator { return JoinOp{canonicalConditions(j.conditions)}; },
                          [](const GroupAggOp& g) -> Operator { return g; },
                      },
                      op);
}

}  // namespace

std::optional<OpId> QueryDag::findOperation(const Operator& op, const std::vector<EqId>& inputs) const {
    std::vector<EqId> resolved;
    for (EqId id : inputs) resolved.push_back(resolve(id));
    return lookupOperation(canonicalOperator(op), resolved);
}

std::vector<EqId> QueryDag::liveNodes() const {
    std::vector<EqId> out;
    for (EqId id : liveList_)
        if (nodes_[id].alive) out.push_back(id);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<OpId> QueryDag::liveOps() const {
    std::vector<OpId> out;
    for (const auto& o : ops_)
        if (o.alive) out.push_back(o.id);
    return out;
}

std::optional<EqId> QueryDag::rootOf(QueryId queryId) const {
    for (const auto& [qid, root] : roots_)
        if (qid == queryId) return root;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Construction

EqId QueryDag::getOrCreate(const LogicalFormPtr& form) {
    if (auto found = findBySignature(form->key)) return *found;
    EquivalenceNode n;
    n.id = static_cast<EqId>(nodes_.size());
    n.signature = form->key;
    if (form->kind == LogicalForm::Kind::Relation) n.baseRelation = form->relation;
    n.form = form;
    n.estimate = estimateForm(*form, *catalog_);
    n.reuseCostMs = reuseCost(n.estimate, params_);
    n.materializationCostMs = materializationCost(n.estimate, params_);
    n.estimate.distinct.clear();  // only needed while deriving the estimate
    signatureIndex_.emplace(n.signature, n.id);
    liveList_.push_back(n.id);
    createdSinceGc_.push_back(n.id);
    nodes_.push_back(std::move(n));
    ++liveNodeCount_;
    touch();
    return nodes_.back().id;
}

EqId QueryDag::leafNode(const std::string& relation) {
    return getOrCreate(LogicalForm::forRelation(catalog_->relation(relation)));
}

EqId QueryDag::addOperation(Operator op, std::vector<EqId> inputs, bool derived) {
    op = canonicalOperator(op);
    for (auto& id : inputs) id = resolve(id);
    if (auto found = lookupOperation(op, inputs)) return ops_[*found].output;
    std::vector<LogicalFormPtr> forms;
    for (EqId id : inputs) forms.push_back(nodes_[id].form);
    const EqId out = getOrCreate(LogicalForm::apply(op, forms));
    return addOperationInto(std::move(op), std::move(inputs), out, derived);
}

EqId QueryDag::addOperationInto(Operator op, std::vector<EqId> inputs, EqId output, bool derived) {
    op = canonicalOperator(op);
    for (auto& id : inputs) id = resolve(id);
    output = resolve(output);
    if (std::find(inputs.begin(), inputs.end(), output) != inputs.end()) return output;
    if (auto found = lookupOperation(op, inputs)) {
        const EqId existing = ops_[*found].output;
        if (existing == output) return output;
        return mergeNodes(existing, output);
    }

    OperationNode on;
    on.id = static_cast<OpId>(ops_.size());
    on.inputs = inputs;
    on.output = output;
    on.derived = derived;
    std::vector<InputAccess> access;
    for (EqId id : inputs) access.push_back({&nodes_[id].estimate, nodes_[id].isLeaf()});
    on.execCostMs = operatorCost(op, access, nodes_[output].estimate, params_);
    const bool pairable = !derived && !std::holds_alternative<JoinOp>(op);
    on.op = std::move(op);
    const OpId id = on.id;
    ops_.push_back(std::move(on));
    indexOperation(id);
    for (EqId in : inputs) insertSorted(nodes_[in].parentOps, id);
    insertSorted(nodes_[output].childOps, id);
    pendingExpansion_.push_back(id);
    for (OpId parent : nodes_[output].parentOps) pendingPairs_.emplace_back(parent, id);
    if (pairable) pendingSubsumption_.push_back(id);
    ++liveOpCount_;
    touch();
    return output;
}

EqId QueryDag::mergeNodes(EqId first, EqId second) {
    std::deque<std::pair<EqId, EqId>> work{{first, second}};
    while (!work.empty()) {
        auto [a, b] = work.front();
        work.pop_front();
        a = resolve(a);
        b = resolve(b);
        if (a == b) continue;
        const EqId s = std::min(a, b), d = std::max(a, b);
        if (nodes_[d].isLeaf() || nodes_[s].isLeaf())
            throw std::logic_error("attempt to unify a base relation with a derived result");
        // Absorb d into s.
        for (OpId o : std::vector<OpId>(nodes_[d].childOps)) {
            auto& on = ops_[o];
            if (std::find(on.inputs.begin(), on.inputs.end(), s) != on.inputs.end()) {
                deleteOperation(o);
                continue;
            }
            on.output = s;
            insertSorted(nodes_[s].childOps, o);
            pendingExpansion_.push_back(o);
        }
        nodes_[d].childOps.clear();
        for (OpId o : std::vector<OpId>(nodes_[d].parentOps)) {
            auto& on = ops_[o];
            if (!on.alive) continue;
            unindexOperation(o);
            std::replace(on.inputs.begin(), on.inputs.end(), d, s);
            eraseValue(nodes_[d].parentOps, o);
            if (on.output == s) {
                for (EqId in : on.inputs) eraseValue(nodes_[in].parentOps, o);
                eraseValue(nodes_[s].childOps, o);
                on.alive = false;
                --liveOpCount_;
                continue;
            }
            if (auto k = lookupOperation(on.op, on.inputs)) {
                const EqId other = ops_[*k].output;
                for (EqId in : on.inputs) eraseValue(nodes_[in].parentOps, o);
                eraseValue(nodes_[on.output].childOps, o);
                on.alive = false;
                --liveOpCount_;
                if (other != on.output) work.emplace_back(other, on.output);
                continue;
            }
            indexOperation(o);
            insertSorted(nodes_[s].parentOps, o);
            pendingExpansion_.push_back(o);
        }
        auto& dn = nodes_[d];
        signatureIndex_.erase(dn.signature);
        aliases_[dn.signature] = s;
        forward_[d] = s;
        nodes_[s].pinned = nodes_[s].pinned || dn.pinned;
        dn.alive = false;
        dn.pinned = false;
        gcDirty_ = true;
        dn.parentOps.clear();
        --liveNodeCount_;
        for (auto& [qid, root] : roots_)
            if (root == d) root = s;
        for (OpId o : nodes_[s].parentOps) {
            pendingExpansion_.push_back(o);
            if (!ops_[o].derived && !std::holds_alternative<JoinOp>(ops_[o].op)) pendingSubsumption_.push_back(o);
        }
        touch();
    }
    return resolve(first);
}

void QueryDag::deleteOperation(OpId id) {
    auto& on = ops_[id];
    if (!on.alive) return;
    unindexOperation(id);
    gcDirty_ = true;
    for (EqId in : on.inputs) eraseValue(nodes_[in].parentOps, id);
    eraseValue(nodes_[on.output].childOps, id);
    on.alive = false;
    --liveOpCount_;
    touch();
}

EqId QueryDag::insertTree(const QueryTree& t) {
    return std::visit(
        Overloaded{
            [&](const ScanNode& s) { return leafNode(s.relation); },
            [&](const SelectNode& s) {
                const EqId in = insertTree(*s.child);
                return addOperation(SelectOp{canonicalize(s.predicate, nodes_[in].schema())}, {in}, false);
            },
            [&](const JoinNode& j) {
                const EqId l = insertTree(*j.left);
                const EqId r = insertTree(*j.right);
                return addOperation(JoinOp{j.conditions}, {l, r}, false);
            },
            [&](const GroupAggNode& g) {
                const EqId in = insertTree(*g.child);
                return addOperation(GroupAggOp{g.groupBy, g.aggregate}, {in}, false);
            },
        },
        t.node);
}

EqId QueryDag::insertQuery(const QueryTree& q, QueryId queryId) {
    if (rootOf(queryId)) throw UsageError("query id " + std::to_string(queryId) + " already registered");
    validate(q, *catalog_);
    const EqId root = resolve(insertTree(q));
    roots_.emplace_back(queryId, root);
    touch();
    return root;
}

void QueryDag::removeQuery(QueryId queryId) {
    auto it = std::find_if(roots_.begin(), roots_.end(), [&](const auto& r) { return r.first == queryId; });
    if (it == roots_.end()) throw UsageError("query id " + std::to_string(queryId) + " is not registered");
    roots_.erase(it);
    gcDirty_ = true;
    collectGarbage();
    touch();
}

EqId QueryDag::unify(EqId a, EqId b) {
    a = resolve(a);
    b = resolve(b);
    if (!isAlive(a) || !isAlive(b)) throw UsageError("unify on a dead node");
    if (a == b) return a;
    if (nodes_[a].isLeaf() || nodes_[b].isLeaf()) throw UsageError("cannot unify a base relation");
    const EqId s = mergeNodes(a, b);
    collectGarbage();
    touch();
    return resolve(s);
}

void QueryDag::setPinned(EqId id, bool pinned) {
    id = resolve(id);
    if (!isAlive(id)) throw UsageError("pin on a dead node");
    if (nodes_[id].pinned == pinned) return;
    nodes_[id].pinned = pinned;
    if (!pinned) {
        gcDirty_ = true;
        collectGarbage();
    }
    touch();
}

// ---------------------------------------------------------------------------
// Reachability and deletion

std::uint32_t QueryDag::referenceCount(EqId id) const {
    if (!isAlive(id)) throw UsageError("e" + std::to_string(id) + " is not a live node");
    refreshReferenceCounts();
    return refCounts_[id];
}

void QueryDag::refreshReferenceCounts() const {
    if (refCountsVersion_ == version_) return;
    refCounts_.assign(nodes_.size(), 0);
    std::vector<std::uint32_t> stamp(nodes_.size(), 0);
    std::uint32_t epoch = 0;
    std::vector<EqId> stack;
    for (const auto& [qid, root] : roots_) {
        ++epoch;
        stack.assign(1, root);
        stamp[root] = epoch;
        while (!stack.empty()) {
            const EqId e = stack.back();
            stack.pop_back();
            ++refCounts_[e];
            for (OpId o : nodes_[e].childOps)
                for (EqId in : ops_[o].inputs)
                    if (stamp[in] != epoch) {
                        stamp[in] = epoch;
                        stack.push_back(in);
                    }
        }
    }
    refCountsVersion_ = version_;
}

void QueryDag::collectGarbage() {
    if (!gcDirty_) {
        // Only fresh nodes can be unreachable; a fresh node without parents
        // that is neither a root nor pinned heads any unreachable chain.
        bool orphan = false;
        for (EqId id : createdSinceGc_) {
            const auto& n = nodes_[id];
            if (!n.alive || !n.parentOps.empty() || n.pinned) continue;
            if (std::none_of(roots_.begin(), roots_.end(), [&](const auto& r) { return r.second == id; })) {
                orphan = true;
                break;
            }
        }
        if (!orphan) {
            createdSinceGc_.clear();
            return;
        }
    }
    std::vector<char> keep(nodes_.size(), 0);
    std::vector<EqId> stack;
    for (const auto& [qid, root] : roots_) stack.push_back(root);
    for (EqId id : liveList_)
        if (nodes_[id].alive && nodes_[id].pinned) stack.push_back(id);
    for (EqId e : stack) keep[e] = 1;
    while (!stack.empty()) {
        const EqId e = stack.back();
        stack.pop_back();
        for (OpId o : nodes_[e].childOps)
            for (EqId in : ops_[o].inputs)
                if (!keep[in]) {
                    keep[in] = 1;
                    stack.push_back(in);
                }
    }
    bool removed = false;
    std::vector<EqId> survivors;
    for (EqId id : liveList_) {
        auto& n = nodes_[id];
        if (!n.alive) continue;
        if (keep[id]) {
            survivors.push_back(id);
            continue;
        }
        for (OpId o : std::vector<OpId>(n.childOps)) deleteOperation(o);
        for (OpId o : std::vector<OpId>(n.parentOps)) deleteOperation(o);
        signatureIndex_.erase(n.signature);
        n.alive = false;
        --liveNodeCount_;
        removed = true;
    }
    liveList_ = std::move(survivors);
    createdSinceGc_.clear();
    gcDirty_ = false;
    if (removed) {
        for (auto it = aliases_.begin(); it != aliases_.end();) {
            if (!isAlive(resolve(it->second))) it = aliases_.erase(it);
            else ++it;
        }
        touch();
    }
}

// ---------------------------------------------------------------------------
// Checks and export

void QueryDag::checkInvariants() const {
    auto fail = [](const std::string& what) { throw std::logic_error("dag invariant violated: " + what); };
    std::size_t liveN = 0, liveO = 0;
    std::map<std::string, EqId> sigs;
    for (const auto& n : nodes_) {
        if (!n.alive) continue;
        ++liveN;
        if (n.isLeaf() && !n.childOps.empty()) fail("leaf e" + std::to_string(n.id) + " has child operations");
        if (!sigs.emplace(n.signature, n.id).second) fail("duplicate signature " + n.signature);
        for (OpId o : n.childOps)
            if (!ops_[o].alive || ops_[o].output != n.id) fail("child op link of e" + std::to_string(n.id));
        for (OpId o : n.parentOps) {
            const auto& in = ops_[o].inputs;
            if (!ops_[o].alive || std::find(in.begin(), in.end(), n.id) == in.end())
                fail("parent op link of e" + std::to_string(n.id));
        }
    }
    if (liveN != liveNodeCount_) fail("live node count");
    if (sigs.size() != signatureIndex_.size()) fail("signature index size");
    for (const auto& [sig, id] : signatureIndex_) {
        auto it = sigs.find(sig);
        if (it == sigs.end() || it->second != id) fail("signature index entry " + sig);
    }
    std::size_t indexed = 0;
    for (const auto& o : ops_) {
        if (!o.alive) continue;
        ++liveO;
        if (!isAlive(o.output)) fail("op o" + std::to_string(o.id) + " has dead output");
        const auto& outChildren = nodes_[o.output].childOps;
        if (!std::binary_search(outChildren.begin(), outChildren.end(), o.id)) fail("output link of op");
        for (EqId in : o.inputs) {
            if (!isAlive(in)) fail("op o" + std::to_string(o.id) + " has dead input");
            if (in == o.output) fail("self loop at op o" + std::to_string(o.id));
            const auto& parents = nodes_[in].parentOps;
            if (!std::binary_search(parents.begin(), parents.end(), o.id)) fail("input link of op");
        }
        const auto found = lookupOperation(o.op, o.inputs);
        if (!found || *found != o.id) fail("operation index entry for o" + std::to_string(o.id) + " " + toString(o.op));
        ++indexed;
    }
    if (liveO != liveOpCount_) fail("live op count");
    if (indexed != opIndex_.size()) fail("operation index size");

    // Acyclicity by iterative DFS with colors.
    std::vector<char> color(nodes_.size(), 0);
    for (const auto& n : nodes_) {
        if (!n.alive || color[n.id]) continue;
        std::vector<std::pair<EqId, std::size_t>> stack{{n.id, 0}};
        color[n.id] = 1;
        while (!stack.empty()) {
            auto& [e, next] = stack.back();
            std::vector<EqId> succ;
            for (OpId o : nodes_[e].childOps)
                for (EqId in : ops_[o].inputs) succ.push_back(in);
            if (next < succ.size()) {
                const EqId s = succ[next++];
                if (color[s] == 1) fail("cycle through e" + std::to_string(s));
                if (color[s] == 0) {
                    color[s] = 1;
                    stack.emplace_back(s, 0);
                }
            } else {
                color[e] = 2;
                stack.pop_back();
            }
        }
    }

    // Reference counts against a fresh reachability count.
    std::vector<std::uint32_t> counts(nodes_.size(), 0);
    for (const auto& [qid, root] : roots_) {
        if (!isAlive(root)) fail("registered root is dead");
        std::vector<char> seen(nodes_.size(), 0);
        std::vector<EqId> stack{root};
        seen[root] = 1;
        while (!stack.empty()) {
            const EqId e = stack.back();
            stack.pop_back();
            ++counts[e];
            for (OpId o : nodes_[e].childOps)
                for (EqId in : ops_[o].inputs)
                    if (!seen[in]) {
                        seen[in] = 1;
                        stack.push_back(in);
                    }
        }
    }
    for (const auto& n : nodes_)
        if (n.alive && referenceCount(n.id) != counts[n.id]) fail("refCount of e" + std::to_string(n.id));
}

std::string QueryDag::toDot() const {
    std::ostringstream out;
    out << "digraph dag {\n";
    for (const auto& n : nodes_) {
        if (!n.alive) continue;
        std::string label = n.signature;
        std::replace(label.begin(), label.end(), '"', '\'');
        out << "  e" << n.id << " [shape=ellipse,label=\"e" << n.id << " ref=" << referenceCount(n.id)
            << (n.pinned ? " pinned" : "") << "\\n" << label << "\"];\n";
    }
    for (const auto& o : ops_) {
        if (!o.alive) continue;
        std::string label = toString(o.op);
        std::replace(label.begin(), label.end(), '"', '\'');
        out << "  o" << o.id << " [shape=box,label=\"o" << o.id << (o.derived ? " derived" : "") << "\\n"
            << label << "\"];\n";
        out << "  e" << o.output << " -> o" << o.id << ";\n";
        for (EqId in : o.inputs) out << "  o" << o.id << " -> e" << in << ";\n";
    }
    out << "}\n";
    return out.str();
}

}  // namespace qcache
