#include "qcache/costmodel.hpp"
#include "qcache/detail/overloaded.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace qcache {

namespace {

constexpr double kMinSelectivity = 1e-9;
constexpr double kAggregateWidthBytes = 8;

void checkFinite(const Estimate& e) {
    if (!std::isfinite(e.rows) || !std::isfinite(e.blocks) || !std::isfinite(e.widthBytes) || e.rows < 0 ||
        e.blocks < 0 || e.widthBytes <= 0)
        throw EstimationError("estimate is negative or not finite");
}

double atomSelectivity(const Atom& a, const Catalog& catalog) {
    const auto* info = catalog.findAttribute(a.attribute);
    if (!info) throw EstimationError("no statistics for attribute '" + a.attribute + "'");
    if (a.op == Comparator::Eq) {
        if (a.constant < info->minValue || a.constant > info->maxValue) return 0;
        return 1.0 / static_cast<double>(info->distinctCount);
    }
    const double lo = static_cast<double>(info->minValue);
    const double hi = static_cast<double>(info->maxValue);
    const double domain = hi - lo + 1;
    const double c = static_cast<double>(a.constant);
    double from = lo, to = hi;
    switch (a.op) {
        case Comparator::Lt: to = std::min(hi, c - 1); break;
        case Comparator::Le: to = std::min(hi, c); break;
        case Comparator::Gt: from = std::max(lo, c + 1); break;
        case Comparator::Ge: from = std::max(lo, c); break;
        case Comparator::Eq: break;
    }
    return std::max(0.0, to - from + 1) / domain;
}

double rawSelectivity(const Predicate& p, const Catalog& catalog) {
    switch (p.kind()) {
        case Predicate::Kind::Atom: return atomSelectivity(p.atomValue(), catalog);
        case Predicate::Kind::And: {
            double s = 1;
            for (const auto& c : p.children()) s *= rawSelectivity(c, catalog);
            return s;
        }
        case Predicate::Kind::Or: {
            double miss = 1;
            for (const auto& c : p.children()) miss *= 1 - rawSelectivity(c, catalog);
            return 1 - miss;
        }
    }
    return 1;
}

// Number of distinct constants if `p` is an equality or a disjunction of
// equalities on a single attribute; 0 otherwise.
std::size_t equalityValueCount(const Predicate& p) {
    if (p.kind() == Predicate::Kind::Atom) return p.atomValue().op == Comparator::Eq ? 1 : 0;
    if (p.kind() != Predicate::Kind::Or) return 0;
    std::set<std::int64_t> values;
    for (const auto& c : p.children()) {
        if (c.kind() != Predicate::Kind::Atom || c.atomValue().op != Comparator::Eq) return 0;
        values.insert(c.atomValue().constant);
    }
    return values.size();
}

double attributeWidth(const std::string& attr, const Catalog& catalog) {
    if (const auto* info = catalog.findAttribute(attr)) return static_cast<double>(info->widthBytes);
    return kAggregateWidthBytes;
}

void capDistinct(Estimate& e) {
    for (auto& [name, d] : e.distinct) d = std::min(d, e.rows);
}

}  // namespace

void CostParams::validate() const {
    if (!(blockSizeBytes > 0 && seekMs > 0 && readMsPerBlock > 0 && writeMsPerBlock > 0 && cpuMsPerBlock > 0 &&
          operatorMemoryBytes > 0))
        throw UsageError("cost parameters must all be strictly positive");
}

Estimate Estimate::make(double rows, double widthBytes, double blockSizeBytes) {
    Estimate e;
    e.rows = rows;
    e.widthBytes = widthBytes;
    e.blocks = rows * widthBytes / blockSizeBytes;
    return e;
}

double Estimate::distinctOf(const std::string& attr) const {
    auto it = distinct.find(attr);
    if (it == distinct.end()) throw EstimationError("no statistics for attribute '" + attr + "'");
    return it->second;
}

Estimate estimateBase(const RelationInfo& rel, double blockSizeBytes) {
    Estimate e = Estimate::make(static_cast<double>(rel.rowCount), static_cast<double>(rel.rowWidthBytes),
                                blockSizeBytes);
    for (const auto& a : rel.attributes)
        e.distinct[a.name] = std::min(static_cast<double>(a.distinctCount), e.rows);
    return e;
}

double selectivity(const Predicate& p, const Catalog& catalog) {
    return std::clamp(rawSelectivity(p, catalog), kMinSelectivity, 1.0);
}

Estimate estimateOutput(const Operator& op, std::span<const Estimate> inputs, const Catalog& catalog) {
    for (const auto& in : inputs) checkFinite(in);
    const double blockSize = static_cast<double>(catalog.blockSizeBytes());
    return std::visit(
        detail::Overloaded{
            [&](const SelectOp& s) {
                if (inputs.size() != 1) throw EstimationError("select expects one input");
                const Estimate& in = inputs[0];
                double rows = in.rows * selectivity(s.predicate, catalog);
                if (in.rows >= 1) rows = std::max(rows, 1.0);
                Estimate out = Estimate::make(rows, in.widthBytes, blockSize);
                out.distinct = in.distinct;
                for (const auto& c : conjunctsOf(s.predicate)) {
                    const auto attrs = attributesOf(c);
                    if (attrs.size() != 1) continue;
                    auto it = out.distinct.find(attrs.names().front());
                    if (it == out.distinct.end())
                        throw EstimationError("select on attribute missing from its input");
                    if (const auto k = equalityValueCount(c))
                        it->second = std::min(it->second, static_cast<double>(k));
                    else
                        it->second = std::max(1.0, it->second * selectivity(c, catalog));
                }
                capDistinct(out);
                return out;
            },
            [&](const JoinOp& j) {
                if (inputs.size() != 2) throw EstimationError("join expects two inputs");
                const Estimate& l = inputs[0];
                const Estimate& r = inputs[1];
                double rows = l.rows * r.rows;
                Estimate out;
                out.distinct = l.distinct;
                out.distinct.insert(r.distinct.begin(), r.distinct.end());
                for (const auto& c : j.conditions) {
                    const bool leftHasLeft = l.distinct.count(c.left) > 0;
                    const std::string& la = leftHasLeft ? c.left : c.right;
                    const std::string& ra = leftHasLeft ? c.right : c.left;
                    const double dl = l.distinctOf(la);
                    const double dr = r.distinctOf(ra);
                    const double d = std::max(dl, dr);
                    if (d > 0) rows /= d;
                    out.distinct[la] = out.distinct[ra] = std::min(dl, dr);
                }
                out.rows = rows;
                out.widthBytes = l.widthBytes + r.widthBytes;
                out.blocks = out.rows * out.widthBytes / blockSize;
                capDistinct(out);
                return out;
            },
            [&](const GroupAggOp& g) {
                if (inputs.size() != 1) throw EstimationError("group-by expects one input");
                const Estimate& in = inputs[0];
                double groups = 1;
                double width = kAggregateWidthBytes;
                for (const auto& attr : g.groupBy) {
                    groups *= in.distinctOf(attr);
                    width += attributeWidth(attr, catalog);
                }
                Estimate out = Estimate::make(std::min(in.rows, groups), width, blockSize);
                for (const auto& attr : g.groupBy) out.distinct[attr] = in.distinctOf(attr);
                out.distinct[g.aggregate.output] = out.rows;
                capDistinct(out);
                return out;
            },
        },
        op);
}

namespace {

double inputCharge(const InputAccess& in, const CostParams& p) {
    const double b = in.estimate->blocks;
    if (in.stored) return p.seekMs + b * (p.readMsPerBlock + p.cpuMsPerBlock);
    return b * p.cpuMsPerBlock;
}

double spillPass(double blocks, const CostParams& p) { return blocks * (p.writeMsPerBlock + p.readMsPerBlock); }

}  // namespace

double operatorCost(const Operator& op, std::span<const InputAccess> inputs, const Estimate& output,
                    const CostParams& params) {
    checkFinite(output);
    double cost = 0;
    for (const auto& in : inputs) {
        if (!in.estimate) throw EstimationError("missing input estimate");
        checkFinite(*in.estimate);
        cost += inputCharge(in, params);
    }
    const double memory = params.operatorMemoryBlocks();
    if (std::holds_alternative<JoinOp>(op)) {
        if (inputs.size() != 2) throw EstimationError("join expects two inputs");
        const double bl = inputs[0].estimate->blocks;
        const double br = inputs[1].estimate->blocks;
        if (std::min(bl, br) > memory) cost += spillPass(bl + br, params);
    } else if (std::holds_alternative<GroupAggOp>(op)) {
        if (inputs.size() != 1) throw EstimationError("group-by expects one input");
        const double b = inputs[0].estimate->blocks;
        if (b > memory) cost += spillPass(b, params);
    }
    return cost;
}

double scanCost(const Estimate& e, const CostParams& p) {
    checkFinite(e);
    return p.seekMs + e.blocks * (p.readMsPerBlock + p.cpuMsPerBlock);
}

double reuseCost(const Estimate& e, const CostParams& p) { return scanCost(e, p); }

double materializationCost(const Estimate& e, const CostParams& p) {
    checkFinite(e);
    return p.seekMs + e.blocks * p.writeMsPerBlock;
}

}  // namespace qcache
