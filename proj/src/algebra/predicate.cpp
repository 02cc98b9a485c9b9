#include "qcache/algebra.hpp"

#include <algorithm>
#include <limits>
#include <map>

namespace qcache {

std::string_view toString(Comparator c) {
    switch (c) {
        case Comparator::Eq: return "=";
        case Comparator::Lt: return "<";
        case Comparator::Le: return "<=";
        case Comparator::Gt: return ">";
        case Comparator::Ge: return ">=";
    }
    return "?";
}

Predicate Predicate::atom(std::string attribute, Comparator op, std::int64_t constant) {
    Predicate p;
    p.kind_ = Kind::Atom;
    p.atom_ = Atom{std::move(attribute), op, constant};
    return p;
}

Predicate Predicate::conjunction(std::vector<Predicate> children) {
    if (children.empty()) throw UsageError("conjunction needs at least one child");
    Predicate p;
    p.kind_ = Kind::And;
    p.children_ = std::move(children);
    return p;
}

Predicate Predicate::disjunction(std::vector<Predicate> children) {
    if (children.empty()) throw UsageError("disjunction needs at least one child");
    Predicate p;
    p.kind_ = Kind::Or;
    p.children_ = std::move(children);
    return p;
}

std::string Predicate::toString() const {
    if (kind_ == Kind::Atom)
        return atom_.attribute + std::string(qcache::toString(atom_.op)) + std::to_string(atom_.constant);
    std::string s = "(";
    const char* sep = kind_ == Kind::And ? " AND " : " OR ";
    for (std::size_t i = 0; i < children_.size(); ++i) {
        if (i) s += sep;
        s += children_[i].toString();
    }
    return s + ")";
}

bool operator==(const Predicate& a, const Predicate& b) {
    if (a.kind_ != b.kind_) return false;
    if (a.kind_ == Predicate::Kind::Atom) return a.atom_ == b.atom_;
    return a.children_ == b.children_;
}

std::strong_ordering operator<=>(const Predicate& a, const Predicate& b) {
    if (auto c = a.kind_ <=> b.kind_; c != 0) return c;
    if (a.kind_ == Predicate::Kind::Atom) return a.atom_ <=> b.atom_;
    return std::lexicographical_compare_three_way(a.children_.begin(), a.children_.end(),
                                                  b.children_.begin(), b.children_.end());
}

Predicate canonicalize(const Predicate& p) {
    if (p.kind() == Predicate::Kind::Atom) return p;
    std::vector<Predicate> flat;
    for (const auto& child : p.children()) {
        Predicate c = canonicalize(child);
        if (c.kind() == p.kind()) {
            flat.insert(flat.end(), c.children().begin(), c.children().end());
        } else {
            flat.push_back(std::move(c));
        }
    }
    std::sort(flat.begin(), flat.end());
    flat.erase(std::unique(flat.begin(), flat.end()), flat.end());
    if (flat.size() == 1) return flat.front();
    return p.kind() == Predicate::Kind::And ? Predicate::conjunction(std::move(flat))
                                            : Predicate::disjunction(std::move(flat));
}

Predicate canonicalize(const Predicate& p, const AttributeSet& schema) {
    for (const auto& a : attributesOf(p))
        if (!schema.contains(a)) throw SchemaError("predicate references unknown attribute '" + a + "'");
    return canonicalize(p);
}

std::vector<Predicate> conjunctsOf(const Predicate& p) {
    if (p.kind() == Predicate::Kind::And) return p.children();
    return {p};
}

Predicate conjoin(std::vector<Predicate> conjuncts) {
    if (conjuncts.size() == 1) return canonicalize(conjuncts.front());
    return canonicalize(Predicate::conjunction(std::move(conjuncts)));
}

namespace {

void collectAttributes(const Predicate& p, std::vector<std::string>& out) {
    if (p.kind() == Predicate::Kind::Atom) {
        out.push_back(p.atomValue().attribute);
        return;
    }
    for (const auto& c : p.children()) collectAttributes(c, out);
}

// Union of disjoint closed integer intervals, sorted.
using IntervalSet = std::vector<std::pair<std::int64_t, std::int64_t>>;

constexpr std::int64_t kMin = std::numeric_limits<std::int64_t>::min();
constexpr std::int64_t kMax = std::numeric_limits<std::int64_t>::max();

IntervalSet fullSet() { return {{kMin, kMax}}; }

IntervalSet atomSet(const Atom& a) {
    const std::int64_t c = a.constant;
    switch (a.op) {
        case Comparator::Eq: return {{c, c}};
        case Comparator::Lt: return c == kMin ? IntervalSet{} : IntervalSet{{kMin, c - 1}};
        case Comparator::Le: return {{kMin, c}};
        case Comparator::Gt: return c == kMax ? IntervalSet{} : IntervalSet{{c + 1, kMax}};
        case Comparator::Ge: return {{c, kMax}};
    }
    return {};
}

IntervalSet unite(IntervalSet a, const IntervalSet& b) {
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    IntervalSet out;
    for (const auto& iv : a) {
        if (!out.empty() && (out.back().second == kMax || iv.first <= out.back().second + 1)) {
            out.back().second = std::max(out.back().second, iv.second);
        } else {
            out.push_back(iv);
        }
    }
    return out;
}

IntervalSet intersect(const IntervalSet& a, const IntervalSet& b) {
    IntervalSet out;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const auto lo = std::max(a[i].first, b[j].first);
        const auto hi = std::min(a[i].second, b[j].second);
        if (lo <= hi) out.emplace_back(lo, hi);
        if (a[i].second < b[j].second) ++i;
        else ++j;
    }
    return out;
}

bool subsetOf(const IntervalSet& a, const IntervalSet& b) {
    return intersect(a, b) == a;
}

// Exact value set of a predicate that mentions exactly one attribute.
IntervalSet singleAttributeSet(const Predicate& p) {
    switch (p.kind()) {
        case Predicate::Kind::Atom: return atomSet(p.atomValue());
        case Predicate::Kind::And: {
            IntervalSet s = fullSet();
            for (const auto& c : p.children()) s = intersect(s, singleAttributeSet(c));
            return s;
        }
        case Predicate::Kind::Or: {
            IntervalSet s;
            for (const auto& c : p.children()) s = unite(std::move(s), singleAttributeSet(c));
            return s;
        }
    }
    return {};
}

}  // namespace

AttributeSet attributesOf(const Predicate& p) {
    std::vector<std::string> names;
    collectAttributes(p, names);
    return AttributeSet(std::move(names));
}

ImplicationForm implicationForm(const Predicate& p) {
    ImplicationForm f;
    for (const auto& c : conjunctsOf(canonicalize(p))) {
        const auto attrs = attributesOf(c);
        if (attrs.size() == 1) {
            auto [it, fresh] = f.ranges.emplace(attrs.names().front(), fullSet());
            it->second = intersect(it->second, singleAttributeSet(c));
            if (it->second.empty()) f.unsatisfiable = true;
        } else {
            f.multi.push_back(c);
        }
    }
    return f;
}

bool implies(const ImplicationForm& p, const ImplicationForm& q) {
    if (p.unsatisfiable) return true;
    for (const auto& [name, set] : q.ranges) {
        auto it = p.ranges.find(name);
        if (!subsetOf(it == p.ranges.end() ? fullSet() : it->second, set)) return false;
    }
    for (const auto& c : q.multi)
        if (std::find(p.multi.begin(), p.multi.end(), c) == p.multi.end()) return false;
    return true;
}

bool predicateImplies(const Predicate& p, const Predicate& q) {
    return implies(implicationForm(p), implicationForm(q));
}

std::vector<Atom> parseAtomList(std::string_view text) {
    std::vector<Atom> atoms;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('&', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view item = text.substr(pos, end - pos);
        pos = end + 1;
        if (item.empty()) continue;
        static constexpr std::pair<std::string_view, Comparator> ops[] = {
            {"<=", Comparator::Le}, {">=", Comparator::Ge}, {"=", Comparator::Eq},
            {"<", Comparator::Lt},  {">", Comparator::Gt}};
        bool parsed = false;
        for (const auto& [sym, cmp] : ops) {
            const auto at = item.find(sym);
            if (at == std::string_view::npos || at == 0) continue;
            // "<" must not match the first character of "<=" (handled by order above).
            Atom a;
            a.attribute = std::string(item.substr(0, at));
            a.op = cmp;
            const std::string value(item.substr(at + sym.size()));
            try {
                std::size_t used = 0;
                a.constant = std::stoll(value, &used);
                if (used != value.size()) throw std::invalid_argument(value);
            } catch (const std::exception&) {
                throw UsageError("bad atom constant in '" + std::string(item) + "'");
            }
            atoms.push_back(std::move(a));
            parsed = true;
            break;
        }
        if (!parsed) throw UsageError("cannot parse atom '" + std::string(item) + "'");
    }
    return atoms;
}

std::string formatAtomList(const std::vector<Atom>& atoms) {
    std::string s;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (i) s += '&';
        s += atoms[i].attribute;
        s += toString(atoms[i].op);
        s += std::to_string(atoms[i].constant);
    }
    return s;
}

}  // namespace qcache
