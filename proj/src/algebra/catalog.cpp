#include "qcache/algebra.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace qcache {

std::int64_t RelationInfo::sizeBlocks(std::int64_t blockSizeBytes) const {
    if (rowCount <= 0) return 0;
    const std::int64_t bytes = rowCount * rowWidthBytes;
    return (bytes + blockSizeBytes - 1) / blockSizeBytes;
}

const AttributeInfo* RelationInfo::findAttribute(std::string_view attr) const {
    for (const auto& a : attributes)
        if (a.name == attr) return &a;
    return nullptr;
}

Catalog::Catalog(std::vector<RelationInfo> relations, std::int64_t blockSizeBytes)
    : relations_(std::move(relations)), blockSizeBytes_(blockSizeBytes) {
    if (blockSizeBytes_ <= 0) throw SchemaError("catalog: block size must be positive");
    std::set<std::string> relNames;
    std::set<std::string> attrNames;
    for (const auto& r : relations_) {
        if (!relNames.insert(r.name).second)
            throw SchemaError("catalog: duplicate relation '" + r.name + "'");
        if (r.rowCount < 0) throw SchemaError("catalog: negative row count for '" + r.name + "'");
        if (r.rowWidthBytes <= 0)
            throw SchemaError("catalog: row width must be positive for '" + r.name + "'");
        for (const auto& a : r.attributes) {
            if (!attrNames.insert(a.name).second)
                throw SchemaError("catalog: attribute '" + a.name + "' defined twice");
            if (a.distinctCount <= 0)
                throw SchemaError("catalog: distinct count of '" + a.name + "' must be positive");
            if (a.maxValue < a.minValue)
                throw SchemaError("catalog: empty domain for '" + a.name + "'");
            if (a.distinctCount > a.maxValue - a.minValue + 1)
                throw SchemaError("catalog: distinct count of '" + a.name + "' exceeds its domain");
            if (r.rowCount > 0 && a.distinctCount > r.rowCount)
                throw SchemaError("catalog: distinct count of '" + a.name + "' exceeds row count");
            if (a.widthBytes <= 0)
                throw SchemaError("catalog: width of '" + a.name + "' must be positive");
        }
        if (r.primaryKey && !r.findAttribute(*r.primaryKey))
            throw SchemaError("catalog: primary key '" + *r.primaryKey + "' not an attribute of '" +
                              r.name + "'");
    }
}

const RelationInfo* Catalog::findRelation(std::string_view name) const {
    for (const auto& r : relations_)
        if (r.name == name) return &r;
    return nullptr;
}

const RelationInfo& Catalog::relation(std::string_view name) const {
    if (const auto* r = findRelation(name)) return *r;
    throw SchemaError("unknown relation '" + std::string(name) + "'");
}

const AttributeInfo* Catalog::findAttribute(std::string_view name) const {
    for (const auto& r : relations_)
        if (const auto* a = r.findAttribute(name)) return a;
    return nullptr;
}

const RelationInfo* Catalog::ownerOf(std::string_view attr) const {
    for (const auto& r : relations_)
        if (r.findAttribute(attr)) return &r;
    return nullptr;
}

std::int64_t Catalog::totalBlocks() const {
    std::int64_t total = 0;
    for (const auto& r : relations_) total += r.sizeBlocks(blockSizeBytes_);
    return total;
}

double Catalog::totalBytes() const {
    double total = 0;
    for (const auto& r : relations_)
        total += static_cast<double>(r.rowCount) * static_cast<double>(r.rowWidthBytes);
    return total;
}

namespace {

std::int64_t parseInt(const std::string& token, int line) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw SchemaError("catalog line " + std::to_string(line) + ": expected integer, got '" +
                          token + "'");
    }
}

// Reads "key value" pairs after the leading keyword and name.
std::vector<std::pair<std::string, std::string>> keyValues(std::istringstream& ls, int line) {
    std::vector<std::pair<std::string, std::string>> out;
    std::string k, v;
    while (ls >> k) {
        if (!(ls >> v))
            throw SchemaError("catalog line " + std::to_string(line) + ": key '" + k +
                              "' has no value");
        out.emplace_back(k, v);
    }
    return out;
}

}  // namespace

Catalog Catalog::parse(std::istream& in) {
    std::vector<RelationInfo> relations;
    std::int64_t blockSize = 4096;
    std::string raw;
    int lineNo = 0;
    while (std::getline(in, raw)) {
        ++lineNo;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::istringstream ls(raw);
        std::string keyword;
        if (!(ls >> keyword)) continue;
        if (keyword == "block_size_bytes") {
            std::string v;
            ls >> v;
            blockSize = parseInt(v, lineNo);
        } else if (keyword == "relation") {
            RelationInfo r;
            if (!(ls >> r.name)) throw SchemaError("catalog line " + std::to_string(lineNo) + ": missing name");
            for (const auto& [k, v] : keyValues(ls, lineNo)) {
                if (k == "rows") r.rowCount = parseInt(v, lineNo);
                else if (k == "width") r.rowWidthBytes = parseInt(v, lineNo);
                else if (k == "key") { if (v != "-") r.primaryKey = v; }
                else throw SchemaError("catalog line " + std::to_string(lineNo) + ": unknown key '" + k + "'");
            }
            relations.push_back(std::move(r));
        } else if (keyword == "attribute") {
            if (relations.empty())
                throw SchemaError("catalog line " + std::to_string(lineNo) + ": attribute before relation");
            AttributeInfo a;
            if (!(ls >> a.name)) throw SchemaError("catalog line " + std::to_string(lineNo) + ": missing name");
            for (const auto& [k, v] : keyValues(ls, lineNo)) {
                if (k == "distinct") a.distinctCount = parseInt(v, lineNo);
                else if (k == "min") a.minValue = parseInt(v, lineNo);
                else if (k == "max") a.maxValue = parseInt(v, lineNo);
                else if (k == "width") a.widthBytes = parseInt(v, lineNo);
                else throw SchemaError("catalog line " + std::to_string(lineNo) + ": unknown key '" + k + "'");
            }
            relations.back().attributes.push_back(std::move(a));
        } else {
            throw SchemaError("catalog line " + std::to_string(lineNo) + ": unknown record '" + keyword + "'");
        }
    }
    return Catalog(std::move(relations), blockSize);
}

void Catalog::write(std::ostream& out) const {
    out << "block_size_bytes " << blockSizeBytes_ << '\n';
    for (const auto& r : relations_) {
        out << "relation " << r.name << " rows " << r.rowCount << " width " << r.rowWidthBytes
            << " key " << (r.primaryKey ? *r.primaryKey : std::string("-")) << '\n';
        for (const auto& a : r.attributes)
            out << "attribute " << a.name << " distinct " << a.distinctCount << " min " << a.minValue
                << " max " << a.maxValue << " width " << a.widthBytes << '\n';
    }
}

// ---------------------------------------------------------------------------

AttributeSet::AttributeSet(std::initializer_list<std::string> names)
    : AttributeSet(std::vector<std::string>(names)) {}

AttributeSet::AttributeSet(std::vector<std::string> names) : names_(std::move(names)) {
    std::sort(names_.begin(), names_.end());
    names_.erase(std::unique(names_.begin(), names_.end()), names_.end());
}

bool AttributeSet::contains(std::string_view name) const {
    return std::binary_search(names_.begin(), names_.end(), name,
                              [](const auto& a, const auto& b) { return std::string_view(a) < std::string_view(b); });
}

bool AttributeSet::includes(const AttributeSet& other) const {
    return std::includes(names_.begin(), names_.end(), other.names_.begin(), other.names_.end());
}

void AttributeSet::insert(std::string name) {
    auto it = std::lower_bound(names_.begin(), names_.end(), name);
    if (it == names_.end() || *it != name) names_.insert(it, std::move(name));
}

AttributeSet AttributeSet::unite(const AttributeSet& other) const {
    AttributeSet out;
    out.names_.reserve(names_.size() + other.names_.size());
    std::set_union(names_.begin(), names_.end(), other.names_.begin(), other.names_.end(),
                   std::back_inserter(out.names_));
    return out;
}

std::string AttributeSet::toString() const {
    std::string s = "{";
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (i) s += ',';
        s += names_[i];
    }
    return s + "}";
}

}  // namespace qcache
