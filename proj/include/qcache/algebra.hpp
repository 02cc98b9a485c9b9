// Logical query model: catalog statistics, predicates and operator trees.
#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace qcache {

/// Raised when a query or predicate references attributes or relations that
/// do not exist, or when a catalog violates its own invariants.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised on API misuse (duplicate ids, unknown ids, invalid configuration).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Catalog

struct AttributeInfo {
    std::string name;
    std::int64_t distinctCount = 1;
    std::int64_t minValue = 0;
    std::int64_t maxValue = 0;
    std::int64_t widthBytes = 4;
};

struct RelationInfo {
    std::string name;
    std::int64_t rowCount = 0;
    std::int64_t rowWidthBytes = 1;
    std::vector<AttributeInfo> attributes;
    std::optional<std::string> primaryKey;

    std::int64_t sizeBlocks(std::int64_t blockSizeBytes) const;
    const AttributeInfo* findAttribute(std::string_view attr) const;
};

/// Immutable relation statistics. Attribute names are global across the
/// catalog, so a schema can be represented as a plain set of names.
class Catalog {
public:
    Catalog(std::vector<RelationInfo> relations, std::int64_t blockSizeBytes);

    const std::vector<RelationInfo>& relations() const { return relations_; }
    std::int64_t blockSizeBytes() const { return blockSizeBytes_; }

    const RelationInfo& relation(std::string_view name) const;
    const RelationInfo* findRelation(std::string_view name) const;
    const AttributeInfo* findAttribute(std::string_view name) const;
    /// Relation that owns a base attribute, or nullptr.
    const RelationInfo* ownerOf(std::string_view attr) const;

    std::int64_t totalBlocks() const;
    double totalBytes() const;

    /// Line-oriented text format:
    ///   block_size_bytes <n>
    ///   relation <name> rows <n> width <bytes> key <attr|->
    ///   attribute <name> distinct <n> min <v> max <v> width <bytes>
    /// Attribute lines belong to the most recent relation line. '#' starts a comment.
    static Catalog parse(std::istream& in);
    void write(std::ostream& out) const;

private:
    std::vector<RelationInfo> relations_;
    std::int64_t blockSizeBytes_;
};

// ---------------------------------------------------------------------------
// Attribute sets

/// Sorted, duplicate-free set of attribute names.
class AttributeSet {
public:
    AttributeSet() = default;
    AttributeSet(std::initializer_list<std::string> names);
    explicit AttributeSet(std::vector<std::string> names);

    bool contains(std::string_view name) const;
    bool includes(const AttributeSet& other) const;
    bool empty() const { return names_.empty(); }
    std::size_t size() const { return names_.size(); }
    void insert(std::string name);
    AttributeSet unite(const AttributeSet& other) const;

    const std::vector<std::string>& names() const { return names_; }
    auto begin() const { return names_.begin(); }
    auto end() const { return names_.end(); }

    std::string toString() const;  // "{a,b,c}"

    friend bool operator==(const AttributeSet&, const AttributeSet&) = default;
    friend auto operator<=>(const AttributeSet&, const AttributeSet&) = default;

private:
    std::vector<std::string> names_;
};

// ---------------------------------------------------------------------------
// Predicates

enum class Comparator { Eq, Lt, Le, Gt, Ge };

std::string_view toString(Comparator c);

struct Atom {
    std::string attribute;
    Comparator op = Comparator::Eq;
    std::int64_t constant = 0;

    friend bool operator==(const Atom&, const Atom&) = default;
    friend auto operator<=>(const Atom&, const Atom&) = default;
};

/// Tree of comparison atoms combined with AND / OR.
class Predicate {
public:
    enum class Kind { Atom, And, Or };

    static Predicate atom(std::string attribute, Comparator op, std::int64_t constant);
    static Predicate conjunction(std::vector<Predicate> children);
    static Predicate disjunction(std::vector<Predicate> children);

    Kind kind() const { return kind_; }
    const Atom& atomValue() const { return atom_; }
    const std::vector<Predicate>& children() const { return children_; }

    std::string toString() const;

    friend bool operator==(const Predicate& a, const Predicate& b);
    friend std::strong_ordering operator<=>(const Predicate& a, const Predicate& b);

private:
    Kind kind_ = Kind::Atom;
    Atom atom_;
    std::vector<Predicate> children_;
};

/// Flattens nested AND/OR, sorts siblings, drops duplicate siblings and
/// collapses single-child connectives. Idempotent.
Predicate canonicalize(const Predicate& p);
/// As above, additionally checking every atom against `schema`.
Predicate canonicalize(const Predicate& p, const AttributeSet& schema);

/// Top-level conjuncts of a (canonical) predicate.
std::vector<Predicate> conjunctsOf(const Predicate& p);
/// Canonical conjunction of the given conjuncts (flattened, sorted, deduplicated).
Predicate conjoin(std::vector<Predicate> conjuncts);
AttributeSet attributesOf(const Predicate& p);

/// Sound, incomplete implication test. Exact for conjunctions of conjuncts that
/// each mention a single attribute (ranges, equalities, and disjunctions of
/// those); multi-attribute conjuncts of `q` must appear verbatim in `p`.
bool predicateImplies(const Predicate& p, const Predicate& q);

/// A predicate digested for repeated implication tests: the value set allowed
/// for each single-attribute conjunct group, plus the multi-attribute conjuncts.
struct ImplicationForm {
    std::map<std::string, std::vector<std::pair<std::int64_t, std::int64_t>>> ranges;
    std::vector<Predicate> multi;
    bool unsatisfiable = false;
};
ImplicationForm implicationForm(const Predicate& p);
/// Same answer as predicateImplies on the original predicates.
bool implies(const ImplicationForm& p, const ImplicationForm& q);

/// Parses the compact conjunction syntax "a=1&b<5" (empty string = no atoms).
std::vector<Atom> parseAtomList(std::string_view text);
std::string formatAtomList(const std::vector<Atom>& atoms);

// ---------------------------------------------------------------------------
// Operators and query trees

struct JoinCondition {
    std::string left;
    std::string right;

    /// Orders the two sides so that left < right.
    JoinCondition normalized() const;
    std::string toString() const;

    friend bool operator==(const JoinCondition&, const JoinCondition&) = default;
    friend auto operator<=>(const JoinCondition&, const JoinCondition&) = default;
};

struct Aggregate {
    std::string input;   // attribute summed
    std::string output;  // name of the produced column

    static Aggregate sum(const std::string& attr) { return {attr, "sum_" + attr}; }
    /// Re-aggregation of an already summed column keeps the column name.
    static Aggregate rollup(const Aggregate& a) { return {a.output, a.output}; }
    std::string toString() const;

    friend bool operator==(const Aggregate&, const Aggregate&) = default;
    friend auto operator<=>(const Aggregate&, const Aggregate&) = default;
};

struct SelectOp {
    Predicate predicate;
    friend bool operator==(const SelectOp&, const SelectOp&) = default;
};

struct JoinOp {
    std::vector<JoinCondition> conditions;  // empty = cross product
    friend bool operator==(const JoinOp&, const JoinOp&) = default;
};

struct GroupAggOp {
    AttributeSet groupBy;
    Aggregate aggregate;
    friend bool operator==(const GroupAggOp&, const GroupAggOp&) = default;
};

/// Logical operator applied to equivalence-node inputs.
using Operator = std::variant<SelectOp, JoinOp, GroupAggOp>;

std::string toString(const Operator& op);
/// Sorts and normalizes join conditions.
std::vector<JoinCondition> canonicalConditions(std::vector<JoinCondition> conds);

struct QueryTree;
using QueryTreePtr = std::shared_ptr<const QueryTree>;

struct ScanNode {
    std::string relation;
};
struct SelectNode {
    Predicate predicate;
    QueryTreePtr child;
};
struct JoinNode {
    std::vector<JoinCondition> conditions;
    QueryTreePtr left;
    QueryTreePtr right;
};
struct GroupAggNode {
    AttributeSet groupBy;
    Aggregate aggregate;
    QueryTreePtr child;
};

struct QueryTree {
    std::variant<ScanNode, SelectNode, JoinNode, GroupAggNode> node;
};

QueryTreePtr scan(std::string relation);
QueryTreePtr select(Predicate predicate, QueryTreePtr child);
QueryTreePtr join(JoinCondition condition, QueryTreePtr left, QueryTreePtr right);
QueryTreePtr join(std::vector<JoinCondition> conditions, QueryTreePtr left, QueryTreePtr right);
QueryTreePtr groupAgg(AttributeSet groupBy, Aggregate aggregate, QueryTreePtr child);

/// Output attributes of the root operator. Throws SchemaError if ill-typed.
AttributeSet schemaOf(const QueryTree& t, const Catalog& catalog);
/// Well-typedness check of the whole tree; throws SchemaError.
void validate(const QueryTree& t, const Catalog& catalog);
/// Deterministic textual rendering, used as a stable identity of a query.
std::string toString(const QueryTree& t);

}  // namespace qcache
