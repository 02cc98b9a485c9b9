// Analytical cardinality and cost estimation.
#pragma once

#include "qcache/algebra.hpp"

#include <map>
#include <span>
#include <stdexcept>
#include <string>

namespace qcache {

class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Disk and CPU constants. Times in milliseconds, sizes in bytes.
struct CostParams {
    double blockSizeBytes = 4096;
    double seekMs = 10;
    double readMsPerBlock = 2;
    double writeMsPerBlock = 4;
    double cpuMsPerBlock = 0.2;
    double operatorMemoryBytes = 6.0 * 1024 * 1024;

    void validate() const;
    double operatorMemoryBlocks() const { return operatorMemoryBytes / blockSizeBytes; }
};

/// Size and cardinality of an intermediate result. `distinct` tracks the
/// estimated number of distinct values per attribute (capped at `rows`).
struct Estimate {
    double rows = 0;
    double widthBytes = 1;
    double blocks = 0;
    std::map<std::string, double> distinct;

    static Estimate make(double rows, double widthBytes, double blockSizeBytes);
    double distinctOf(const std::string& attr) const;
};

Estimate estimateBase(const RelationInfo& rel, double blockSizeBytes);

/// Fraction of tuples satisfying `p` under uniform, independent attributes:
/// equality 1/distinct, ranges by covered fraction of [min, max], AND
/// multiplies, OR by inclusion-exclusion. Clamped to (0, 1].
double selectivity(const Predicate& p, const Catalog& catalog);

/// Output estimate of one operator applied to its input estimates.
Estimate estimateOutput(const Operator& op, std::span<const Estimate> inputs, const Catalog& catalog);

/// How an operator receives one of its inputs.
struct InputAccess {
    const Estimate* estimate = nullptr;
    bool stored = false;  // true: read from disk (base relation); false: pipelined
};

/// Execution cost of the operator alone, excluding the cost of producing its
/// pipelined inputs. Stored inputs are charged a sequential scan; pipelined
/// inputs only CPU. Joins and group-bys whose working input exceeds the
/// operator memory pay one extra write+read pass over the spilled blocks.
double operatorCost(const Operator& op, std::span<const InputAccess> inputs, const Estimate& output,
                    const CostParams& params);

double scanCost(const Estimate& e, const CostParams& params);
double reuseCost(const Estimate& e, const CostParams& params);
double materializationCost(const Estimate& e, const CostParams& params);

}  // namespace qcache
