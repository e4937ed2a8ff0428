#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "credo/matrix.hpp"

namespace credo {

struct AdasynConfig {
    std::size_t k_neighbors = 5;
    double beta = 1.0;                     // 1.0 = fully rebalance
    std::optional<int> target_class;       // binary only; default: the rarer class
    std::uint64_t seed = 0;
};

struct AdasynPointStats {
    std::size_t row = 0;   // index into the original matrix
    double r = 0.0;        // majority fraction among the K nearest neighbors
    double r_hat = 0.0;    // normalized density weight
    std::size_t g = 0;     // synthetic points generated from this row
};

struct AdasynReport {
    int minority_class = 0;
    double g_requested = 0.0;      // G = (m_majority - m_minority) * beta
    std::size_t generated = 0;     // sum of per-point g, equals round(G)
    std::vector<AdasynPointStats> points;

    std::string to_json() const;
};

// The k nearest rows to `query` by Euclidean distance, self excluded,
// distance ties broken by the smaller row index. `restrict` limits the
// candidate pool to the given rows (the query may appear there; it is still
// excluded).
std::vector<std::size_t> knn(const Matrix& points, std::size_t query, std::size_t k,
                             const std::vector<std::size_t>* restrict = nullptr);

struct AdasynResult {
    Matrix x;
    std::vector<int> y;
    AdasynReport report;
};

// Canonical ADASYN for a binary label vector over a [0,1]-scaled matrix:
// density weights from majority neighbors, largest-remainder rounding of the
// per-point quotas, synthetic points on segments between minority neighbors.
// Synthetic rows are appended after the originals; draws come from per-point
// substreams of config.seed, so results are independent of execution order.
AdasynResult adasyn(const Matrix& x, const std::vector<int>& y, const AdasynConfig& config);

struct MulticlassAdasynResult {
    Matrix x;
    std::vector<int> y;
    std::vector<AdasynReport> reports;  // one per oversampled class, ascending class id
};

// One-vs-rest ADASYN per minority class in ascending class-id order. Only
// original rows ever serve as neighbors, so the passes are order-independent.
MulticlassAdasynResult adasyn_multiclass(const Matrix& x, const std::vector<int>& y,
                                         const AdasynConfig& config);

}  // namespace credo
