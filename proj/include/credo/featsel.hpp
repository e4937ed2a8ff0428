#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "credo/frame.hpp"

namespace credo {

struct CorrMatrix {
    std::vector<std::string> names;
    std::vector<double> values;            // row-major, names.size() squared
    std::vector<std::uint8_t> zero_variance;  // flagged columns: off-diagonals forced to 0

    std::size_t size() const { return names.size(); }
    double at(std::size_t i, std::size_t j) const { return values[i * names.size() + j]; }
    double& at(std::size_t i, std::size_t j) { return values[i * names.size() + j]; }
};

// Pearson correlations over the feature columns. Diagonal is exactly 1;
// zero-variance columns get 0 off-diagonal and a flag instead of an abort.
CorrMatrix correlation_matrix(const Frame& frame);

struct ClusterCut {
    enum class Kind { count, height };
    Kind kind = Kind::height;
    std::size_t count = 0;
    double height = 0.7;

    static ClusterCut by_count(std::size_t k) { return {Kind::count, k, 0.0}; }
    static ClusterCut by_height(double h) { return {Kind::height, 0, h}; }
};

struct Merge {
    int left = 0;   // scipy-style ids: leaves 0..n-1, merge t creates id n+t
    int right = 0;
    double height = 0.0;
    int size = 0;   // members in the merged cluster
};

struct FeatureClustering {
    std::vector<std::string> names;
    std::vector<Merge> merges;        // full dendrogram, heights non-decreasing
    std::vector<int> assignments;     // column -> cluster id (0..n_clusters-1)
    std::size_t n_clusters = 0;
    ClusterCut cut;

    std::string dendrogram_json() const;
};

// Agglomerative clustering with distance d(i,j) = 1 - corr(i,j)^2 and
// average linkage; merge ties break on the smallest column index pair.
// Cluster ids are ordered by smallest member column index.
FeatureClustering cluster_features(const CorrMatrix& corr, const ClusterCut& cut);

// Per cluster, the member with the highest mean squared correlation to its
// co-members; singletons return their only member, ties break on the
// smallest column index. Output is ordered by cluster id.
std::vector<std::string> pick_representatives(const Frame& frame,
                                              const FeatureClustering& clustering);

// Variance inflation factor of `target` regressed (with intercept) on every
// other feature column. Near-perfect fits (R^2 >= 1 - 1e-12) return +infinity.
// Singular normal equations are ridge-jittered starting at 1e-10 and never abort.
double vif(const Frame& frame, std::string_view target);

struct VifRemoval {
    std::string column;
    double vif_at_removal = 0.0;
};

struct VifTrace {
    std::vector<VifRemoval> removals;                      // in removal order
    std::vector<std::pair<std::string, double>> kept;      // final columns with final VIFs
    double threshold = 5.0;

    // CSV columns (step, column, vif): step >= 1 numbers the removals,
    // step 0 marks the surviving columns.
    std::string to_csv() const;
};

// Greedy pruning: repeatedly drop the max-VIF column (ties -> smallest
// column index) until every VIF <= threshold or one column remains.
VifTrace vif_prune(const Frame& frame, double threshold = 5.0);

}  // namespace credo
