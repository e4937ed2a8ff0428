#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "credo/matrix.hpp"
#include "credo/rng.hpp"

namespace credo {

inline constexpr int kUnlimitedDepth = 1'000'000'000;

enum class SplitMode { exhaustive, random_threshold };
enum class FeatureRule { by_kind, sqrt_rule, all, fixed };

struct TreeParams {
    int max_depth = kUnlimitedDepth;
    int min_samples_leaf = 1;
    int min_samples_split = 2;
    FeatureRule feature_rule = FeatureRule::by_kind;  // sqrt for forests, all for boosting
    int n_candidate_features = 0;                     // used when feature_rule == fixed
    SplitMode split_mode = SplitMode::exhaustive;
};

enum class EnsembleKind { random_forest, extra_trees, gradient_boosted };

struct EnsembleParams {
    EnsembleKind kind = EnsembleKind::random_forest;
    int n_estimators = 100;
    TreeParams tree;
    double learning_rate = 0.1;  // boosting only
    double l2_leaf_reg = 1.0;    // boosting only
    std::uint64_t seed = 0;

    void validate() const;
};

// Flat node array; node 0 is the root and samples route left iff
// value <= threshold. feature < 0 marks a leaf.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;          // boosting leaf value
    std::vector<double> dist;    // classification leaf class distribution

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;
    int depth = 0;  // deepest leaf, root at 0
};

struct Ensemble {
    EnsembleKind kind = EnsembleKind::random_forest;
    EnsembleParams params;
    std::vector<int> classes;           // ascending
    std::vector<Tree> trees;            // boosting multiclass: round-major, one tree per class
    double base_score = 0.0;            // binary boosting log-odds
    std::vector<double> importances;    // per feature, sums to 1 (or all zero)
    std::vector<std::string> feature_names;  // optional, for reporting
    std::vector<double> training_loss;  // boosting: log-loss after each round (not serialized)

    std::size_t n_features() const { return importances.size(); }

    std::string to_json() const;
    static Ensemble from_json(const std::string& text);
    void save(const std::string& path) const;
    static Ensemble load(const std::string& path);
};

// Greedy CART, Gini impurity, exhaustive midpoint or random-threshold
// splits; ties break on (smaller feature index, smaller threshold).
// `sample_weights` may be empty (all ones). `classes` fixes the leaf
// distribution layout.
Tree fit_classification_tree(const Matrix& x, const std::vector<int>& y,
                             const std::vector<double>& sample_weights,
                             const TreeParams& params, const std::vector<int>& classes,
                             Rng& rng, std::vector<double>* importance_accum = nullptr);

// Newton-objective tree over per-row gradients/hessians; leaf value is
// -sum(g) / (sum(h) + l2). Splits require strictly positive gain.
Tree fit_newton_tree(const Matrix& x, const std::vector<double>& grad,
                     const std::vector<double>& hess, const TreeParams& params,
                     double l2_leaf_reg, Rng& rng,
                     std::vector<double>* importance_accum = nullptr,
                     std::vector<double>* leaf_value_per_row = nullptr);

// Bootstrap + sqrt-rule candidate features + exhaustive thresholds; each
// tree draws from its own seed substream, so results do not depend on the
// worker count.
Ensemble fit_random_forest(const Matrix& x, const std::vector<int>& y,
                           const EnsembleParams& params, unsigned n_threads = 0);

// Full sample (no bootstrap), one uniform random threshold per candidate
// feature, best candidate by impurity decrease.
Ensemble fit_extra_trees(const Matrix& x, const std::vector<int>& y,
                         const EnsembleParams& params, unsigned n_threads = 0);

// Newton boosting: logistic loss with log-odds base score (binary) or
// softmax loss with zero base scores (one tree per class per round).
Ensemble fit_gbt(const Matrix& x, const std::vector<int>& y, const EnsembleParams& params,
                 unsigned n_threads = 0);

Ensemble fit_ensemble(const Matrix& x, const std::vector<int>& y, const EnsembleParams& params,
                      unsigned n_threads = 0);

// Per-row class probabilities, column order = model.classes; rows sum to 1.
Matrix predict_proba(const Ensemble& model, const Matrix& x);

// Binary: class `classes[1]` iff its probability >= threshold (default 0.5).
// Multiclass: argmax with smallest-class-id tie-break.
std::vector<int> predict(const Ensemble& model, const Matrix& x,
                         std::optional<double> threshold = std::nullopt);

// Mean decrease in impurity, normalized to sum 1 (all zero when no tree split).
std::vector<double> feature_importance(const Ensemble& model);

const char* ensemble_kind_name(EnsembleKind kind);
EnsembleKind ensemble_kind_from(const std::string& name);

}  // namespace credo
