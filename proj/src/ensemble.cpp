#include "credo/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "credo/errors.hpp"
#include "credo/parallel.hpp"

namespace credo {

namespace {

using nlohmann::json;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

int resolve_candidate_count(const TreeParams& params, EnsembleKind kind, std::size_t n_features) {
    const int k = static_cast<int>(n_features);
    switch (params.feature_rule) {
        case FeatureRule::all:
            return k;
        case FeatureRule::sqrt_rule:
            return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(k)))));
        case FeatureRule::fixed:
            return std::clamp(params.n_candidate_features, 1, k);
        case FeatureRule::by_kind:
            return kind == EnsembleKind::gradient_boosted
                       ? k
                       : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(k)))));
    }
    return k;
}

// Shared CART engine beneath all three classifier families. Entries are
// sample slots (a bootstrap maps several entries to one row). Exhaustive
// splits either scan presorted per-feature index arrays that are stably
// partitioned on the way down (boosting: every feature is a candidate, so
// the arrays pay for themselves) or sort candidate values locally per node
// (forests: only sqrt(k) candidates per node, often shallow trees).
class TreeBuilder {
public:
    struct Config {
        const Matrix* x = nullptr;
        TreeParams params;
        int n_candidates = 0;
        bool presort = false;
        const std::vector<std::vector<int>>* presorted_root = nullptr;  // optional reuse
        // classification targets
        const std::vector<int>* y_index = nullptr;  // per row, index into classes
        const std::vector<double>* row_weights = nullptr;
        std::size_t n_classes = 0;
        // newton targets
        bool newton = false;
        const std::vector<double>* grad = nullptr;
        const std::vector<double>* hess = nullptr;
        double l2 = 1.0;
    };

    TreeBuilder(const Config& cfg, std::vector<int> entry_rows, Rng& rng,
                std::vector<double>* importance_accum, std::vector<double>* leaf_value_per_row)
        : cfg_(cfg),
          rows_(std::move(entry_rows)),
          rng_(rng),
          importance_(importance_accum),
          leaf_values_(leaf_value_per_row) {
        const std::size_t n = rows_.size();
        const std::size_t k = cfg_.x->cols;
        plain_.resize(n);
        std::iota(plain_.begin(), plain_.end(), 0);
        if (cfg_.presort) {
            if (cfg_.presorted_root) {
                order_ = *cfg_.presorted_root;
            } else {
                order_.assign(k, plain_);
                for (std::size_t f = 0; f < k; ++f) sort_by_feature(order_[f], f);
            }
        }
        scratch_.resize(n);
        goes_left_.resize(n);
        pairs_.reserve(n);
        feature_pool_.resize(k);
        std::iota(feature_pool_.begin(), feature_pool_.end(), 0);
        left_class_w_.resize(cfg_.n_classes);
        node_class_w_.resize(cfg_.n_classes);
    }

    Tree build() {
        tree_.nodes.clear();
        tree_.depth = 0;
        double w = 0.0;
        for (std::size_t e = 0; e < rows_.size(); ++e) w += weight_of(static_cast<int>(e));
        root_weight_ = cfg_.newton ? static_cast<double>(rows_.size()) : w;
        build_node(0, rows_.size(), 0, root_weight_);
        return std::move(tree_);
    }

private:
    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double gain = 0.0;
        std::size_t left_size = 0;
    };

    double value(int entry, std::size_t f) const {
        return cfg_.x->at(static_cast<std::size_t>(rows_[static_cast<std::size_t>(entry)]), f);
    }
    int row_of(int entry) const { return rows_[static_cast<std::size_t>(entry)]; }
    double weight_of(int entry) const {
        if (!cfg_.row_weights || cfg_.row_weights->empty()) return 1.0;
        return (*cfg_.row_weights)[static_cast<std::size_t>(row_of(entry))];
    }
    int label_of(int entry) const {
        return (*cfg_.y_index)[static_cast<std::size_t>(row_of(entry))];
    }

    void sort_by_feature(std::vector<int>& entries, std::size_t f) const {
        std::sort(entries.begin(), entries.end(), [&](int a, int b) {
            const double va = value(a, f);
            const double vb = value(b, f);
            if (va != vb) return va < vb;
            return a < b;
        });
    }

    static double gini(const std::vector<double>& counts, double total) {
        if (total <= 0.0) return 0.0;
        double acc = 0.0;
        for (double c : counts) {
            const double p = c / total;
            acc += p * p;
        }
        return 1.0 - acc;
    }

    double gini_right(double wr) const {
        if (wr <= 0.0) return 0.0;
        double acc = 0.0;
        for (std::size_t c = 0; c < left_class_w_.size(); ++c) {
            const double p = (node_class_w_[c] - left_class_w_[c]) / wr;
            acc += p * p;
        }
        return 1.0 - acc;
    }

    int select_candidates() {
        const int k = static_cast<int>(cfg_.x->cols);
        const int m = cfg_.n_candidates;
        if (m >= k) {
            candidates_.resize(static_cast<std::size_t>(k));
            std::iota(candidates_.begin(), candidates_.end(), 0);
            return k;
        }
        for (int i = 0; i < m; ++i) {
            const int j = static_cast<int>(rng_.uniform_int(i, k - 1));
            std::swap(feature_pool_[static_cast<std::size_t>(i)],
                      feature_pool_[static_cast<std::size_t>(j)]);
        }
        candidates_.assign(feature_pool_.begin(), feature_pool_.begin() + m);
        std::sort(candidates_.begin(), candidates_.end());  // ties favor the smaller feature index
        return m;
    }

    int build_node(std::size_t begin, std::size_t end, int depth, double node_weight) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        tree_.depth = std::max(tree_.depth, depth);

        const std::size_t n = end - begin;

        double node_g = 0.0, node_h = 0.0;
        double node_impurity = 0.0;
        if (cfg_.newton) {
            for (std::size_t p = begin; p < end; ++p) {
                const int row = row_of(plain_[p]);
                node_g += (*cfg_.grad)[static_cast<std::size_t>(row)];
                node_h += (*cfg_.hess)[static_cast<std::size_t>(row)];
            }
        } else {
            std::fill(node_class_w_.begin(), node_class_w_.end(), 0.0);
            for (std::size_t p = begin; p < end; ++p) {
                node_class_w_[static_cast<std::size_t>(label_of(plain_[p]))] += weight_of(plain_[p]);
            }
            node_impurity = gini(node_class_w_, node_weight);
        }

        bool splittable = depth < cfg_.params.max_depth &&
                          n >= static_cast<std::size_t>(cfg_.params.min_samples_split) &&
                          n >= 2 * static_cast<std::size_t>(cfg_.params.min_samples_leaf);
        if (!cfg_.newton && node_impurity <= 0.0) splittable = false;

        Split best;
        if (splittable) {
            const int m = select_candidates();
            for (int ci = 0; ci < m; ++ci) {
                const auto f = static_cast<std::size_t>(candidates_[static_cast<std::size_t>(ci)]);
                if (cfg_.params.split_mode != SplitMode::exhaustive) {
                    scan_random(f, begin, end, node_weight, node_impurity, node_g, node_h, best);
                } else if (cfg_.presort) {
                    scan_sorted(order_[f], f, begin, end, node_weight, node_impurity, node_g,
                                node_h, best);
                } else {
                    pairs_.assign(plain_.begin() + static_cast<std::ptrdiff_t>(begin),
                                  plain_.begin() + static_cast<std::ptrdiff_t>(end));
                    sort_by_feature(pairs_, f);
                    scan_sorted(pairs_, f, 0, n, node_weight, node_impurity, node_g, node_h, best);
                }
            }
        }

        if (best.feature < 0 || !(best.gain > 0.0)) {
            make_leaf(id, begin, end, node_weight, node_g, node_h);
            return id;
        }

        if (importance_) {
            // Classification: node-fraction-weighted impurity decrease.
            // Boosting: the Newton gain, already extensive in the node sums.
            const double contribution =
                cfg_.newton ? best.gain : (node_weight / root_weight_) * best.gain;
            (*importance_)[static_cast<std::size_t>(best.feature)] += contribution;
        }

        double left_weight = 0.0;
        for (std::size_t p = begin; p < end; ++p) {
            const int e = plain_[p];
            const bool l = value(e, static_cast<std::size_t>(best.feature)) <= best.threshold;
            goes_left_[static_cast<std::size_t>(e)] = l ? 1 : 0;
            if (l && !cfg_.newton) left_weight += weight_of(e);
        }
        if (cfg_.newton) left_weight = static_cast<double>(best.left_size);

        const std::size_t mid = begin + best.left_size;
        auto partition_array = [&](std::vector<int>& arr) {
            std::size_t lo = begin;
            std::size_t hi = mid;
            for (std::size_t p = begin; p < end; ++p) {
                const int e = arr[p];
                if (goes_left_[static_cast<std::size_t>(e)]) {
                    scratch_[lo++] = e;
                } else {
                    scratch_[hi++] = e;
                }
            }
            std::copy(scratch_.begin() + static_cast<std::ptrdiff_t>(begin),
                      scratch_.begin() + static_cast<std::ptrdiff_t>(end),
                      arr.begin() + static_cast<std::ptrdiff_t>(begin));
        };
        partition_array(plain_);
        if (cfg_.presort) {
            for (auto& arr : order_) partition_array(arr);
        }

        const int left = build_node(begin, mid, depth + 1, left_weight);
        const int right = build_node(mid, end, depth + 1,
                                     cfg_.newton ? static_cast<double>(n - best.left_size)
                                                 : node_weight - left_weight);
        TreeNode& node = tree_.nodes[static_cast<std::size_t>(id)];
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.left = left;
        node.right = right;
        return id;
    }

    // Scan entries sorted ascending by feature f; candidate thresholds sit at
    // midpoints between distinct adjacent values. Ascending order plus the
    // strict `>` keeps ties on (smaller feature, smaller threshold).
    void scan_sorted(const std::vector<int>& ord, std::size_t f, std::size_t begin,
                     std::size_t end, double node_weight, double node_impurity, double node_g,
                     double node_h, Split& best) {
        const auto msl = static_cast<std::size_t>(cfg_.params.min_samples_leaf);
        const std::size_t n = end - begin;

        if (cfg_.newton) {
            double gl = 0.0, hl = 0.0;
            double prev = value(ord[begin], f);
            const double parent_term = node_g * node_g / (node_h + cfg_.l2);
            for (std::size_t p = begin; p < end; ++p) {
                const int e = ord[p];
                const double v = value(e, f);
                const std::size_t n_left = p - begin;
                if (v != prev && n_left >= msl && n - n_left >= msl) {
                    const double gr = node_g - gl;
                    const double hr = node_h - hl;
                    const double gain = 0.5 * (gl * gl / (hl + cfg_.l2) +
                                               gr * gr / (hr + cfg_.l2) - parent_term);
                    if (gain > best.gain) {
                        best = {static_cast<int>(f), 0.5 * (prev + v), gain, n_left};
                    }
                }
                const int row = row_of(e);
                gl += (*cfg_.grad)[static_cast<std::size_t>(row)];
                hl += (*cfg_.hess)[static_cast<std::size_t>(row)];
                prev = v;
            }
        } else {
            std::fill(left_class_w_.begin(), left_class_w_.end(), 0.0);
            double wl = 0.0;
            double prev = value(ord[begin], f);
            for (std::size_t p = begin; p < end; ++p) {
                const int e = ord[p];
                const double v = value(e, f);
                const std::size_t n_left = p - begin;
                if (v != prev && n_left >= msl && n - n_left >= msl) {
                    const double wr = node_weight - wl;
                    const double gain = node_impurity - (wl * gini(left_class_w_, wl) +
                                                         wr * gini_right(wr)) / node_weight;
                    if (gain > best.gain) {
                        best = {static_cast<int>(f), 0.5 * (prev + v), gain, n_left};
                    }
                }
                const double w = weight_of(e);
                left_class_w_[static_cast<std::size_t>(label_of(e))] += w;
                wl += w;
                prev = v;
            }
        }
    }

    // One Uniform(node min, node max) threshold for feature f.
    void scan_random(std::size_t f, std::size_t begin, std::size_t end, double node_weight,
                     double node_impurity, double node_g, double node_h, Split& best) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t p = begin; p < end; ++p) {
            const double v = value(plain_[p], f);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (!(hi > lo)) return;  // constant feature in this node
        const double threshold = rng_.uniform(lo, hi);
        if (!(threshold < hi)) return;

        const auto msl = static_cast<std::size_t>(cfg_.params.min_samples_leaf);
        const std::size_t n = end - begin;
        std::size_t n_left = 0;
        if (cfg_.newton) {
            double gl = 0.0, hl = 0.0;
            for (std::size_t p = begin; p < end; ++p) {
                const int e = plain_[p];
                if (value(e, f) <= threshold) {
                    ++n_left;
                    const int row = row_of(e);
                    gl += (*cfg_.grad)[static_cast<std::size_t>(row)];
                    hl += (*cfg_.hess)[static_cast<std::size_t>(row)];
                }
            }
            if (n_left < msl || n - n_left < msl) return;
            const double gr = node_g - gl;
            const double hr = node_h - hl;
            const double gain = 0.5 * (gl * gl / (hl + cfg_.l2) + gr * gr / (hr + cfg_.l2) -
                                       node_g * node_g / (node_h + cfg_.l2));
            if (gain > best.gain) best = {static_cast<int>(f), threshold, gain, n_left};
        } else {
            std::fill(left_class_w_.begin(), left_class_w_.end(), 0.0);
            double wl = 0.0;
            for (std::size_t p = begin; p < end; ++p) {
                const int e = plain_[p];
                if (value(e, f) <= threshold) {
                    ++n_left;
                    const double w = weight_of(e);
                    left_class_w_[static_cast<std::size_t>(label_of(e))] += w;
                    wl += w;
                }
            }
            if (n_left < msl || n - n_left < msl) return;
            const double wr = node_weight - wl;
            const double gain = node_impurity - (wl * gini(left_class_w_, wl) +
                                                 wr * gini_right(wr)) / node_weight;
            if (gain > best.gain) best = {static_cast<int>(f), threshold, gain, n_left};
        }
    }

    void make_leaf(int id, std::size_t begin, std::size_t end, double node_weight, double node_g,
                   double node_h) {
        TreeNode& node = tree_.nodes[static_cast<std::size_t>(id)];
        node.feature = -1;
        if (cfg_.newton) {
            node.value = -node_g / (node_h + cfg_.l2);
            if (leaf_values_) {
                for (std::size_t p = begin; p < end; ++p) {
                    (*leaf_values_)[static_cast<std::size_t>(row_of(plain_[p]))] = node.value;
                }
            }
        } else {
            node.dist.assign(cfg_.n_classes, 0.0);
            for (std::size_t p = begin; p < end; ++p) {
                node.dist[static_cast<std::size_t>(label_of(plain_[p]))] += weight_of(plain_[p]);
            }
            if (node_weight > 0.0) {
                for (double& d : node.dist) d /= node_weight;
            }
        }
    }

    Config cfg_;
    std::vector<int> rows_;  // entry -> row id
    Rng& rng_;
    std::vector<double>* importance_;
    std::vector<double>* leaf_values_;

    std::vector<int> plain_;               // node entry ranges, always maintained
    std::vector<std::vector<int>> order_;  // presort mode: per-feature sorted entries
    std::vector<int> scratch_;
    std::vector<int> pairs_;               // local-sort scratch
    std::vector<std::uint8_t> goes_left_;
    std::vector<int> feature_pool_;
    std::vector<int> candidates_;
    std::vector<double> left_class_w_;
    std::vector<double> node_class_w_;
    double root_weight_ = 0.0;
    Tree tree_;
};

std::vector<int> sorted_classes(const std::vector<int>& y) {
    std::set<int> s(y.begin(), y.end());
    return {s.begin(), s.end()};
}

std::vector<int> index_labels(const std::vector<int>& y, const std::vector<int>& classes) {
    std::vector<int> idx(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const auto it = std::lower_bound(classes.begin(), classes.end(), y[i]);
        if (it == classes.end() || *it != y[i]) {
            throw FitError("label " + std::to_string(y[i]) + " not in the class list");
        }
        idx[i] = static_cast<int>(it - classes.begin());
    }
    return idx;
}

void check_training_input(const Matrix& x, std::size_t n_labels) {
    if (x.rows == 0 || x.cols == 0) throw FitError("empty training input");
    if (x.rows != n_labels) throw FitError("row count does not match label count");
}

int route(const Tree& tree, std::span<const double> row) {
    int at = 0;
    while (!tree.nodes[static_cast<std::size_t>(at)].is_leaf()) {
        const TreeNode& n = tree.nodes[static_cast<std::size_t>(at)];
        at = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return at;
}

void finalize_importances(Ensemble& model, const std::vector<std::vector<double>>& per_tree,
                          std::size_t n_features) {
    model.importances.assign(n_features, 0.0);
    for (const auto& imp : per_tree) {
        for (std::size_t f = 0; f < n_features; ++f) model.importances[f] += imp[f];
    }
    if (!per_tree.empty()) {
        for (double& v : model.importances) v /= static_cast<double>(per_tree.size());
    }
    const double total = std::accumulate(model.importances.begin(), model.importances.end(), 0.0);
    if (total > 0.0) {
        for (double& v : model.importances) v /= total;
    }
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Ensemble fit_forest_family(const Matrix& x, const std::vector<int>& y,
                           const EnsembleParams& params, unsigned n_threads, bool bootstrap,
                           SplitMode mode) {
    params.validate();
    check_training_input(x, y.size());
    const std::vector<int> classes = sorted_classes(y);
    const std::vector<int> y_index = index_labels(y, classes);

    Ensemble model;
    model.kind = params.kind;
    model.params = params;
    model.classes = classes;
    model.trees.resize(static_cast<std::size_t>(params.n_estimators));

    TreeBuilder::Config cfg;
    cfg.x = &x;
    cfg.params = params.tree;
    cfg.params.split_mode = mode;
    cfg.n_candidates = resolve_candidate_count(params.tree, params.kind, x.cols);
    cfg.y_index = &y_index;
    cfg.n_classes = classes.size();

    std::vector<std::vector<double>> per_tree_importance(
        static_cast<std::size_t>(params.n_estimators), std::vector<double>(x.cols, 0.0));

    parallel_for(static_cast<std::size_t>(params.n_estimators), n_threads, [&](std::size_t t) {
        Rng rng(substream(params.seed, t));
        std::vector<int> entry_rows(x.rows);
        if (bootstrap) {
            for (int& e : entry_rows) {
                e = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(x.rows) - 1));
            }
        } else {
            std::iota(entry_rows.begin(), entry_rows.end(), 0);
        }
        TreeBuilder builder(cfg, std::move(entry_rows), rng, &per_tree_importance[t], nullptr);
        model.trees[t] = builder.build();
    });

    finalize_importances(model, per_tree_importance, x.cols);
    return model;
}

}  // namespace

void EnsembleParams::validate() const {
    const bool boosting = kind == EnsembleKind::gradient_boosted;
    if (n_estimators < (boosting ? 0 : 1)) {
        throw ConfigError("n_estimators must be at least 1 (0 allowed for boosting base-only)");
    }
    if (tree.max_depth < 1) throw ConfigError("max_depth must be at least 1");
    if (tree.min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be at least 1");
    if (tree.min_samples_split < 2) throw ConfigError("min_samples_split must be at least 2");
    if (boosting && !(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (boosting && l2_leaf_reg < 0.0) throw ConfigError("l2_leaf_reg must be non-negative");
}

Tree fit_classification_tree(const Matrix& x, const std::vector<int>& y,
                             const std::vector<double>& sample_weights, const TreeParams& params,
                             const std::vector<int>& classes, Rng& rng,
                             std::vector<double>* importance_accum) {
    check_training_input(x, y.size());
    if (!sample_weights.empty() && sample_weights.size() != x.rows) {
        throw FitError("sample weight count does not match row count");
    }
    const std::vector<int> y_index = index_labels(y, classes);

    TreeBuilder::Config cfg;
    cfg.x = &x;
    cfg.params = params;
    cfg.n_candidates = params.feature_rule == FeatureRule::by_kind
                           ? static_cast<int>(x.cols)
                           : resolve_candidate_count(params, EnsembleKind::random_forest, x.cols);
    cfg.y_index = &y_index;
    cfg.row_weights = &sample_weights;
    cfg.n_classes = classes.size();

    std::vector<int> entry_rows(x.rows);
    std::iota(entry_rows.begin(), entry_rows.end(), 0);
    TreeBuilder builder(cfg, std::move(entry_rows), rng, importance_accum, nullptr);
    return builder.build();
}

Tree fit_newton_tree(const Matrix& x, const std::vector<double>& grad,
                     const std::vector<double>& hess, const TreeParams& params,
                     double l2_leaf_reg, Rng& rng, std::vector<double>* importance_accum,
                     std::vector<double>* leaf_value_per_row) {
    check_training_input(x, grad.size());
    if (grad.size() != hess.size()) throw FitError("gradient/hessian length mismatch");

    TreeBuilder::Config cfg;
    cfg.x = &x;
    cfg.params = params;
    cfg.n_candidates = params.feature_rule == FeatureRule::by_kind
                           ? static_cast<int>(x.cols)
                           : resolve_candidate_count(params, EnsembleKind::gradient_boosted, x.cols);
    cfg.newton = true;
    cfg.grad = &grad;
    cfg.hess = &hess;
    cfg.l2 = l2_leaf_reg;

    std::vector<int> entry_rows(x.rows);
    std::iota(entry_rows.begin(), entry_rows.end(), 0);
    TreeBuilder builder(cfg, std::move(entry_rows), rng, importance_accum, leaf_value_per_row);
    return builder.build();
}

Ensemble fit_random_forest(const Matrix& x, const std::vector<int>& y,
                           const EnsembleParams& params, unsigned n_threads) {
    if (params.kind != EnsembleKind::random_forest) {
        throw ConfigError("fit_random_forest requires kind = random_forest");
    }
    return fit_forest_family(x, y, params, n_threads, /*bootstrap=*/true, SplitMode::exhaustive);
}

Ensemble fit_extra_trees(const Matrix& x, const std::vector<int>& y, const EnsembleParams& params,
                         unsigned n_threads) {
    if (params.kind != EnsembleKind::extra_trees) {
        throw ConfigError("fit_extra_trees requires kind = extra_trees");
    }
    return fit_forest_family(x, y, params, n_threads, /*bootstrap=*/false,
                             SplitMode::random_threshold);
}

Ensemble fit_gbt(const Matrix& x, const std::vector<int>& y, const EnsembleParams& params,
                 unsigned n_threads) {
    if (params.kind != EnsembleKind::gradient_boosted) {
        throw ConfigError("fit_gbt requires kind = gradient_boosted");
    }
    params.validate();
    check_training_input(x, y.size());
    const std::vector<int> classes = sorted_classes(y);
    if (classes.size() < 2) throw FitError("boosting requires at least 2 classes");
    const std::vector<int> y_index = index_labels(y, classes);
    const std::size_t n = x.rows;
    const std::size_t n_classes = classes.size();
    const bool binary = n_classes == 2;

    Ensemble model;
    model.kind = params.kind;
    model.params = params;
    model.classes = classes;

    TreeBuilder::Config cfg;
    cfg.x = &x;
    cfg.params = params.tree;
    cfg.params.split_mode = SplitMode::exhaustive;
    cfg.n_candidates = resolve_candidate_count(params.tree, params.kind, x.cols);
    cfg.presort = true;
    cfg.newton = true;
    cfg.l2 = params.l2_leaf_reg;

    // Boosting always trains on the full sample: the root sort order is
    // shared by every round, so compute it once.
    std::vector<std::vector<int>> root_order(x.cols, std::vector<int>(n));
    for (std::size_t f = 0; f < x.cols; ++f) {
        std::iota(root_order[f].begin(), root_order[f].end(), 0);
        std::sort(root_order[f].begin(), root_order[f].end(), [&](int a, int b) {
            const double va = x.at(static_cast<std::size_t>(a), f);
            const double vb = x.at(static_cast<std::size_t>(b), f);
            if (va != vb) return va < vb;
            return a < b;
        });
    }
    cfg.presorted_root = &root_order;

    std::vector<std::vector<double>> per_tree_importance;

    if (binary) {
        double positives = 0.0;
        for (int idx : y_index) positives += idx;
        double p1 = positives / static_cast<double>(n);
        p1 = std::clamp(p1, 1e-12, 1.0 - 1e-12);
        model.base_score = std::log(p1 / (1.0 - p1));

        std::vector<double> score(n, model.base_score);
        std::vector<double> grad(n), hess(n), leaf(n);
        auto log_loss = [&] {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double p = sigmoid(score[i]);
                acc -= y_index[i] == 1 ? std::log(std::max(p, 1e-300))
                                       : std::log(std::max(1.0 - p, 1e-300));
            }
            return acc / static_cast<double>(n);
        };
        model.training_loss.push_back(log_loss());
        for (int round = 0; round < params.n_estimators; ++round) {
            for (std::size_t i = 0; i < n; ++i) {
                const double p = sigmoid(score[i]);
                grad[i] = p - static_cast<double>(y_index[i]);
                hess[i] = std::max(p * (1.0 - p), 1e-16);
            }
            cfg.grad = &grad;
            cfg.hess = &hess;
            Rng rng(substream(params.seed, static_cast<std::uint64_t>(round)));
            per_tree_importance.emplace_back(x.cols, 0.0);
            std::vector<int> entry_rows(n);
            std::iota(entry_rows.begin(), entry_rows.end(), 0);
            TreeBuilder builder(cfg, std::move(entry_rows), rng, &per_tree_importance.back(),
                                &leaf);
            model.trees.push_back(builder.build());
            for (std::size_t i = 0; i < n; ++i) score[i] += params.learning_rate * leaf[i];
            model.training_loss.push_back(log_loss());
        }
    } else {
        // Softmax boosting: every class's gradients come from the scores
        // before the round, so per-class trees are independent within a round.
        std::vector<std::vector<double>> score(n_classes, std::vector<double>(n, 0.0));
        std::vector<std::vector<double>> prob(n_classes, std::vector<double>(n, 0.0));
        auto refresh_probs = [&] {
            for (std::size_t i = 0; i < n; ++i) {
                double zmax = kNegInf;
                for (std::size_t c = 0; c < n_classes; ++c) zmax = std::max(zmax, score[c][i]);
                double denom = 0.0;
                for (std::size_t c = 0; c < n_classes; ++c) {
                    prob[c][i] = std::exp(score[c][i] - zmax);
                    denom += prob[c][i];
                }
                for (std::size_t c = 0; c < n_classes; ++c) prob[c][i] /= denom;
            }
        };
        auto log_loss = [&] {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc -= std::log(std::max(prob[static_cast<std::size_t>(y_index[i])][i], 1e-300));
            }
            return acc / static_cast<double>(n);
        };
        refresh_probs();
        model.training_loss.push_back(log_loss());

        std::vector<std::vector<double>> grad(n_classes, std::vector<double>(n));
        std::vector<std::vector<double>> hess(n_classes, std::vector<double>(n));
        std::vector<std::vector<double>> leaf(n_classes, std::vector<double>(n));
        for (int round = 0; round < params.n_estimators; ++round) {
            for (std::size_t c = 0; c < n_classes; ++c) {
                for (std::size_t i = 0; i < n; ++i) {
                    const double p = prob[c][i];
                    grad[c][i] = p - (static_cast<std::size_t>(y_index[i]) == c ? 1.0 : 0.0);
                    hess[c][i] = std::max(p * (1.0 - p), 1e-16);
                }
            }
            std::vector<Tree> round_trees(n_classes);
            std::vector<std::vector<double>> round_importance(n_classes,
                                                              std::vector<double>(x.cols, 0.0));
            parallel_for(n_classes, n_threads, [&](std::size_t c) {
                TreeBuilder::Config class_cfg = cfg;
                class_cfg.grad = &grad[c];
                class_cfg.hess = &hess[c];
                Rng rng(substream(params.seed,
                                  static_cast<std::uint64_t>(round) * n_classes + c));
                std::vector<int> entry_rows(n);
                std::iota(entry_rows.begin(), entry_rows.end(), 0);
                TreeBuilder builder(class_cfg, std::move(entry_rows), rng, &round_importance[c],
                                    &leaf[c]);
                round_trees[c] = builder.build();
            });
            for (std::size_t c = 0; c < n_classes; ++c) {
                model.trees.push_back(std::move(round_trees[c]));
                per_tree_importance.push_back(std::move(round_importance[c]));
                for (std::size_t i = 0; i < n; ++i) {
                    score[c][i] += params.learning_rate * leaf[c][i];
                }
            }
            refresh_probs();
            model.training_loss.push_back(log_loss());
        }
    }

    finalize_importances(model, per_tree_importance, x.cols);
    return model;
}

Ensemble fit_ensemble(const Matrix& x, const std::vector<int>& y, const EnsembleParams& params,
                      unsigned n_threads) {
    switch (params.kind) {
        case EnsembleKind::random_forest:
            return fit_random_forest(x, y, params, n_threads);
        case EnsembleKind::extra_trees:
            return fit_extra_trees(x, y, params, n_threads);
        case EnsembleKind::gradient_boosted:
            return fit_gbt(x, y, params, n_threads);
    }
    throw ConfigError("unknown ensemble kind");
}

Matrix predict_proba(const Ensemble& model, const Matrix& x) {
    if (x.cols != model.n_features()) {
        throw SchemaError("prediction input has " + std::to_string(x.cols) +
                          " columns, model was trained on " + std::to_string(model.n_features()));
    }
    const std::size_t n_classes = model.classes.size();
    Matrix proba(x.rows, n_classes);

    if (model.kind == EnsembleKind::gradient_boosted) {
        if (n_classes == 2) {
            for (std::size_t r = 0; r < x.rows; ++r) {
                double z = model.base_score;
                for (const Tree& t : model.trees) {
                    z += model.params.learning_rate *
                         t.nodes[static_cast<std::size_t>(route(t, x.row(r)))].value;
                }
                const double p = sigmoid(z);
                proba.at(r, 0) = 1.0 - p;
                proba.at(r, 1) = p;
            }
        } else {
            std::vector<double> z(n_classes);
            for (std::size_t r = 0; r < x.rows; ++r) {
                std::fill(z.begin(), z.end(), 0.0);
                for (std::size_t t = 0; t < model.trees.size(); ++t) {
                    const Tree& tree = model.trees[t];
                    z[t % n_classes] +=
                        model.params.learning_rate *
                        tree.nodes[static_cast<std::size_t>(route(tree, x.row(r)))].value;
                }
                double zmax = kNegInf;
                for (double v : z) zmax = std::max(zmax, v);
                double denom = 0.0;
                for (std::size_t c = 0; c < n_classes; ++c) {
                    z[c] = std::exp(z[c] - zmax);
                    denom += z[c];
                }
                for (std::size_t c = 0; c < n_classes; ++c) proba.at(r, c) = z[c] / denom;
            }
        }
        return proba;
    }

    for (std::size_t r = 0; r < x.rows; ++r) {
        auto row = proba.row(r);
        for (const Tree& t : model.trees) {
            const TreeNode& leaf = t.nodes[static_cast<std::size_t>(route(t, x.row(r)))];
            for (std::size_t c = 0; c < n_classes; ++c) row[c] += leaf.dist[c];
        }
        for (std::size_t c = 0; c < n_classes; ++c) {
            row[c] /= static_cast<double>(model.trees.size());
        }
    }
    return proba;
}

std::vector<int> predict(const Ensemble& model, const Matrix& x, std::optional<double> threshold) {
    const Matrix proba = predict_proba(model, x);
    std::vector<int> out(x.rows);
    if (model.classes.size() == 2) {
        const double cut = threshold.value_or(0.5);
        for (std::size_t r = 0; r < x.rows; ++r) {
            out[r] = proba.at(r, 1) >= cut ? model.classes[1] : model.classes[0];
        }
        return out;
    }
    if (threshold) throw InputError("probability threshold applies to binary models only");
    for (std::size_t r = 0; r < x.rows; ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < model.classes.size(); ++c) {
            if (proba.at(r, c) > proba.at(r, best)) best = c;  // ties keep the smaller class id
        }
        out[r] = model.classes[best];
    }
    return out;
}

std::vector<double> feature_importance(const Ensemble& model) { return model.importances; }

const char* ensemble_kind_name(EnsembleKind kind) {
    switch (kind) {
        case EnsembleKind::random_forest: return "random_forest";
        case EnsembleKind::extra_trees: return "extra_trees";
        case EnsembleKind::gradient_boosted: return "gradient_boosted";
    }
    return "unknown";
}

EnsembleKind ensemble_kind_from(const std::string& name) {
    if (name == "random_forest") return EnsembleKind::random_forest;
    if (name == "extra_trees") return EnsembleKind::extra_trees;
    if (name == "gradient_boosted") return EnsembleKind::gradient_boosted;
    throw ConfigError("unknown classifier kind '" + name + "'");
}

namespace {

const char* split_mode_name(SplitMode m) {
    return m == SplitMode::exhaustive ? "exhaustive" : "random_threshold";
}
SplitMode split_mode_from(const std::string& s) {
    if (s == "exhaustive") return SplitMode::exhaustive;
    if (s == "random_threshold") return SplitMode::random_threshold;
    throw ConfigError("unknown split mode '" + s + "'");
}
const char* feature_rule_name(FeatureRule r) {
    switch (r) {
        case FeatureRule::by_kind: return "by_kind";
        case FeatureRule::sqrt_rule: return "sqrt";
        case FeatureRule::all: return "all";
        case FeatureRule::fixed: return "fixed";
    }
    return "by_kind";
}
FeatureRule feature_rule_from(const std::string& s) {
    if (s == "by_kind") return FeatureRule::by_kind;
    if (s == "sqrt") return FeatureRule::sqrt_rule;
    if (s == "all") return FeatureRule::all;
    if (s == "fixed") return FeatureRule::fixed;
    throw ConfigError("unknown feature rule '" + s + "'");
}

}  // namespace

std::string Ensemble::to_json() const {
    json j;
    j["format"] = "credo.ensemble";
    j["version"] = 1;
    j["kind"] = ensemble_kind_name(kind);
    j["classes"] = classes;
    j["base_score"] = base_score;
    j["importances"] = importances;
    j["feature_names"] = feature_names;
    j["params"] = {{"n_estimators", params.n_estimators},
                   {"learning_rate", params.learning_rate},
                   {"l2_leaf_reg", params.l2_leaf_reg},
                   {"seed", params.seed},
                   {"max_depth", params.tree.max_depth},
                   {"min_samples_leaf", params.tree.min_samples_leaf},
                   {"min_samples_split", params.tree.min_samples_split},
                   {"feature_rule", feature_rule_name(params.tree.feature_rule)},
                   {"n_candidate_features", params.tree.n_candidate_features},
                   {"split_mode", split_mode_name(params.tree.split_mode)}};
    // Nodes in compact array form: [feature, threshold, left, right, value, dist...].
    json trees_json = json::array();
    for (const Tree& t : trees) {
        json nodes = json::array();
        for (const TreeNode& n : t.nodes) {
            json node = json::array({n.feature, n.threshold, n.left, n.right, n.value});
            for (double d : n.dist) node.push_back(d);
            nodes.push_back(std::move(node));
        }
        trees_json.push_back({{"depth", t.depth}, {"nodes", std::move(nodes)}});
    }
    j["trees"] = std::move(trees_json);
    return j.dump();
}

Ensemble Ensemble::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("model document is not valid JSON: ") + e.what());
    }
    if (j.value("format", "") != "credo.ensemble") throw ConfigError("not an ensemble model document");

    Ensemble m;
    m.kind = ensemble_kind_from(j.at("kind").get<std::string>());
    m.classes = j.at("classes").get<std::vector<int>>();
    m.base_score = j.at("base_score").get<double>();
    m.importances = j.at("importances").get<std::vector<double>>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    const json& p = j.at("params");
    m.params.kind = m.kind;
    m.params.n_estimators = p.at("n_estimators").get<int>();
    m.params.learning_rate = p.at("learning_rate").get<double>();
    m.params.l2_leaf_reg = p.at("l2_leaf_reg").get<double>();
    m.params.seed = p.at("seed").get<std::uint64_t>();
    m.params.tree.max_depth = p.at("max_depth").get<int>();
    m.params.tree.min_samples_leaf = p.at("min_samples_leaf").get<int>();
    m.params.tree.min_samples_split = p.at("min_samples_split").get<int>();
    m.params.tree.feature_rule = feature_rule_from(p.at("feature_rule").get<std::string>());
    m.params.tree.n_candidate_features = p.at("n_candidate_features").get<int>();
    m.params.tree.split_mode = split_mode_from(p.at("split_mode").get<std::string>());

    for (const json& tj : j.at("trees")) {
        Tree t;
        t.depth = tj.at("depth").get<int>();
        for (const json& nj : tj.at("nodes")) {
            TreeNode n;
            n.feature = nj.at(0).get<int>();
            n.threshold = nj.at(1).get<double>();
            n.left = nj.at(2).get<int>();
            n.right = nj.at(3).get<int>();
            n.value = nj.at(4).get<double>();
            for (std::size_t i = 5; i < nj.size(); ++i) n.dist.push_back(nj.at(i).get<double>());
            t.nodes.push_back(std::move(n));
        }
        m.trees.push_back(std::move(t));
    }
    return m;
}

void Ensemble::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << to_json() << '\n';
    if (!out) throw IoError("write failed for '" + path + "'");
}

Ensemble Ensemble::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

}  // namespace credo
