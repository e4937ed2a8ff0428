#include "credo/featsel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "credo/errors.hpp"

namespace credo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Cholesky factorization in place; returns false when the matrix is not
// positive definite.
bool cholesky(std::vector<double>& a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) sum -= a[i * n + k] * a[j * n + k];
            if (i == j) {
                if (sum <= 0.0) return false;
                a[i * n + i] = std::sqrt(sum);
            } else {
                a[i * n + j] = sum / a[j * n + j];
            }
        }
    }
    return true;
}

std::vector<double> cholesky_solve(const std::vector<double>& chol, std::size_t n,
                                   std::vector<double> b) {
    for (std::size_t i = 0; i < n; ++i) {
        double sum = b[i];
        for (std::size_t k = 0; k < i; ++k) sum -= chol[i * n + k] * b[k];
        b[i] = sum / chol[i * n + i];
    }
    for (std::size_t i = n; i-- > 0;) {
        double sum = b[i];
        for (std::size_t k = i + 1; k < n; ++k) sum -= chol[k * n + i] * b[k];
        b[i] = sum / chol[i * n + i];
    }
    return b;
}

// Gram matrix of [1, X] over the frame's feature columns. Index 0 is the
// intercept; feature j maps to index j + 1.
struct Gram {
    std::size_t n_rows = 0;
    std::size_t k = 0;  // feature count
    std::vector<double> g;  // (k+1) x (k+1)

    double at(std::size_t i, std::size_t j) const { return g[i * (k + 1) + j]; }
};

Gram build_gram(const Frame& frame) {
    const auto feats = frame.feature_indices();
    Gram gram;
    gram.n_rows = frame.n_rows();
    gram.k = feats.size();
    const std::size_t dim = gram.k + 1;
    gram.g.assign(dim * dim, 0.0);
    gram.g[0] = static_cast<double>(frame.n_rows());

    for (std::size_t a = 0; a < feats.size(); ++a) {
        const Column& ca = frame.col(feats[a]);
        for (std::size_t r = 0; r < ca.missing.size(); ++r) {
            if (ca.missing[r]) {
                throw StatsError("column '" + ca.meta.name + "' has missing cells; impute first");
            }
        }
        gram.g[(a + 1)] = gram.g[(a + 1) * dim] =
            std::accumulate(ca.values.begin(), ca.values.end(), 0.0);
        for (std::size_t b = 0; b <= a; ++b) {
            const Column& cb = frame.col(feats[b]);
            double dot = 0.0;
            for (std::size_t r = 0; r < ca.values.size(); ++r) dot += ca.values[r] * cb.values[r];
            gram.g[(a + 1) * dim + (b + 1)] = dot;
            gram.g[(b + 1) * dim + (a + 1)] = dot;
        }
    }
    return gram;
}

// VIF of `target` (position into the gram's feature list) regressed on the
// active features minus itself, plus intercept.
double vif_from_gram(const Gram& gram, const std::vector<std::size_t>& active,
                     std::size_t target) {
    const std::size_t dim = gram.k + 1;
    std::vector<std::size_t> lhs;  // gram indices: intercept + other active features
    lhs.push_back(0);
    for (std::size_t f : active) {
        if (f != target) lhs.push_back(f + 1);
    }
    const std::size_t m = lhs.size();
    const std::size_t t = target + 1;

    std::vector<double> a(m * m);
    std::vector<double> b(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) a[i * m + j] = gram.g[lhs[i] * dim + lhs[j]];
        b[i] = gram.g[lhs[i] * dim + t];
    }

    // Ridge jitter on singular systems; escalates tenfold until it factors.
    std::vector<double> chol = a;
    double jitter = 1e-10;
    while (!cholesky(chol, m)) {
        chol = a;
        for (std::size_t i = 0; i < m; ++i) chol[i * m + i] += jitter;
        jitter *= 10.0;
    }
    const std::vector<double> coef = cholesky_solve(chol, m, b);

    const double yy = gram.g[t * dim + t];
    const double ysum = gram.g[t];  // row 0 holds column sums
    const double n = static_cast<double>(gram.n_rows);
    const double sst = yy - ysum * ysum / n;
    if (!(sst > 0.0)) return kInf;  // constant target: no variance to inflate

    double fitted_quad = 0.0;  // coef' A coef
    for (std::size_t i = 0; i < m; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < m; ++j) row += a[i * m + j] * coef[j];
        fitted_quad += coef[i] * row;
    }
    double bc = 0.0;
    for (std::size_t i = 0; i < m; ++i) bc += b[i] * coef[i];
    const double ssr = std::max(0.0, yy - 2.0 * bc + fitted_quad);

    const double r2 = 1.0 - ssr / sst;
    if (r2 >= 1.0 - 1e-12) return kInf;
    return std::max(1.0, 1.0 / (1.0 - r2));
}

}  // namespace

CorrMatrix correlation_matrix(const Frame& frame) {
    if (frame.n_rows() < 2) throw StatsError("correlation requires at least 2 rows");
    const auto feats = frame.feature_indices();
    const std::size_t k = feats.size();
    const std::size_t n = frame.n_rows();

    CorrMatrix corr;
    corr.names.reserve(k);
    for (std::size_t i : feats) corr.names.push_back(frame.col(i).meta.name);
    corr.values.assign(k * k, 0.0);
    corr.zero_variance.assign(k, 0);

    // Two-pass: center first, then accumulate cross products.
    std::vector<std::vector<double>> centered(k);
    std::vector<double> norms(k);
    for (std::size_t a = 0; a < k; ++a) {
        const Column& c = frame.col(feats[a]);
        for (std::size_t r = 0; r < n; ++r) {
            if (c.missing[r]) {
                throw StatsError("column '" + c.meta.name + "' has missing cells; impute first");
            }
        }
        const double mean = std::accumulate(c.values.begin(), c.values.end(), 0.0) /
                            static_cast<double>(n);
        centered[a].resize(n);
        double ss = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            centered[a][r] = c.values[r] - mean;
            ss += centered[a][r] * centered[a][r];
        }
        norms[a] = std::sqrt(ss);
        if (norms[a] == 0.0) corr.zero_variance[a] = 1;
    }

    for (std::size_t a = 0; a < k; ++a) {
        corr.at(a, a) = 1.0;
        for (std::size_t b = 0; b < a; ++b) {
            double value = 0.0;
            if (!corr.zero_variance[a] && !corr.zero_variance[b]) {
                double dot = 0.0;
                for (std::size_t r = 0; r < n; ++r) dot += centered[a][r] * centered[b][r];
                value = dot / (norms[a] * norms[b]);
                value = std::clamp(value, -1.0, 1.0);
            }
            corr.at(a, b) = value;
            corr.at(b, a) = value;
        }
    }
    return corr;
}

FeatureClustering cluster_features(const CorrMatrix& corr, const ClusterCut& cut) {
    const std::size_t n = corr.size();
    if (n == 0) throw ConfigError("cannot cluster an empty correlation matrix");
    if (cut.kind == ClusterCut::Kind::count && (cut.count < 1 || cut.count > n)) {
        throw ConfigError("cluster count must lie in [1, " + std::to_string(n) + "]");
    }

    struct Active {
        int id;                 // dendrogram id
        int smallest;           // smallest member column index, for tie-breaks
        int size;
        std::vector<int> members;
    };
    std::vector<Active> active;
    active.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        active.push_back({static_cast<int>(i), static_cast<int>(i), 1, {static_cast<int>(i)}});
    }

    // Pairwise distances between active clusters, Lance-Williams average
    // linkage updates. O(n^3) overall; feature counts here are small.
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) dist[i][j] = 1.0 - corr.at(i, j) * corr.at(i, j);
        }
    }

    FeatureClustering out;
    out.names = corr.names;
    out.cut = cut;

    int next_id = static_cast<int>(n);
    while (active.size() > 1) {
        std::size_t best_a = 0, best_b = 1;
        double best_d = kInf;
        for (std::size_t a = 0; a < active.size(); ++a) {
            for (std::size_t b = a + 1; b < active.size(); ++b) {
                const double d = dist[a][b];
                const int pa = std::min(active[a].smallest, active[b].smallest);
                const int pb = std::max(active[a].smallest, active[b].smallest);
                const int qa = std::min(active[best_a].smallest, active[best_b].smallest);
                const int qb = std::max(active[best_a].smallest, active[best_b].smallest);
                if (d < best_d || (d == best_d && (pa < qa || (pa == qa && pb < qb)))) {
                    best_d = d;
                    best_a = a;
                    best_b = b;
                }
            }
        }

        Active& lhs = active[best_a];
        Active& rhs = active[best_b];
        out.merges.push_back({lhs.id, rhs.id, best_d, lhs.size + rhs.size});

        for (std::size_t other = 0; other < active.size(); ++other) {
            if (other == best_a || other == best_b) continue;
            const double updated =
                (dist[best_a][other] * lhs.size + dist[best_b][other] * rhs.size) /
                static_cast<double>(lhs.size + rhs.size);
            dist[best_a][other] = updated;
            dist[other][best_a] = updated;
        }

        lhs.id = next_id++;
        lhs.smallest = std::min(lhs.smallest, rhs.smallest);
        lhs.size += rhs.size;
        lhs.members.insert(lhs.members.end(), rhs.members.begin(), rhs.members.end());

        active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_b));
        dist.erase(dist.begin() + static_cast<std::ptrdiff_t>(best_b));
        for (auto& row : dist) row.erase(row.begin() + static_cast<std::ptrdiff_t>(best_b));
    }

    // Replay merges against the cut to form assignments.
    std::vector<int> parent(n + out.merges.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::size_t n_active = n;
    for (std::size_t t = 0; t < out.merges.size(); ++t) {
        const Merge& m = out.merges[t];
        if (cut.kind == ClusterCut::Kind::height) {
            if (m.height > cut.height) break;
        } else {
            if (n_active <= cut.count) break;
        }
        const int merged = static_cast<int>(n + t);
        parent[find(m.left)] = merged;
        parent[find(m.right)] = merged;
        --n_active;
    }

    std::vector<int> roots(n);
    for (std::size_t i = 0; i < n; ++i) roots[i] = find(static_cast<int>(i));
    // Relabel clusters 0..K-1 ordered by smallest member column index.
    std::vector<int> order;
    std::vector<int> label(parent.size(), -1);
    for (std::size_t i = 0; i < n; ++i) {
        if (label[roots[i]] < 0) {
            label[roots[i]] = static_cast<int>(order.size());
            order.push_back(roots[i]);
        }
    }
    out.assignments.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.assignments[i] = label[roots[i]];
    out.n_clusters = order.size();
    return out;
}

std::string FeatureClustering::dendrogram_json() const {
    nlohmann::json j;
    j["names"] = names;
    nlohmann::json merges_json = nlohmann::json::array();
    for (const Merge& m : merges) {
        merges_json.push_back({{"left", m.left}, {"right", m.right},
                               {"height", m.height}, {"size", m.size}});
    }
    j["merges"] = merges_json;
    j["n_clusters"] = n_clusters;
    nlohmann::json assign;
    for (std::size_t i = 0; i < names.size(); ++i) assign[names[i]] = assignments[i];
    j["assignments"] = assign;
    return j.dump(2);
}

std::vector<std::string> pick_representatives(const Frame& frame,
                                              const FeatureClustering& clustering) {
    if (clustering.names.empty()) return {};
    const CorrMatrix corr = correlation_matrix(frame.select_columns(clustering.names));

    std::vector<std::vector<std::size_t>> clusters(clustering.n_clusters);
    for (std::size_t i = 0; i < clustering.assignments.size(); ++i) {
        clusters[static_cast<std::size_t>(clustering.assignments[i])].push_back(i);
    }

    std::vector<std::string> reps;
    reps.reserve(clusters.size());
    for (const auto& members : clusters) {
        if (members.size() == 1) {
            reps.push_back(clustering.names[members[0]]);
            continue;
        }
        std::size_t best = members[0];
        double best_r2 = -1.0;
        for (std::size_t j : members) {
            double sum = 0.0;
            for (std::size_t k : members) {
                if (k == j) continue;
                const double c = corr.at(j, k);
                sum += c * c;
            }
            const double r2 = sum / static_cast<double>(members.size() - 1);
            if (r2 > best_r2) {  // ascending member order makes ties pick the smallest index
                best_r2 = r2;
                best = j;
            }
        }
        reps.push_back(clustering.names[best]);
    }
    return reps;
}

double vif(const Frame& frame, std::string_view target) {
    const auto feats = frame.feature_indices();
    if (feats.size() < 2) throw StatsError("vif requires at least 2 feature columns");
    const Gram gram = build_gram(frame);

    std::vector<std::size_t> active(feats.size());
    std::iota(active.begin(), active.end(), std::size_t{0});
    std::size_t target_pos = feats.size();
    for (std::size_t i = 0; i < feats.size(); ++i) {
        if (frame.col(feats[i]).meta.name == target) target_pos = i;
    }
    if (target_pos == feats.size()) {
        throw SchemaError("no feature column named '" + std::string(target) + "'");
    }
    return vif_from_gram(gram, active, target_pos);
}

VifTrace vif_prune(const Frame& frame, double threshold) {
    const auto feats = frame.feature_indices();
    if (feats.empty()) throw StatsError("vif_prune requires at least 1 feature column");

    VifTrace trace;
    trace.threshold = threshold;

    std::vector<std::string> names;
    names.reserve(feats.size());
    for (std::size_t i : feats) names.push_back(frame.col(i).meta.name);

    if (feats.size() == 1) {
        trace.kept.emplace_back(names[0], 1.0);
        return trace;
    }

    const Gram gram = build_gram(frame);
    std::vector<std::size_t> active(feats.size());
    std::iota(active.begin(), active.end(), std::size_t{0});

    while (active.size() > 1) {
        std::size_t worst = 0;
        double worst_vif = -kInf;
        std::vector<double> vifs(active.size());
        for (std::size_t i = 0; i < active.size(); ++i) {
            vifs[i] = vif_from_gram(gram, active, active[i]);
            if (vifs[i] > worst_vif) {  // ties keep the earliest (smallest column index)
                worst_vif = vifs[i];
                worst = i;
            }
        }
        if (!(worst_vif > threshold)) {
            for (std::size_t i = 0; i < active.size(); ++i) {
                trace.kept.emplace_back(names[active[i]], vifs[i]);
            }
            return trace;
        }
        trace.removals.push_back({names[active[worst]], worst_vif});
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(worst));
    }

    // Single survivor: nothing left to regress it on.
    trace.kept.emplace_back(names[active[0]], 1.0);
    return trace;
}

std::string VifTrace::to_csv() const {
    std::ostringstream out;
    out << "step,column,vif\n";
    for (std::size_t i = 0; i < removals.size(); ++i) {
        out << (i + 1) << ',' << removals[i].column << ',' << removals[i].vif_at_removal << '\n';
    }
    for (const auto& [name, value] : kept) {
        out << 0 << ',' << name << ',' << value << '\n';
    }
    return out.str();
}

}  // namespace credo
