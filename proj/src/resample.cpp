#include "credo/resample.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <json.hpp>

#include "credo/errors.hpp"
#include "credo/rng.hpp"

namespace credo {

namespace {

double squared_distance(const Matrix& m, std::size_t a, std::size_t b) {
    const double* pa = m.data.data() + a * m.cols;
    const double* pb = m.data.data() + b * m.cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) {
        const double d = pa[c] - pb[c];
        acc += d * d;
    }
    return acc;
}

void check_unit_range(const Matrix& x) {
    for (double v : x.data) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ResampleError("adasyn expects min-max scaled inputs in [0,1]; saw " +
                                std::to_string(v));
        }
    }
}

// One oversampling pass for `cls` against everything else; appends synthetic
// rows to out_x/out_y. Neighbor queries always run against the original
// matrix.
AdasynReport adasyn_pass(const Matrix& x, const std::vector<int>& y, int cls,
                         std::size_t goal_count, const AdasynConfig& config, Matrix& out_x,
                         std::vector<int>& out_y) {
    std::vector<std::size_t> members;
    for (std::size_t r = 0; r < y.size(); ++r) {
        if (y[r] == cls) members.push_back(r);
    }
    const std::size_t m_min = members.size();
    if (m_min < 2) {
        throw ResampleError("class " + std::to_string(cls) +
                            " has fewer than 2 rows; segment endpoints need at least one neighbor");
    }

    AdasynReport report;
    report.minority_class = cls;
    report.g_requested = config.beta * static_cast<double>(goal_count - m_min);
    const auto total = static_cast<std::size_t>(std::llround(report.g_requested));
    if (total == 0) return report;

    const std::size_t k_full = std::min(config.k_neighbors, x.rows - 1);
    const std::size_t k_pool = std::min(config.k_neighbors, m_min - 1);

    report.points.resize(m_min);
    double r_sum = 0.0;
    for (std::size_t i = 0; i < m_min; ++i) {
        const std::size_t row = members[i];
        const auto neighbors = knn(x, row, k_full);
        std::size_t majority = 0;
        for (std::size_t nb : neighbors) {
            if (y[nb] != cls) ++majority;
        }
        report.points[i].row = row;
        report.points[i].r = static_cast<double>(majority) / static_cast<double>(neighbors.size());
        r_sum += report.points[i].r;
    }
    for (auto& p : report.points) {
        p.r_hat = r_sum > 0.0 ? p.r / r_sum : 1.0 / static_cast<double>(m_min);
    }

    // Largest-remainder rounding: quotas floor down, leftovers go to the
    // largest fractional parts (ties to the earlier point).
    std::vector<double> remainder(m_min);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < m_min; ++i) {
        const double quota = report.points[i].r_hat * report.g_requested;
        report.points[i].g = static_cast<std::size_t>(std::floor(quota));
        remainder[i] = quota - std::floor(quota);
        assigned += report.points[i].g;
    }
    std::vector<std::size_t> order(m_min);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; assigned < total && i < order.size(); ++i, ++assigned) {
        ++report.points[order[i]].g;
    }

    for (std::size_t i = 0; i < m_min; ++i) {
        const std::size_t row = members[i];
        if (report.points[i].g == 0) continue;
        const auto pool = knn(x, row, k_pool, &members);
        Rng rng(substream(substream(config.seed, static_cast<std::uint64_t>(cls)),
                          static_cast<std::uint64_t>(row)));
        for (std::size_t d = 0; d < report.points[i].g; ++d) {
            const std::size_t z =
                pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))];
            const double lambda = rng.uniform01();
            const std::size_t at = out_x.rows;
            out_x.rows += 1;
            out_x.data.resize(out_x.rows * out_x.cols);
            for (std::size_t c = 0; c < x.cols; ++c) {
                const double base = x.at(row, c);
                out_x.at(at, c) = base + lambda * (x.at(z, c) - base);
            }
            out_y.push_back(cls);
        }
        report.generated += report.points[i].g;
    }
    return report;
}

void validate_config(const AdasynConfig& config) {
    if (config.k_neighbors < 1) throw ConfigError("k_neighbors must be at least 1");
    if (!(config.beta >= 0.0 && config.beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
}

}  // namespace

std::vector<std::size_t> knn(const Matrix& points, std::size_t query, std::size_t k,
                             const std::vector<std::size_t>* restrict) {
    std::vector<std::pair<double, std::size_t>> candidates;
    if (restrict) {
        candidates.reserve(restrict->size());
        for (std::size_t r : *restrict) {
            if (r != query) candidates.emplace_back(squared_distance(points, query, r), r);
        }
    } else {
        candidates.reserve(points.rows);
        for (std::size_t r = 0; r < points.rows; ++r) {
            if (r != query) candidates.emplace_back(squared_distance(points, query, r), r);
        }
    }
    if (k > candidates.size()) {
        throw InputError("knn: k=" + std::to_string(k) + " exceeds the " +
                         std::to_string(candidates.size()) + " eligible rows");
    }
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                      candidates.end());  // pair ordering = (distance, then row index)
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = candidates[i].second;
    return out;
}

AdasynResult adasyn(const Matrix& x, const std::vector<int>& y, const AdasynConfig& config) {
    validate_config(config);
    if (x.rows != y.size()) throw InputError("adasyn: row count does not match label count");
    check_unit_range(x);

    std::map<int, std::size_t> counts;
    for (int v : y) ++counts[v];
    if (counts.size() != 2) {
        throw ResampleError("adasyn requires exactly 2 classes, saw " +
                            std::to_string(counts.size()));
    }
    auto first = counts.begin();
    auto second = std::next(first);
    int minority = first->second <= second->second ? first->first : second->first;
    if (config.target_class) {
        if (!counts.count(*config.target_class)) {
            throw ConfigError("target class " + std::to_string(*config.target_class) +
                              " not present in labels");
        }
        minority = *config.target_class;
    }
    const std::size_t m_min = counts.at(minority);
    const std::size_t m_maj = first->first == minority ? second->second : first->second;
    if (m_min < 2) throw ResampleError("adasyn requires at least 2 minority rows");

    AdasynResult result{x, y, {}};
    result.report = adasyn_pass(x, y, minority, m_maj, config, result.x, result.y);
    return result;
}

MulticlassAdasynResult adasyn_multiclass(const Matrix& x, const std::vector<int>& y,
                                         const AdasynConfig& config) {
    validate_config(config);
    if (x.rows != y.size()) throw InputError("adasyn: row count does not match label count");
    check_unit_range(x);

    std::map<int, std::size_t> counts;
    for (int v : y) ++counts[v];
    if (counts.size() < 2) throw ResampleError("adasyn requires at least 2 classes");
    std::size_t m_max = 0;
    for (const auto& [cls, n] : counts) m_max = std::max(m_max, n);

    MulticlassAdasynResult result{x, y, {}};
    for (const auto& [cls, n] : counts) {  // std::map iterates ascending class id
        if (n == m_max) continue;
        result.reports.push_back(adasyn_pass(x, y, cls, m_max, config, result.x, result.y));
    }
    return result;
}

std::string AdasynReport::to_json() const {
    nlohmann::json j;
    j["minority_class"] = minority_class;
    j["g_requested"] = g_requested;
    j["generated"] = generated;
    nlohmann::json pts = nlohmann::json::array();
    for (const AdasynPointStats& p : points) {
        pts.push_back({{"row", p.row}, {"r", p.r}, {"r_hat", p.r_hat}, {"g", p.g}});
    }
    j["points"] = pts;
    return j.dump(2);
}

}  // namespace credo
