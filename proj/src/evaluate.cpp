#include "credo/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "credo/errors.hpp"

namespace credo {

namespace {

using nlohmann::json;

std::size_t class_position(const std::vector<int>& classes, int value) {
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (classes[i] == value) return i;
    }
    throw InputError("value " + std::to_string(value) + " is not in the class list");
}

}  // namespace

std::int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::trace() const {
    std::int64_t acc = 0;
    for (std::size_t i = 0; i < classes.size(); ++i) acc += at(i, i);
    return acc;
}

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                          const std::vector<int>& classes) {
    if (y_true.size() != y_pred.size()) {
        throw InputError("confusion: actual and predicted lengths differ");
    }
    ConfusionMatrix cm;
    cm.classes = classes;
    cm.counts.assign(classes.size() * classes.size(), 0);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const std::size_t a = class_position(classes, y_true[i]);
        const std::size_t p = class_position(classes, y_pred[i]);
        ++cm.at(a, p);
    }
    return cm;
}

MetricsReport classification_metrics(const ConfusionMatrix& cm) {
    const std::int64_t total = cm.total();
    if (total <= 0) throw InputError("classification_metrics: empty confusion matrix");

    MetricsReport report;
    report.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);

    const std::size_t k = cm.size();
    double weighted_p = 0.0, weighted_r = 0.0, macro_p = 0.0, macro_r = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        std::int64_t row_sum = 0, col_sum = 0;
        for (std::size_t j = 0; j < k; ++j) {
            row_sum += cm.at(c, j);
            col_sum += cm.at(j, c);
        }
        ClassRates rates;
        rates.class_id = cm.classes[c];
        rates.support = row_sum;
        rates.precision_degenerate = col_sum == 0;
        rates.recall_degenerate = row_sum == 0;
        rates.precision = col_sum == 0 ? 0.0
                                       : static_cast<double>(cm.at(c, c)) /
                                             static_cast<double>(col_sum);
        rates.recall = row_sum == 0 ? 0.0
                                    : static_cast<double>(cm.at(c, c)) /
                                          static_cast<double>(row_sum);
        macro_p += rates.precision;
        macro_r += rates.recall;
        weighted_p += rates.precision * static_cast<double>(row_sum);
        weighted_r += rates.recall * static_cast<double>(row_sum);
        report.per_class.push_back(rates);
    }
    report.macro_precision = macro_p / static_cast<double>(k);
    report.macro_recall = macro_r / static_cast<double>(k);
    report.weighted_precision = weighted_p / static_cast<double>(total);
    report.weighted_recall = weighted_r / static_cast<double>(total);
    if (k == 2) report.specificity = report.per_class[0].recall;
    return report;
}

RocCurve roc_auc(const std::vector<int>& y_true, const std::vector<double>& scores) {
    if (y_true.size() != scores.size()) throw InputError("roc_auc: length mismatch");
    std::int64_t positives = 0, negatives = 0;
    for (int v : y_true) {
        if (v == 1) {
            ++positives;
        } else if (v == 0) {
            ++negatives;
        } else {
            throw InputError("roc_auc: labels must be 0 or 1");
        }
    }
    if (positives == 0 || negatives == 0) {
        throw InputError("roc_auc: AUC is undefined with a single class");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::int64_t tp = 0, fp = 0;
    double auc = 0.0;
    double prev_fpr = 0.0, prev_tpr = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        // Consume the whole tie group so equal scores form one curve point;
        // the trapezoid over the diagonal segment is the half-credit for ties.
        while (i < order.size() && scores[order[i]] == s) {
            if (y_true[order[i]] == 1) {
                ++tp;
            } else {
                ++fp;
            }
            ++i;
        }
        const double tpr = static_cast<double>(tp) / static_cast<double>(positives);
        const double fpr = static_cast<double>(fp) / static_cast<double>(negatives);
        auc += (fpr - prev_fpr) * (tpr + prev_tpr) * 0.5;
        curve.points.push_back({fpr, tpr, s});
        prev_fpr = fpr;
        prev_tpr = tpr;
    }
    curve.auc = auc;
    return curve;
}

double multiclass_auc(const std::vector<int>& y_true, const Matrix& proba,
                      const std::vector<int>& classes) {
    if (y_true.size() != proba.rows) throw InputError("multiclass_auc: length mismatch");
    if (proba.cols != classes.size()) throw InputError("multiclass_auc: class count mismatch");

    std::vector<int> present;
    for (int c : classes) {
        if (std::find(y_true.begin(), y_true.end(), c) != y_true.end()) present.push_back(c);
    }
    if (present.size() < 2) {
        throw InputError("multiclass_auc: need at least 2 classes present");
    }

    double acc = 0.0;
    for (int c : present) {
        const std::size_t col = class_position(classes, c);
        std::vector<int> one_vs_rest(y_true.size());
        std::vector<double> scores(y_true.size());
        for (std::size_t i = 0; i < y_true.size(); ++i) {
            one_vs_rest[i] = y_true[i] == c ? 1 : 0;
            scores[i] = proba.at(i, col);
        }
        acc += roc_auc(one_vs_rest, scores).auc;
    }
    return acc / static_cast<double>(present.size());
}

PayoffMatrix PayoffMatrix::risk_default() {
    PayoffMatrix p;
    p.classes = {0, 1};
    // (actual, predicted): booking a good customer earns $200, booking a
    // delinquent one costs $600; declined customers carry no charge.
    p.cents = {200 * 100, 0,
               -600 * 100, 0};
    return p;
}

std::int64_t profit_cents(const ConfusionMatrix& cm, const PayoffMatrix& payoff) {
    if (cm.size() != payoff.size() || cm.classes != payoff.classes) {
        throw InputError("profit: confusion and payoff dimensions do not match");
    }
    std::int64_t acc = 0;
    for (std::size_t i = 0; i < cm.counts.size(); ++i) acc += cm.counts[i] * payoff.cents[i];
    return acc;
}

std::string format_dollars(std::int64_t cents) {
    const bool negative = cents < 0;
    std::uint64_t magnitude = negative ? static_cast<std::uint64_t>(-(cents + 1)) + 1
                                       : static_cast<std::uint64_t>(cents);
    std::ostringstream out;
    out << (negative ? "-$" : "$") << magnitude / 100;
    const auto rem = magnitude % 100;
    if (rem != 0) out << '.' << (rem < 10 ? "0" : "") << rem;
    return out.str();
}

std::string ConfusionMatrix::to_json() const {
    json j;
    j["classes"] = classes;
    json rows = json::array();
    for (std::size_t a = 0; a < size(); ++a) {
        json row = json::array();
        for (std::size_t p = 0; p < size(); ++p) row.push_back(at(a, p));
        rows.push_back(std::move(row));
    }
    j["counts"] = std::move(rows);  // rows = actual, columns = predicted
    return j.dump(2);
}

ConfusionMatrix ConfusionMatrix::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("confusion matrix is not valid JSON: ") + e.what());
    }
    ConfusionMatrix cm;
    try {
        cm.classes = j.at("classes").get<std::vector<int>>();
        const auto rows = j.at("counts");
        if (rows.size() != cm.classes.size()) throw InputError("confusion matrix is not square");
        for (const auto& row : rows) {
            if (row.size() != cm.classes.size()) throw InputError("confusion matrix is not square");
            for (const auto& v : row) cm.counts.push_back(v.get<std::int64_t>());
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("bad confusion matrix field: ") + e.what());
    }
    return cm;
}

std::string MetricsReport::to_json() const {
    json j;
    j["accuracy"] = accuracy;
    if (specificity) j["specificity"] = *specificity;
    j["macro_precision"] = macro_precision;
    j["macro_recall"] = macro_recall;
    j["weighted_precision"] = weighted_precision;
    j["weighted_recall"] = weighted_recall;
    json per = json::array();
    for (const ClassRates& r : per_class) {
        per.push_back({{"class", r.class_id},
                       {"precision", r.precision},
                       {"recall", r.recall},
                       {"support", r.support},
                       {"precision_degenerate", r.precision_degenerate},
                       {"recall_degenerate", r.recall_degenerate}});
    }
    j["per_class"] = std::move(per);
    return j.dump(2);
}

std::string RocCurve::to_csv() const {
    std::ostringstream out;
    out << "fpr,tpr,threshold\n";
    for (const RocPoint& p : points) {
        out << p.fpr << ',' << p.tpr << ',' << p.threshold << '\n';
    }
    return out.str();
}

std::string PayoffMatrix::to_json() const {
    json j;
    j["classes"] = classes;
    json rows = json::array();
    for (std::size_t a = 0; a < size(); ++a) {
        json row = json::array();
        for (std::size_t p = 0; p < size(); ++p) {
            row.push_back(static_cast<double>(at(a, p)) / 100.0);
        }
        rows.push_back(std::move(row));
    }
    j["dollars"] = std::move(rows);
    return j.dump(2);
}

PayoffMatrix PayoffMatrix::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("payoff matrix is not valid JSON: ") + e.what());
    }
    PayoffMatrix p;
    try {
        p.classes = j.at("classes").get<std::vector<int>>();
        const auto rows = j.at("dollars");
        if (rows.size() != p.classes.size()) throw InputError("payoff matrix is not square");
        for (const auto& row : rows) {
            if (row.size() != p.classes.size()) throw InputError("payoff matrix is not square");
            for (const auto& v : row) {
                p.cents.push_back(std::llround(v.get<double>() * 100.0));
            }
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("bad payoff matrix field: ") + e.what());
    }
    return p;
}

}  // namespace credo
