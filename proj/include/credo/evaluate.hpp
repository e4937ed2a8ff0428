#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "credo/matrix.hpp"

namespace credo {

// Rows are actual classes, columns are predicted classes.
struct ConfusionMatrix {
    std::vector<int> classes;
    std::vector<std::int64_t> counts;  // row-major, classes.size() squared

    std::size_t size() const { return classes.size(); }
    std::int64_t at(std::size_t actual, std::size_t predicted) const {
        return counts[actual * classes.size() + predicted];
    }
    std::int64_t& at(std::size_t actual, std::size_t predicted) {
        return counts[actual * classes.size() + predicted];
    }
    std::int64_t total() const;
    std::int64_t trace() const;

    std::string to_json() const;
    static ConfusionMatrix from_json(const std::string& text);
};

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                          const std::vector<int>& classes);

struct ClassRates {
    int class_id = 0;
    double precision = 0.0;
    double recall = 0.0;
    std::int64_t support = 0;
    bool precision_degenerate = false;  // 0/0 reported as 0
    bool recall_degenerate = false;
};

struct MetricsReport {
    double accuracy = 0.0;
    std::vector<ClassRates> per_class;
    std::optional<double> specificity;  // binary only: recall of the first (negative) class
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double weighted_precision = 0.0;
    double weighted_recall = 0.0;

    std::string to_json() const;
};

MetricsReport classification_metrics(const ConfusionMatrix& cm);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // from (0,0) to (1,1), thresholds descending
    double auc = 0.0;

    std::string to_csv() const;  // fpr,tpr,threshold
};

// Threshold sweep over distinct scores, trapezoid AUC; equals the tie-aware
// Mann-Whitney statistic (ties count one half). y must be 0/1 with 1 the
// positive class.
RocCurve roc_auc(const std::vector<int>& y_true, const std::vector<double>& scores);

// Unweighted mean of one-vs-rest AUCs over the classes present in y_true.
double multiclass_auc(const std::vector<int>& y_true, const Matrix& proba,
                      const std::vector<int>& classes);

// Dollar payoffs per (actual, predicted) cell, stored as integer cents so
// the confusion dot product stays exact.
struct PayoffMatrix {
    std::vector<int> classes;
    std::vector<std::int64_t> cents;  // row-major, aligned with ConfusionMatrix

    std::size_t size() const { return classes.size(); }
    std::int64_t at(std::size_t actual, std::size_t predicted) const {
        return cents[actual * classes.size() + predicted];
    }

    // Booked-good predicted good: +$200; booked-delinquent predicted good:
    // -$600; all other cells $0.
    static PayoffMatrix risk_default();

    std::string to_json() const;                       // dollars
    static PayoffMatrix from_json(const std::string&);  // dollars, rounded to cents
};

// Sum of counts[i][j] * payoff[i][j] in integer cents.
std::int64_t profit_cents(const ConfusionMatrix& cm, const PayoffMatrix& payoff);

std::string format_dollars(std::int64_t cents);

}  // namespace credo
