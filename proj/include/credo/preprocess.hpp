#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "credo/frame.hpp"

namespace credo {

// Inclusive integer intervals whose integer-valued cells are sentinel
// "missing digit" codes.
struct CodeRange {
    long long lo = 0;
    long long hi = 0;
};

struct CodeRanges {
    std::vector<CodeRange> ranges;

    static CodeRanges defaults() { return {{{2, 9}, {92, 99999}}}; }

    // True when v is integer-valued and falls inside one of the ranges.
    bool contains(double v) const;

    void validate() const;  // ConfigError when lo > hi
};

enum class DropReason { single_unique, high_missing };

struct ColumnStats {
    double median = 0.0;
    double mean = 0.0;
    double std_dev = 0.0;  // population form
    double min = 0.0;
    double max = 0.0;
    // Set when clamping collapsed the column (max == min); scaled output is
    // pinned to 0 for such columns.
    bool degenerate_range = false;
};

// Fitted once on the training partition; apply never recomputes statistics.
struct PreprocessModel {
    std::vector<std::pair<std::string, DropReason>> dropped;
    std::vector<std::string> kept;  // original column order
    std::map<std::string, ColumnStats> stats;
    CodeRanges code_ranges;
    double missing_drop_threshold = 0.5;

    std::string to_json() const;
    static PreprocessModel from_json(const std::string& text);
    void save(const std::string& path) const;
    static PreprocessModel load(const std::string& path);
};

// Masks every feature cell holding a sentinel code. Label and id columns are
// untouched; non-integer values are never flagged.
Frame flag_missing_codes(const Frame& frame, const CodeRanges& ranges);

// Normative chain: flag codes -> drop degenerate and high-missing columns ->
// median over non-missing -> mean/std over the imputed column -> min/max
// over the imputed, outlier-clamped column.
PreprocessModel fit_preprocessor(const Frame& train,
                                 const CodeRanges& ranges = CodeRanges::defaults(),
                                 double missing_drop_threshold = 0.5);

// Per kept column: flag codes, impute with the training median, replace
// values beyond 3 training standard deviations with the training median,
// min-max scale with the training range, clip to [0,1]. Output holds only
// the kept feature columns and no missing cells.
Frame apply_preprocessor(const PreprocessModel& model, const Frame& frame);

}  // namespace credo
