#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "credo/matrix.hpp"

namespace credo {

enum class ColumnRole { feature, label, id };

struct ColumnMeta {
    std::string name;
    ColumnRole role = ColumnRole::feature;
};

struct Column {
    ColumnMeta meta;
    std::vector<double> values;
    std::vector<std::uint8_t> missing;  // 1 = missing; the stored value is then meaningless
};

// Column-major numeric table with per-cell missingness. Immutable once
// built; every operation below returns a new Frame.
class Frame {
public:
    Frame() = default;

    // Validates column lengths, unique non-empty names, at most one label column.
    static Frame from_columns(std::vector<Column> columns);

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_cols() const { return cols_.size(); }

    const std::vector<Column>& columns() const { return cols_; }
    const Column& col(std::size_t i) const { return cols_[i]; }
    const Column& col(std::string_view name) const;

    bool has_column(std::string_view name) const;
    std::size_t index_of(std::string_view name) const;  // SchemaError if absent

    double value(std::size_t row, std::size_t col_idx) const {
        return cols_[col_idx].values[row];
    }
    bool is_missing(std::size_t row, std::size_t col_idx) const {
        return cols_[col_idx].missing[row] != 0;
    }

    std::vector<std::size_t> feature_indices() const;
    std::vector<std::string> feature_names() const;
    std::optional<std::size_t> label_index() const;

    Frame select_rows(const std::vector<std::size_t>& rows) const;
    Frame select_columns(const std::vector<std::string>& names) const;

    // Dense matrix over the feature columns (missing cells forbidden).
    Matrix feature_matrix() const;

    bool operator==(const Frame&) const = default;

private:
    std::vector<Column> cols_;
    std::size_t n_rows_ = 0;
    std::unordered_map<std::string, std::size_t> by_name_;
};

struct IngestConfig {
    std::string label_column;        // empty: no label column expected
    std::string missing_token;      // field text treated as a missing cell
    std::vector<std::string> id_columns;
};

// RFC-4180 subset: comma delimiter, mandatory header, numeric fields only,
// `\n` or `\r\n` line ends. A field equal to the missing token (default:
// empty) sets the missingness mask.
Frame read_csv(const std::string& path, const IngestConfig& config = {});

// Inverse of read_csv: shortest round-trip formatting, missing cells written
// as the empty field. read_csv(write_csv(f)) reproduces f exactly.
void write_csv(const Frame& frame, const std::string& path);

enum class LabelScheme { tri, response_binary, risk_binary };

struct LabelVector {
    std::vector<int> classes;
    LabelScheme scheme = LabelScheme::tri;

    std::size_t size() const { return classes.size(); }
    bool operator==(const LabelVector&) const = default;
};

// Tri-class target: observed 0 -> 0 (opened, good), observed 1 -> 1
// (opened, delinquent), missing -> 2 (never opened).
LabelVector derive_labels(const Frame& frame, std::string_view label_column);

// Response view: classes {0,1} (booked) merge into 1 = responded, class 2
// becomes 0 = did not respond.
LabelVector remap_response(const LabelVector& labels);

// Risk view: keeps only booked rows (tri class 0 or 1), labeling
// 1 = delinquent, 0 = good. Row order is preserved.
std::pair<Frame, LabelVector> subset_risk(const Frame& frame, const LabelVector& labels);

struct SplitResult {
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> valid_indices;
    std::uint64_t seed = 0;
};

// Per-class shuffle with a class-keyed substream of `seed`; each class
// contributes floor(train_fraction * class_size) rows to train (computed
// with a 1e-9 guard so decimal fractions land on the intended integer) and
// the rest to validation. Index order within each part is the shuffled order.
SplitResult stratified_split(const Frame& frame, const LabelVector& labels,
                             double train_fraction, std::uint64_t seed);

}  // namespace credo
