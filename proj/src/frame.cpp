#include "credo/frame.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "credo/errors.hpp"
#include "credo/rng.hpp"

namespace credo {

Frame Frame::from_columns(std::vector<Column> columns) {
    Frame f;
    f.n_rows_ = columns.empty() ? 0 : columns.front().values.size();
    int label_count = 0;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        Column& c = columns[i];
        if (c.meta.name.empty()) throw SchemaError("column " + std::to_string(i) + " has an empty name");
        if (c.values.size() != f.n_rows_ || c.missing.size() != f.n_rows_) {
            throw SchemaError("column '" + c.meta.name + "' length does not match frame row count");
        }
        if (f.by_name_.count(c.meta.name)) throw SchemaError("duplicate column name '" + c.meta.name + "'");
        if (c.meta.role == ColumnRole::label && ++label_count > 1) {
            throw SchemaError("more than one label column");
        }
        f.by_name_.emplace(c.meta.name, i);
    }
    f.cols_ = std::move(columns);
    return f;
}

const Column& Frame::col(std::string_view name) const { return cols_[index_of(name)]; }

bool Frame::has_column(std::string_view name) const {
    return by_name_.count(std::string(name)) != 0;
}

std::size_t Frame::index_of(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    if (it == by_name_.end()) throw SchemaError("no column named '" + std::string(name) + "'");
    return it->second;
}

std::vector<std::size_t> Frame::feature_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < cols_.size(); ++i) {
        if (cols_[i].meta.role == ColumnRole::feature) out.push_back(i);
    }
    return out;
}

std::vector<std::string> Frame::feature_names() const {
    std::vector<std::string> out;
    for (const Column& c : cols_) {
        if (c.meta.role == ColumnRole::feature) out.push_back(c.meta.name);
    }
    return out;
}

std::optional<std::size_t> Frame::label_index() const {
    for (std::size_t i = 0; i < cols_.size(); ++i) {
        if (cols_[i].meta.role == ColumnRole::label) return i;
    }
    return std::nullopt;
}

Frame Frame::select_rows(const std::vector<std::size_t>& rows) const {
    std::vector<Column> out;
    out.reserve(cols_.size());
    for (const Column& c : cols_) {
        Column nc;
        nc.meta = c.meta;
        nc.values.reserve(rows.size());
        nc.missing.reserve(rows.size());
        for (std::size_t r : rows) {
            nc.values.push_back(c.values[r]);
            nc.missing.push_back(c.missing[r]);
        }
        out.push_back(std::move(nc));
    }
    return Frame::from_columns(std::move(out));
}

Frame Frame::select_columns(const std::vector<std::string>& names) const {
    std::vector<Column> out;
    out.reserve(names.size());
    for (const std::string& n : names) out.push_back(cols_[index_of(n)]);
    return Frame::from_columns(std::move(out));
}

Matrix Frame::feature_matrix() const {
    const auto feats = feature_indices();
    Matrix m(n_rows_, feats.size());
    for (std::size_t j = 0; j < feats.size(); ++j) {
        const Column& c = cols_[feats[j]];
        for (std::size_t r = 0; r < n_rows_; ++r) {
            if (c.missing[r]) {
                throw SchemaError("feature column '" + c.meta.name +
                                  "' has a missing cell at row " + std::to_string(r + 1) +
                                  "; impute before building a matrix");
            }
            m.at(r, j) = c.values[r];
        }
    }
    return m;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

bool parse_number(const std::string& field, double& out) {
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && ptr == end && std::isfinite(out);
}

std::string format_number(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

Frame read_csv(const std::string& path, const IngestConfig& config) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw IngestError("'" + path + "' is empty (header row required)");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> header = split_fields(line);
    std::set<std::string> seen;
    std::vector<Column> columns(header.size());
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i].empty()) throw SchemaError("empty header field at column " + std::to_string(i + 1));
        if (!seen.insert(header[i]).second) throw SchemaError("duplicate header column '" + header[i] + "'");
        columns[i].meta.name = header[i];
    }
    if (!config.label_column.empty()) {
        bool found = false;
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == config.label_column) {
                columns[i].meta.role = ColumnRole::label;
                found = true;
            }
        }
        if (!found) throw SchemaError("label column '" + config.label_column + "' not present in '" + path + "'");
    }
    for (const std::string& id : config.id_columns) {
        bool found = false;
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == id) {
                if (columns[i].meta.role == ColumnRole::label) {
                    throw ConfigError("column '" + id + "' cannot be both label and id");
                }
                columns[i].meta.role = ColumnRole::id;
                found = true;
            }
        }
        if (!found) throw SchemaError("id column '" + id + "' not present in '" + path + "'");
    }

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++row;
        const std::vector<std::string> fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw IngestError("row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                              " fields, expected " + std::to_string(header.size()));
        }
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (fields[i] == config.missing_token) {
                columns[i].values.push_back(0.0);
                columns[i].missing.push_back(1);
                continue;
            }
            double v;
            if (!parse_number(fields[i], v)) {
                throw IngestError("row " + std::to_string(row) + ", column '" + header[i] +
                                  "': cannot parse '" + fields[i] + "' as a number");
            }
            columns[i].values.push_back(v);
            columns[i].missing.push_back(0);
        }
    }
    return Frame::from_columns(std::move(columns));
}

void write_csv(const Frame& frame, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (std::size_t i = 0; i < frame.n_cols(); ++i) {
        if (i) out << ',';
        out << frame.col(i).meta.name;
    }
    out << '\n';
    for (std::size_t r = 0; r < frame.n_rows(); ++r) {
        for (std::size_t i = 0; i < frame.n_cols(); ++i) {
            if (i) out << ',';
            const Column& c = frame.col(i);
            if (!c.missing[r]) out << format_number(c.values[r]);
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

LabelVector derive_labels(const Frame& frame, std::string_view label_column) {
    const Column& c = frame.col(label_column);
    LabelVector out;
    out.scheme = LabelScheme::tri;
    out.classes.reserve(frame.n_rows());
    for (std::size_t r = 0; r < frame.n_rows(); ++r) {
        if (c.missing[r]) {
            out.classes.push_back(2);
        } else if (c.values[r] == 0.0) {
            out.classes.push_back(0);
        } else if (c.values[r] == 1.0) {
            out.classes.push_back(1);
        } else {
            throw LabelError("label column '" + std::string(label_column) + "' row " +
                             std::to_string(r + 1) + ": value " + format_number(c.values[r]) +
                             " outside {0,1}");
        }
    }
    return out;
}

LabelVector remap_response(const LabelVector& labels) {
    if (labels.scheme != LabelScheme::tri) {
        throw SchemeError("remap_response requires a tri-scheme label vector");
    }
    LabelVector out;
    out.scheme = LabelScheme::response_binary;
    out.classes.reserve(labels.size());
    for (int c : labels.classes) out.classes.push_back(c == 2 ? 0 : 1);
    return out;
}

std::pair<Frame, LabelVector> subset_risk(const Frame& frame, const LabelVector& labels) {
    if (labels.scheme != LabelScheme::tri) {
        throw SchemeError("subset_risk requires a tri-scheme label vector");
    }
    if (labels.size() != frame.n_rows()) {
        throw InputError("label vector length does not match frame row count");
    }
    std::vector<std::size_t> keep;
    LabelVector out;
    out.scheme = LabelScheme::risk_binary;
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels.classes[r] == 0 || labels.classes[r] == 1) {
            keep.push_back(r);
            out.classes.push_back(labels.classes[r]);
        }
    }
    return {frame.select_rows(keep), std::move(out)};
}

SplitResult stratified_split(const Frame& frame, const LabelVector& labels,
                             double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train_fraction must lie in (0, 1)");
    }
    if (labels.size() != frame.n_rows()) {
        throw InputError("label vector length does not match frame row count");
    }
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t r = 0; r < labels.size(); ++r) by_class[labels.classes[r]].push_back(r);

    SplitResult result;
    result.seed = seed;
    for (auto& [cls, rows] : by_class) {
        Rng rng(substream(seed, static_cast<std::uint64_t>(cls)));
        rng.shuffle(rows);
        // floor with a 1e-9 guard: 0.7 * 10 must yield 7 train rows even
        // though 0.7 has no exact binary representation.
        const auto n_train = static_cast<std::size_t>(
            std::floor(train_fraction * static_cast<double>(rows.size()) + 1e-9));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            (i < n_train ? result.train_indices : result.valid_indices).push_back(rows[i]);
        }
    }
    return result;
}

}  // namespace credo
