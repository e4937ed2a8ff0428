#include "credo/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "credo/errors.hpp"

namespace credo {

namespace {

using nlohmann::json;

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

const char* drop_reason_name(DropReason r) {
    return r == DropReason::single_unique ? "single_unique" : "high_missing";
}

DropReason drop_reason_from(const std::string& s) {
    if (s == "single_unique") return DropReason::single_unique;
    if (s == "high_missing") return DropReason::high_missing;
    throw ConfigError("unknown drop reason '" + s + "'");
}

}  // namespace

bool CodeRanges::contains(double v) const {
    if (!std::isfinite(v) || v != std::floor(v)) return false;
    if (v < -9.2e18 || v > 9.2e18) return false;
    const auto iv = static_cast<long long>(v);
    for (const CodeRange& r : ranges) {
        if (iv >= r.lo && iv <= r.hi) return true;
    }
    return false;
}

void CodeRanges::validate() const {
    for (const CodeRange& r : ranges) {
        if (r.lo > r.hi) {
            throw ConfigError("code range [" + std::to_string(r.lo) + ", " +
                              std::to_string(r.hi) + "] is not well-formed");
        }
    }
}

Frame flag_missing_codes(const Frame& frame, const CodeRanges& ranges) {
    ranges.validate();
    std::vector<Column> columns(frame.columns());
    for (Column& c : columns) {
        if (c.meta.role != ColumnRole::feature) continue;
        for (std::size_t r = 0; r < c.values.size(); ++r) {
            if (!c.missing[r] && ranges.contains(c.values[r])) c.missing[r] = 1;
        }
    }
    return Frame::from_columns(std::move(columns));
}

PreprocessModel fit_preprocessor(const Frame& train, const CodeRanges& ranges,
                                 double missing_drop_threshold) {
    if (train.n_rows() == 0) throw StatsError("cannot fit a preprocessor on an empty frame");
    if (!(missing_drop_threshold > 0.0 && missing_drop_threshold <= 1.0)) {
        throw ConfigError("missing_drop_threshold must lie in (0, 1]");
    }

    const Frame flagged = flag_missing_codes(train, ranges);

    PreprocessModel model;
    model.code_ranges = ranges;
    model.missing_drop_threshold = missing_drop_threshold;

    const double n = static_cast<double>(flagged.n_rows());
    for (std::size_t i : flagged.feature_indices()) {
        const Column& c = flagged.col(i);
        std::vector<double> observed;
        observed.reserve(c.values.size());
        for (std::size_t r = 0; r < c.values.size(); ++r) {
            if (!c.missing[r]) observed.push_back(c.values[r]);
        }

        const double missing_fraction = (n - static_cast<double>(observed.size())) / n;
        if (missing_fraction > missing_drop_threshold) {
            model.dropped.emplace_back(c.meta.name, DropReason::high_missing);
            continue;
        }
        std::vector<double> uniq = observed;
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        if (uniq.size() <= 1) {
            model.dropped.emplace_back(c.meta.name, DropReason::single_unique);
            continue;
        }

        ColumnStats st;
        st.median = median_of(observed);

        // Mean and std come from the imputed column: every missing cell
        // contributes the median.
        const std::size_t n_missing = flagged.n_rows() - observed.size();
        double sum = st.median * static_cast<double>(n_missing);
        for (double v : observed) sum += v;
        st.mean = sum / n;
        double ss = 0.0;
        ss += static_cast<double>(n_missing) * (st.median - st.mean) * (st.median - st.mean);
        for (double v : observed) ss += (v - st.mean) * (v - st.mean);
        st.std_dev = std::sqrt(ss / n);

        // Range comes from the imputed, outlier-clamped column.
        const double cutoff = 3.0 * st.std_dev;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        auto account = [&](double v) {
            if (std::abs(v - st.mean) > cutoff) v = st.median;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        };
        if (n_missing > 0) account(st.median);
        for (double v : observed) account(v);
        st.min = lo;
        st.max = hi;
        st.degenerate_range = !(hi > lo);

        model.kept.push_back(c.meta.name);
        model.stats.emplace(c.meta.name, st);
    }

    if (model.kept.empty()) throw PipelineError("no usable features: every column was dropped");
    return model;
}

Frame apply_preprocessor(const PreprocessModel& model, const Frame& frame) {
    const Frame flagged = flag_missing_codes(frame, model.code_ranges);

    std::vector<Column> out;
    out.reserve(model.kept.size());
    for (const std::string& name : model.kept) {
        if (!flagged.has_column(name)) {
            throw SchemaError("frame is missing expected column '" + name + "'");
        }
        const Column& src = flagged.col(flagged.index_of(name));
        const ColumnStats& st = model.stats.at(name);
        const double cutoff = 3.0 * st.std_dev;
        const double span = st.max - st.min;

        Column nc;
        nc.meta = src.meta;
        nc.meta.role = ColumnRole::feature;
        nc.values.resize(src.values.size());
        nc.missing.assign(src.values.size(), 0);
        for (std::size_t r = 0; r < src.values.size(); ++r) {
            double v = src.missing[r] ? st.median : src.values[r];
            if (std::abs(v - st.mean) > cutoff) v = st.median;
            if (st.degenerate_range) {
                v = 0.0;
            } else {
                v = (v - st.min) / span;
                v = std::clamp(v, 0.0, 1.0);
            }
            nc.values[r] = v;
        }
        out.push_back(std::move(nc));
    }
    return Frame::from_columns(std::move(out));
}

std::string PreprocessModel::to_json() const {
    json j;
    j["format"] = "credo.preprocess";
    j["version"] = 1;
    json dropped_json = json::array();
    for (const auto& [name, reason] : dropped) {
        dropped_json.push_back({{"column", name}, {"reason", drop_reason_name(reason)}});
    }
    j["dropped"] = dropped_json;
    j["kept"] = kept;
    json stats_json;
    for (const auto& [name, st] : stats) {
        stats_json[name] = {{"median", st.median}, {"mean", st.mean},
                            {"std", st.std_dev},  {"min", st.min},
                            {"max", st.max},      {"degenerate_range", st.degenerate_range}};
    }
    j["stats"] = stats_json;
    json ranges_json = json::array();
    for (const CodeRange& r : code_ranges.ranges) ranges_json.push_back({{"lo", r.lo}, {"hi", r.hi}});
    j["code_ranges"] = ranges_json;
    j["missing_drop_threshold"] = missing_drop_threshold;
    return j.dump(2);
}

PreprocessModel PreprocessModel::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("preprocess model is not valid JSON: ") + e.what());
    }
    if (j.value("format", "") != "credo.preprocess") {
        throw ConfigError("not a preprocess model document");
    }
    PreprocessModel m;
    for (const auto& d : j.at("dropped")) {
        m.dropped.emplace_back(d.at("column").get<std::string>(),
                               drop_reason_from(d.at("reason").get<std::string>()));
    }
    m.kept = j.at("kept").get<std::vector<std::string>>();
    for (auto it = j.at("stats").begin(); it != j.at("stats").end(); ++it) {
        ColumnStats st;
        st.median = it.value().at("median").get<double>();
        st.mean = it.value().at("mean").get<double>();
        st.std_dev = it.value().at("std").get<double>();
        st.min = it.value().at("min").get<double>();
        st.max = it.value().at("max").get<double>();
        st.degenerate_range = it.value().at("degenerate_range").get<bool>();
        m.stats.emplace(it.key(), st);
    }
    for (const auto& r : j.at("code_ranges")) {
        m.code_ranges.ranges.push_back({r.at("lo").get<long long>(), r.at("hi").get<long long>()});
    }
    m.missing_drop_threshold = j.at("missing_drop_threshold").get<double>();
    return m;
}

void PreprocessModel::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << to_json() << '\n';
}

PreprocessModel PreprocessModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

}  // namespace credo
