#include "credo/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "credo/errors.hpp"
#include "credo/rng.hpp"

namespace credo {

namespace {

using nlohmann::json;

constexpr double kHighMissingRate = 0.6;
constexpr double kConstantValue = 0.5;  // non-integer, never collides with code ranges
constexpr double kBlockBaseNoise = 0.05;

std::string column_name(std::size_t index, std::size_t n_features) {
    std::size_t width = std::to_string(n_features).size();
    std::string digits = std::to_string(index + 1);
    return "f" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

// Per-class mean shifts. Even signal features separate booked customers
// (classes 0 and 1) from never-opened (class 2); odd ones separate good from
// delinquent. Magnitudes leave class overlap so trained models land strictly
// between the majority baseline and perfection.
std::array<double, 3> signal_shift(std::size_t signal_index) {
    const double wiggle = 1.0 + 0.03 * static_cast<double>(signal_index);
    if (signal_index % 2 == 0) {
        const double a = 0.9 * wiggle;
        return {a, a, 0.0};
    }
    const double b = 0.45 * wiggle;
    return {b, -b, 0.0};
}

}  // namespace

void GeneratorSpec::validate() const {
    if (n_rows < 10) throw ConfigError("generator requires n_rows >= 10");
    if (n_features == 0) throw ConfigError("generator requires at least one feature");
    double total = class_proportions[0] + class_proportions[1] + class_proportions[2];
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("class proportions must sum to 1");
    for (double p : class_proportions) {
        if (p < 0.0) throw ConfigError("class proportions must be non-negative");
    }
    if (!(missing_code_rate >= 0.0 && missing_code_rate < 1.0)) {
        throw ConfigError("missing_code_rate must lie in [0, 1)");
    }
    const std::size_t reserved = signal_features + n_correlated_blocks * block_size +
                                 n_constant_columns + n_high_missing_columns;
    if (reserved > n_features) {
        throw ConfigError("generator layout needs " + std::to_string(reserved) +
                          " columns but n_features is " + std::to_string(n_features));
    }
    if (label_column.empty()) throw ConfigError("label_column must be non-empty");
}

std::pair<Frame, GroundTruth> generate(const GeneratorSpec& spec) {
    spec.validate();

    GroundTruth truth;
    truth.labels.scheme = LabelScheme::tri;
    {
        Rng rng(stage_seed(spec.seed, "labels"));
        truth.labels.classes.reserve(spec.n_rows);
        for (std::size_t r = 0; r < spec.n_rows; ++r) {
            truth.labels.classes.push_back(rng.categorical(spec.class_proportions));
        }
    }

    // Column layout: [signal | correlated blocks | constant | high-missing | noise].
    const std::size_t block_begin = spec.signal_features;
    const std::size_t const_begin = block_begin + spec.n_correlated_blocks * spec.block_size;
    const std::size_t highmiss_begin = const_begin + spec.n_constant_columns;
    const std::size_t noise_begin = highmiss_begin + spec.n_high_missing_columns;

    std::vector<std::vector<double>> latents(spec.n_correlated_blocks);
    for (std::size_t b = 0; b < spec.n_correlated_blocks; ++b) {
        Rng rng(stage_seed(spec.seed, "block:" + std::to_string(b)));
        latents[b].resize(spec.n_rows);
        for (double& v : latents[b]) v = rng.normal();
    }

    std::vector<Column> columns;
    columns.reserve(spec.n_features + 1);
    for (std::size_t j = 0; j < spec.n_features; ++j) {
        Column col;
        col.meta.name = column_name(j, spec.n_features);
        col.meta.role = ColumnRole::feature;
        col.values.resize(spec.n_rows);
        col.missing.assign(spec.n_rows, 0);

        Rng rng(stage_seed(spec.seed, "column:" + std::to_string(j)));
        if (j < block_begin) {
            const auto shift = signal_shift(j);
            for (std::size_t r = 0; r < spec.n_rows; ++r) {
                col.values[r] = rng.normal() + shift[static_cast<std::size_t>(truth.labels.classes[r])];
            }
            truth.signal_columns.push_back(col.meta.name);
        } else if (j < const_begin) {
            const std::size_t b = (j - block_begin) / spec.block_size;
            const std::size_t member = (j - block_begin) % spec.block_size;
            // Member 0 carries the least noise, so it wins the in-cluster
            // representative contest deterministically.
            const double eps = kBlockBaseNoise * static_cast<double>(member + 1);
            for (std::size_t r = 0; r < spec.n_rows; ++r) {
                col.values[r] = latents[b][r] + eps * rng.normal();
            }
            truth.block_assignments[col.meta.name] = static_cast<int>(b);
        } else if (j < highmiss_begin) {
            std::fill(col.values.begin(), col.values.end(), kConstantValue);
            truth.constant_columns.push_back(col.meta.name);
        } else {
            for (std::size_t r = 0; r < spec.n_rows; ++r) col.values[r] = rng.normal();
            if (j < noise_begin) truth.high_missing_columns.push_back(col.meta.name);
        }
        columns.push_back(std::move(col));
    }

    // Code injection. High-missing columns receive an exact count of codes
    // (> 50% for any n_rows >= 10); the rest draw per-cell Bernoulli at the
    // configured rate. Constant columns stay clean.
    for (std::size_t j = 0; j < spec.n_features; ++j) {
        if (j >= const_begin && j < highmiss_begin) continue;
        Column& col = columns[j];
        Rng rng(stage_seed(spec.seed, "codes:" + std::to_string(j)));
        std::vector<std::size_t> rows;
        if (j >= highmiss_begin && j < noise_begin) {
            std::vector<std::size_t> all(spec.n_rows);
            std::iota(all.begin(), all.end(), std::size_t{0});
            rng.shuffle(all);
            const auto count = static_cast<std::size_t>(
                std::llround(kHighMissingRate * static_cast<double>(spec.n_rows)));
            rows.assign(all.begin(), all.begin() + count);
            std::sort(rows.begin(), rows.end());
            for (std::size_t r : rows) {
                col.values[r] = kMissingCodes[static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(kMissingCodes.size()) - 1))];
            }
        } else if (spec.missing_code_rate > 0.0) {
            for (std::size_t r = 0; r < spec.n_rows; ++r) {
                if (rng.uniform01() < spec.missing_code_rate) {
                    col.values[r] = kMissingCodes[static_cast<std::size_t>(
                        rng.uniform_int(0, static_cast<std::int64_t>(kMissingCodes.size()) - 1))];
                    rows.push_back(r);
                }
            }
        }
        if (!rows.empty()) truth.code_cells[col.meta.name] = std::move(rows);
    }

    Column label;
    label.meta.name = spec.label_column;
    label.meta.role = ColumnRole::label;
    label.values.resize(spec.n_rows, 0.0);
    label.missing.assign(spec.n_rows, 0);
    for (std::size_t r = 0; r < spec.n_rows; ++r) {
        const int cls = truth.labels.classes[r];
        if (cls == 2) {
            label.missing[r] = 1;  // never opened: goodbad is absent
        } else {
            label.values[r] = static_cast<double>(cls);
        }
    }
    columns.push_back(std::move(label));

    return {Frame::from_columns(std::move(columns)), std::move(truth)};
}

std::string ground_truth_to_json(const GroundTruth& truth) {
    json j;
    j["labels"] = truth.labels.classes;
    j["signal_columns"] = truth.signal_columns;
    j["block_assignments"] = truth.block_assignments;
    j["code_cells"] = truth.code_cells;
    j["constant_columns"] = truth.constant_columns;
    j["high_missing_columns"] = truth.high_missing_columns;
    return j.dump(2);
}

std::string generator_spec_to_json(const GeneratorSpec& spec) {
    json j;
    j["n_rows"] = spec.n_rows;
    j["n_features"] = spec.n_features;
    j["class_proportions"] = spec.class_proportions;
    j["n_correlated_blocks"] = spec.n_correlated_blocks;
    j["block_size"] = spec.block_size;
    j["missing_code_rate"] = spec.missing_code_rate;
    j["n_constant_columns"] = spec.n_constant_columns;
    j["n_high_missing_columns"] = spec.n_high_missing_columns;
    j["signal_features"] = spec.signal_features;
    j["seed"] = spec.seed;
    j["label_column"] = spec.label_column;
    return j.dump(2);
}

GeneratorSpec generator_spec_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("generator spec is not valid JSON: ") + e.what());
    }
    GeneratorSpec spec;
    try {
        if (j.contains("n_rows")) spec.n_rows = j.at("n_rows").get<std::size_t>();
        if (j.contains("n_features")) spec.n_features = j.at("n_features").get<std::size_t>();
        if (j.contains("class_proportions")) {
            auto v = j.at("class_proportions").get<std::vector<double>>();
            if (v.size() != 3) throw ConfigError("class_proportions must have three entries");
            std::copy(v.begin(), v.end(), spec.class_proportions.begin());
        }
        if (j.contains("n_correlated_blocks")) spec.n_correlated_blocks = j.at("n_correlated_blocks").get<std::size_t>();
        if (j.contains("block_size")) spec.block_size = j.at("block_size").get<std::size_t>();
        if (j.contains("missing_code_rate")) spec.missing_code_rate = j.at("missing_code_rate").get<double>();
        if (j.contains("n_constant_columns")) spec.n_constant_columns = j.at("n_constant_columns").get<std::size_t>();
        if (j.contains("n_high_missing_columns")) spec.n_high_missing_columns = j.at("n_high_missing_columns").get<std::size_t>();
        if (j.contains("signal_features")) spec.signal_features = j.at("signal_features").get<std::size_t>();
        if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("label_column")) spec.label_column = j.at("label_column").get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad generator spec field: ") + e.what());
    }
    spec.validate();
    return spec;
}

}  // namespace credo
