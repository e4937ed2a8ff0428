#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "credo/frame.hpp"

namespace credo {

// Structural stand-in for the proprietary campaign dataset: three-way class
// imbalance, coded missing values from both sentinel ranges, correlated
// feature blocks, degenerate columns, and a handful of label-informative
// features with class overlap.
struct GeneratorSpec {
    std::size_t n_rows = 5000;
    std::size_t n_features = 60;
    std::array<double, 3> class_proportions{0.156, 0.092, 0.752};
    std::size_t n_correlated_blocks = 4;
    std::size_t block_size = 5;
    double missing_code_rate = 0.02;
    std::size_t n_constant_columns = 1;
    std::size_t n_high_missing_columns = 2;
    std::size_t signal_features = 8;
    std::uint64_t seed = 1;
    std::string label_column = "goodbad";

    void validate() const;  // ConfigError on infeasible layouts
};

struct GroundTruth {
    LabelVector labels;                                       // tri scheme
    std::vector<std::string> signal_columns;
    std::map<std::string, int> block_assignments;             // member -> block id
    std::map<std::string, std::vector<std::size_t>> code_cells;  // column -> rows holding codes
    std::vector<std::string> constant_columns;
    std::vector<std::string> high_missing_columns;
};

// Sentinel values injected as "missing digit" codes; drawn from both default
// flagging ranges [2,9] and [92,99999].
inline constexpr std::array<double, 7> kMissingCodes{3, 5, 7, 93, 97, 995, 99998};

// Fully deterministic per spec.seed; column contents come from per-column
// substreams so the layout of one column never shifts another's draw.
std::pair<Frame, GroundTruth> generate(const GeneratorSpec& spec);

std::string ground_truth_to_json(const GroundTruth& truth);
std::string generator_spec_to_json(const GeneratorSpec& spec);
GeneratorSpec generator_spec_from_json(const std::string& text);

}  // namespace credo
