#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "credo/ensemble.hpp"
#include "credo/evaluate.hpp"
#include "credo/featsel.hpp"
#include "credo/frame.hpp"
#include "credo/preprocess.hpp"
#include "credo/resample.hpp"
#include "credo/synthgen.hpp"

namespace credo {

enum class ModelMode { response, risk, response_risk };

const char* model_mode_name(ModelMode mode);
ModelMode model_mode_from(const std::string& name);

struct SearchConfig {
    enum class Strategy { grid, random };

    static std::vector<int> default_depth_domain();       // 1..50
    static std::vector<int> default_estimators_domain();  // 10..400

    Strategy strategy = Strategy::random;
    std::vector<int> max_depth_domain = default_depth_domain();
    std::vector<int> n_estimators_domain = default_estimators_domain();
    std::size_t trials = 25;  // random strategy only

    void validate() const;
};

struct PipelineConfig {
    std::optional<std::string> input_csv;       // exactly one of input_csv/generator
    std::optional<GeneratorSpec> generator;
    std::string label_column = "goodbad";
    ModelMode mode = ModelMode::response;
    std::vector<EnsembleKind> classifiers = {EnsembleKind::random_forest,
                                             EnsembleKind::extra_trees,
                                             EnsembleKind::gradient_boosted};
    double train_fraction = 0.7;
    CodeRanges code_ranges = CodeRanges::defaults();
    double missing_drop_threshold = 0.5;
    ClusterCut cluster_cut = ClusterCut::by_height(0.7);
    double vif_threshold = 5.0;
    AdasynConfig adasyn;
    SearchConfig search;
    PayoffMatrix payoff = PayoffMatrix::risk_default();  // risk mode only
    std::string objective;                               // empty: default by mode
    std::string out_dir;                                 // empty: no artifacts written
    std::uint64_t master_seed = 1;
    double gbt_learning_rate = 0.1;
    double gbt_l2_leaf_reg = 1.0;
    unsigned n_threads = 0;  // 0 = hardware

    // recall for response, specificity for risk, accuracy for response-risk
    std::string objective_or_default() const;

    void validate() const;
    nlohmann::json to_json() const;
    static PipelineConfig from_json(const nlohmann::json& j);
    static PipelineConfig load(const std::string& path);
};

struct TrialRecord {
    int max_depth = 0;
    int n_estimators = 0;
    double objective = 0.0;
};

struct TuneResult {
    EnsembleParams best_params;
    double best_objective = 0.0;
    std::vector<TrialRecord> trace;
};

// Trains one candidate per (max_depth, n_estimators) draw on the training
// matrix and scores `objective` on the validation matrix; the argmax wins,
// ties break on smaller n_estimators then smaller max_depth. Trials run in
// parallel; each candidate draws from its own seed substream.
TuneResult tune(const Matrix& x_train, const std::vector<int>& y_train, const Matrix& x_valid,
                const std::vector<int>& y_valid, EnsembleKind kind, const std::string& objective,
                const SearchConfig& search, const PipelineConfig& config, std::uint64_t seed);

// Objective helpers shared by tune and the run report.
double objective_value(const std::string& objective, const std::vector<int>& y_true,
                       const std::vector<int>& y_pred, const Matrix& proba,
                       const std::vector<int>& classes);

struct RunReport {
    nlohmann::json document;  // deterministic content, sorted keys
    nlohmann::json timings;   // wall-clock only, excluded from the canonical form

    // Canonical serialization: sorted keys, fixed formatting, no timings;
    // byte-identical across runs with the same config and master seed.
    std::string canonical_json() const;
};

// Executes the normative stage order (ingest, labels, split, preprocess,
// featsel, resample, tune, train, evaluate) with every data-dependent stage
// fitted on the training partition only. Writes artifacts under
// config.out_dir when set. Stage failures raise PipelineError naming the
// stage after dumping partial provenance.
RunReport run_pipeline(const PipelineConfig& config);

}  // namespace credo
