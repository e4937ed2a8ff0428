#include "credo/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "credo/errors.hpp"
#include "credo/parallel.hpp"
#include "credo/rng.hpp"

namespace credo {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// FNV-1a over the raw bits of every feature cell plus its missing flag;
// the leakage guard compares this before and after the model stages.
std::string feature_hash(const Frame& frame) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto feed = [&h](const unsigned char* data, std::size_t len) {
        for (std::size_t i = 0; i < len; ++i) {
            h ^= data[i];
            h *= 0x100000001B3ULL;
        }
    };
    for (std::size_t c : frame.feature_indices()) {
        const Column& col = frame.col(c);
        feed(reinterpret_cast<const unsigned char*>(col.values.data()),
             col.values.size() * sizeof(double));
        feed(col.missing.data(), col.missing.size());
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << text;
    if (!out.bad() && text.size() > 0 && text.back() != '\n') out << '\n';
    if (!out) throw IoError("write failed for '" + path + "'");
}

json confusion_to_json(const ConfusionMatrix& cm) {
    json rows = json::array();
    for (std::size_t a = 0; a < cm.size(); ++a) {
        json row = json::array();
        for (std::size_t p = 0; p < cm.size(); ++p) row.push_back(cm.at(a, p));
        rows.push_back(std::move(row));
    }
    return {{"classes", cm.classes}, {"counts", std::move(rows)}};
}

json metrics_to_json(const MetricsReport& m) {
    json j;
    j["accuracy"] = m.accuracy;
    if (m.specificity) j["specificity"] = *m.specificity;
    j["macro_precision"] = m.macro_precision;
    j["macro_recall"] = m.macro_recall;
    j["weighted_precision"] = m.weighted_precision;
    j["weighted_recall"] = m.weighted_recall;
    json per = json::array();
    for (const ClassRates& r : m.per_class) {
        per.push_back({{"class", r.class_id},
                       {"precision", r.precision},
                       {"recall", r.recall},
                       {"support", r.support}});
    }
    j["per_class"] = std::move(per);
    return j;
}

std::vector<int> labels_at(const LabelVector& labels, const std::vector<std::size_t>& rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(labels.classes[r]);
    return out;
}

}  // namespace

const char* model_mode_name(ModelMode mode) {
    switch (mode) {
        case ModelMode::response: return "response";
        case ModelMode::risk: return "risk";
        case ModelMode::response_risk: return "response_risk";
    }
    return "unknown";
}

ModelMode model_mode_from(const std::string& name) {
    if (name == "response") return ModelMode::response;
    if (name == "risk") return ModelMode::risk;
    if (name == "response_risk") return ModelMode::response_risk;
    throw ConfigError("unknown model mode '" + name + "'");
}

std::vector<int> SearchConfig::default_depth_domain() {
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 1);
    return v;
}

std::vector<int> SearchConfig::default_estimators_domain() {
    std::vector<int> v(391);
    std::iota(v.begin(), v.end(), 10);
    return v;
}

void SearchConfig::validate() const {
    if (max_depth_domain.empty() || n_estimators_domain.empty()) {
        throw ConfigError("search domains must be non-empty");
    }
    if (strategy == Strategy::random && trials < 1) {
        throw ConfigError("random search needs at least 1 trial");
    }
    for (int d : max_depth_domain) {
        if (d < 1) throw ConfigError("max_depth domain values must be >= 1");
    }
    for (int e : n_estimators_domain) {
        if (e < 1) throw ConfigError("n_estimators domain values must be >= 1");
    }
}

std::string PipelineConfig::objective_or_default() const {
    if (!objective.empty()) return objective;
    switch (mode) {
        case ModelMode::response: return "recall";
        case ModelMode::risk: return "specificity";
        case ModelMode::response_risk: return "accuracy";
    }
    return "accuracy";
}

void PipelineConfig::validate() const {
    if (input_csv.has_value() == generator.has_value()) {
        throw ConfigError("config needs exactly one of input_csv or generator");
    }
    if (generator) generator->validate();
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train_fraction must lie in (0, 1)");
    }
    if (classifiers.empty()) throw ConfigError("classifier list is empty");
    code_ranges.validate();
    if (!(vif_threshold > 0.0)) throw ConfigError("vif_threshold must be positive");
    search.validate();
    if (label_column.empty()) throw ConfigError("label_column must be non-empty");
    if (!(gbt_learning_rate > 0.0)) throw ConfigError("gbt learning rate must be positive");
}

double objective_value(const std::string& objective, const std::vector<int>& y_true,
                       const std::vector<int>& y_pred, const Matrix& proba,
                       const std::vector<int>& classes) {
    const bool binary = classes.size() == 2;
    if (objective == "auc") {
        if (binary) {
            std::vector<int> y01(y_true.size());
            std::vector<double> scores(y_true.size());
            for (std::size_t i = 0; i < y_true.size(); ++i) {
                y01[i] = y_true[i] == classes[1] ? 1 : 0;
                scores[i] = proba.at(i, 1);
            }
            return roc_auc(y01, scores).auc;
        }
        return multiclass_auc(y_true, proba, classes);
    }
    const MetricsReport m = classification_metrics(confusion(y_true, y_pred, classes));
    if (objective == "accuracy") return m.accuracy;
    if (objective == "recall") return binary ? m.per_class[1].recall : m.macro_recall;
    if (objective == "precision") return binary ? m.per_class[1].precision : m.macro_precision;
    if (objective == "specificity") {
        if (!binary) throw ConfigError("specificity requires a binary model");
        return *m.specificity;
    }
    throw ConfigError("unknown objective '" + objective + "'");
}

TuneResult tune(const Matrix& x_train, const std::vector<int>& y_train, const Matrix& x_valid,
                const std::vector<int>& y_valid, EnsembleKind kind, const std::string& objective,
                const SearchConfig& search, const PipelineConfig& config, std::uint64_t seed) {
    search.validate();
    if (x_train.rows == 0 || x_valid.rows == 0) throw ConfigError("tune: empty data");

    std::vector<std::pair<int, int>> candidates;  // (max_depth, n_estimators)
    if (search.strategy == SearchConfig::Strategy::grid) {
        for (int d : search.max_depth_domain) {
            for (int e : search.n_estimators_domain) candidates.emplace_back(d, e);
        }
    } else {
        Rng rng(substream(seed, 0x7261'6E64ULL));  // candidate draws, one stream
        for (std::size_t t = 0; t < search.trials; ++t) {
            const int d = search.max_depth_domain[static_cast<std::size_t>(
                rng.uniform_below(search.max_depth_domain.size()))];
            const int e = search.n_estimators_domain[static_cast<std::size_t>(
                rng.uniform_below(search.n_estimators_domain.size()))];
            candidates.emplace_back(d, e);
        }
    }
    if (candidates.empty()) throw ConfigError("empty search space");

    TuneResult result;
    result.trace.resize(candidates.size());

    // Each trial is self-contained (own substream seed), so trials may run
    // in parallel while the trace stays deterministic.
    parallel_for(candidates.size(), config.n_threads, [&](std::size_t i) {
        EnsembleParams params;
        params.kind = kind;
        params.tree.max_depth = candidates[i].first;
        params.n_estimators = candidates[i].second;
        params.learning_rate = config.gbt_learning_rate;
        params.l2_leaf_reg = config.gbt_l2_leaf_reg;
        params.seed = substream(seed, i);
        const Ensemble model = fit_ensemble(x_train, y_train, params, 1);
        const Matrix proba = predict_proba(model, x_valid);
        const std::vector<int> y_pred = predict(model, x_valid);
        result.trace[i] = {candidates[i].first, candidates[i].second,
                           objective_value(objective, y_valid, y_pred, proba, model.classes)};
    });

    std::size_t best = 0;
    for (std::size_t i = 1; i < result.trace.size(); ++i) {
        const TrialRecord& a = result.trace[i];
        const TrialRecord& b = result.trace[best];
        const bool better = a.objective > b.objective ||
                            (a.objective == b.objective &&
                             (a.n_estimators < b.n_estimators ||
                              (a.n_estimators == b.n_estimators && a.max_depth < b.max_depth)));
        if (better) best = i;
    }
    result.best_params.kind = kind;
    result.best_params.tree.max_depth = result.trace[best].max_depth;
    result.best_params.n_estimators = result.trace[best].n_estimators;
    result.best_params.learning_rate = config.gbt_learning_rate;
    result.best_params.l2_leaf_reg = config.gbt_l2_leaf_reg;
    result.best_objective = result.trace[best].objective;
    return result;
}

std::string RunReport::canonical_json() const { return document.dump(2); }

RunReport run_pipeline(const PipelineConfig& config) {
    config.validate();

    const std::string objective = config.objective_or_default();
    if ((objective == "specificity" || config.mode == ModelMode::risk) &&
        config.mode == ModelMode::response_risk) {
        throw ConfigError("specificity objective requires a binary mode");
    }

    if (!config.out_dir.empty()) fs::create_directories(config.out_dir);
    auto artifact_path = [&](const std::string& name) {
        return (fs::path(config.out_dir) / name).string();
    };

    RunReport report;
    json& doc = report.document;
    doc["config"] = config.to_json();
    doc["mode"] = model_mode_name(config.mode);
    doc["objective"] = objective;
    json& provenance = doc["provenance"];
    provenance["stage_order"] = json::array();
    json& timings = report.timings;
    timings["stages"] = json::object();

    std::string current_stage;
    auto fail = [&](const std::string& what) -> PipelineError {
        if (!config.out_dir.empty()) {
            json partial;
            partial["failed_stage"] = current_stage;
            partial["error"] = what;
            partial["provenance"] = provenance;
            write_text(artifact_path("report_partial.json"), partial.dump(2));
        }
        return PipelineError("stage '" + current_stage + "': " + what);
    };
    auto stage = [&](const std::string& name, auto&& fn) {
        current_stage = name;
        provenance["stage_order"].push_back(name);
        const auto start = Clock::now();
        try {
            fn();
        } catch (const Error& e) {
            throw fail(e.what());
        } catch (const std::exception& e) {
            throw fail(e.what());
        }
        timings["stages"][name] = elapsed_ms(start);
    };

    const auto run_start = Clock::now();

    // ingest
    Frame raw;
    stage("ingest", [&] {
        if (config.input_csv) {
            raw = read_csv(*config.input_csv, {config.label_column, "", {}});
        } else {
            raw = generate(*config.generator).first;
        }
        provenance["ingest"] = {{"n_rows", raw.n_rows()},
                                {"n_columns", raw.n_cols()},
                                {"source", config.input_csv ? *config.input_csv : "generator"}};
    });

    // labels: tri-class target plus the mode-specific view
    Frame mode_frame;
    LabelVector mode_labels;
    stage("labels", [&] {
        const LabelVector tri = derive_labels(raw, config.label_column);
        switch (config.mode) {
            case ModelMode::response:
                mode_frame = raw;
                mode_labels = remap_response(tri);
                break;
            case ModelMode::risk: {
                auto [booked, risk] = subset_risk(raw, tri);
                mode_frame = std::move(booked);
                mode_labels = std::move(risk);
                break;
            }
            case ModelMode::response_risk:
                mode_frame = raw;
                mode_labels = tri;
                break;
        }
        json counts = json::object();
        for (int c : mode_labels.classes) {
            counts[std::to_string(c)] = counts.value(std::to_string(c), 0) + 1;
        }
        provenance["labels"] = {{"rows", mode_labels.size()}, {"class_counts", counts}};
    });

    // split
    SplitResult split;
    Frame train_frame, valid_frame;
    std::vector<int> y_train_all, y_valid;
    std::string valid_hash_after_split;
    stage("split", [&] {
        const std::uint64_t seed = stage_seed(config.master_seed, "split");
        split = stratified_split(mode_frame, mode_labels, config.train_fraction, seed);
        train_frame = mode_frame.select_rows(split.train_indices);
        valid_frame = mode_frame.select_rows(split.valid_indices);
        y_train_all = labels_at(mode_labels, split.train_indices);
        y_valid = labels_at(mode_labels, split.valid_indices);
        valid_hash_after_split = feature_hash(valid_frame);
        provenance["split"] = {{"seed", seed},
                               {"train_rows", split.train_indices.size()},
                               {"valid_rows", split.valid_indices.size()}};
    });

    // preprocess
    PreprocessModel prep;
    Frame train_pp, valid_pp;
    stage("preprocess", [&] {
        prep = fit_preprocessor(train_frame, config.code_ranges, config.missing_drop_threshold);
        train_pp = apply_preprocessor(prep, train_frame);
        valid_pp = apply_preprocessor(prep, valid_frame);
        json dropped = json::array();
        for (const auto& [name, reason] : prep.dropped) {
            dropped.push_back({{"column", name},
                               {"reason", reason == DropReason::single_unique ? "single_unique"
                                                                              : "high_missing"}});
        }
        provenance["preprocess"] = {{"dropped", dropped}, {"kept", prep.kept.size()}};
        if (!config.out_dir.empty()) prep.save(artifact_path("preprocess_model.json"));
    });

    // featsel
    std::vector<std::string> final_columns;
    stage("featsel", [&] {
        const CorrMatrix corr = correlation_matrix(train_pp);
        const FeatureClustering clustering = cluster_features(corr, config.cluster_cut);
        const std::vector<std::string> reps = pick_representatives(train_pp, clustering);
        const Frame train_reps = train_pp.select_columns(reps);
        const VifTrace trace = vif_prune(train_reps, config.vif_threshold);
        for (const auto& [name, value] : trace.kept) final_columns.push_back(name);

        json removed = json::array();
        for (const VifRemoval& r : trace.removals) {
            removed.push_back({{"column", r.column}, {"vif", r.vif_at_removal}});
        }
        provenance["featsel"] = {{"n_clusters", clustering.n_clusters},
                                 {"representatives", reps},
                                 {"vif_removed", removed},
                                 {"final_columns", final_columns}};
        if (!config.out_dir.empty()) {
            write_text(artifact_path("dendrogram.json"), clustering.dendrogram_json());
            write_text(artifact_path("vif_trace.csv"), trace.to_csv());
        }
    });

    // resample (training partition only)
    Matrix x_train;
    std::vector<int> y_train;
    Matrix x_valid;
    stage("resample", [&] {
        const Matrix x_train_sel = train_pp.select_columns(final_columns).feature_matrix();
        x_valid = valid_pp.select_columns(final_columns).feature_matrix();

        AdasynConfig adasyn_config = config.adasyn;
        adasyn_config.seed = stage_seed(config.master_seed, "resample");
        json reports = json::array();
        if (config.mode == ModelMode::response_risk) {
            MulticlassAdasynResult res = adasyn_multiclass(x_train_sel, y_train_all, adasyn_config);
            x_train = std::move(res.x);
            y_train = std::move(res.y);
            for (const AdasynReport& r : res.reports) {
                reports.push_back({{"minority_class", r.minority_class},
                                   {"g_requested", r.g_requested},
                                   {"generated", r.generated}});
            }
            if (!config.out_dir.empty()) {
                json full = json::array();
                for (const AdasynReport& r : res.reports) full.push_back(json::parse(r.to_json()));
                write_text(artifact_path("adasyn_report.json"), full.dump(2));
            }
        } else {
            AdasynResult res = adasyn(x_train_sel, y_train_all, adasyn_config);
            x_train = std::move(res.x);
            y_train = std::move(res.y);
            reports.push_back({{"minority_class", res.report.minority_class},
                               {"g_requested", res.report.g_requested},
                               {"generated", res.report.generated}});
            if (!config.out_dir.empty()) {
                write_text(artifact_path("adasyn_report.json"), res.report.to_json());
            }
        }
        provenance["resample"] = {{"seed", adasyn_config.seed},
                                  {"train_rows_before", x_train_sel.rows},
                                  {"train_rows_after", x_train.rows},
                                  {"reports", reports}};
    });

    // tune + train + evaluate per classifier
    doc["classifiers"] = json::array();
    std::vector<int> classes;
    {
        std::set<int> s(y_train.begin(), y_train.end());
        classes.assign(s.begin(), s.end());
    }
    std::string best_kind;
    double best_value = -1.0;
    for (EnsembleKind kind : config.classifiers) {
        const std::string kind_name = ensemble_kind_name(kind);
        json entry;
        entry["kind"] = kind_name;

        TuneResult tuned;
        stage("tune:" + kind_name, [&] {
            const std::uint64_t seed = stage_seed(config.master_seed, "tune:" + kind_name);
            tuned = tune(x_train, y_train, x_valid, y_valid, kind, objective, config.search,
                         config, seed);
            json trials = json::array();
            for (const TrialRecord& t : tuned.trace) {
                trials.push_back({{"max_depth", t.max_depth},
                                  {"n_estimators", t.n_estimators},
                                  {"objective", t.objective}});
            }
            entry["search"] = {{"seed", seed},
                               {"trials", trials},
                               {"best_objective", tuned.best_objective}};
            entry["tuned_params"] = {{"max_depth", tuned.best_params.tree.max_depth},
                                     {"n_estimators", tuned.best_params.n_estimators}};
        });

        Ensemble model;
        stage("train:" + kind_name, [&] {
            EnsembleParams params = tuned.best_params;
            params.seed = stage_seed(config.master_seed, "final:" + kind_name);
            model = fit_ensemble(x_train, y_train, params, config.n_threads);
            model.feature_names = final_columns;
            entry["final_seed"] = params.seed;
            if (!config.out_dir.empty()) model.save(artifact_path("model_" + kind_name + ".json"));
        });

        stage("evaluate:" + kind_name, [&] {
            const Matrix train_proba = predict_proba(model, x_train);
            const std::vector<int> train_pred = predict(model, x_train);
            const ConfusionMatrix train_cm = confusion(y_train, train_pred, classes);
            json train_json;
            train_json["confusion"] = confusion_to_json(train_cm);
            train_json["metrics"] = metrics_to_json(classification_metrics(train_cm));
            train_json["auc"] = objective_value("auc", y_train, train_pred, train_proba, classes);
            entry["train"] = std::move(train_json);

            const Matrix valid_proba = predict_proba(model, x_valid);
            const std::vector<int> valid_pred = predict(model, x_valid);
            const ConfusionMatrix valid_cm = confusion(y_valid, valid_pred, classes);
            json valid_json;
            valid_json["confusion"] = confusion_to_json(valid_cm);
            valid_json["metrics"] = metrics_to_json(classification_metrics(valid_cm));
            valid_json["auc"] = objective_value("auc", y_valid, valid_pred, valid_proba, classes);
            valid_json["objective"] = objective;
            valid_json["objective_value"] =
                objective_value(objective, y_valid, valid_pred, valid_proba, classes);
            if (config.mode == ModelMode::risk) {
                const std::int64_t cents = profit_cents(valid_cm, config.payoff);
                valid_json["profit_cents"] = cents;
                valid_json["profit"] = format_dollars(cents);
            }

            json importances = json::object();
            for (std::size_t f = 0; f < final_columns.size(); ++f) {
                importances[final_columns[f]] = model.importances[f];
            }
            entry["importances"] = std::move(importances);

            if (!config.out_dir.empty()) {
                if (classes.size() == 2) {
                    std::vector<int> y01(y_valid.size());
                    std::vector<double> scores(y_valid.size());
                    for (std::size_t i = 0; i < y_valid.size(); ++i) {
                        y01[i] = y_valid[i] == classes[1] ? 1 : 0;
                        scores[i] = valid_proba.at(i, 1);
                    }
                    write_text(artifact_path("roc_" + kind_name + ".csv"),
                               roc_auc(y01, scores).to_csv());
                } else {
                    for (std::size_t c = 0; c < classes.size(); ++c) {
                        std::vector<int> y01(y_valid.size());
                        std::vector<double> scores(y_valid.size());
                        for (std::size_t i = 0; i < y_valid.size(); ++i) {
                            y01[i] = y_valid[i] == classes[c] ? 1 : 0;
                            scores[i] = valid_proba.at(i, c);
                        }
                        write_text(artifact_path("roc_" + kind_name + "_class" +
                                                 std::to_string(classes[c]) + ".csv"),
                                   roc_auc(y01, scores).to_csv());
                    }
                }
            }

            const double value = valid_json["objective_value"].get<double>();
            if (value > best_value) {
                best_value = value;
                best_kind = kind_name;
            }
            entry["valid"] = std::move(valid_json);
        });

        doc["classifiers"].push_back(std::move(entry));
    }

    // leakage guard: the validation features must be untouched, and the
    // validation partition must never have been resampled
    current_stage = "report";
    const std::string valid_hash_at_eval = feature_hash(valid_frame);
    provenance["leakage"] = {{"valid_hash_after_split", valid_hash_after_split},
                             {"valid_hash_at_eval", valid_hash_at_eval},
                             {"hash_unchanged", valid_hash_after_split == valid_hash_at_eval},
                             {"valid_rows_unchanged", x_valid.rows == split.valid_indices.size()}};
    if (valid_hash_after_split != valid_hash_at_eval) {
        throw fail("validation features changed between split and evaluation");
    }

    doc["selection"] = {{"kind", best_kind}, {"objective", objective}, {"value", best_value}};

    timings["total_ms"] = elapsed_ms(run_start);
    if (!config.out_dir.empty()) {
        write_text(artifact_path("report.json"), report.canonical_json());
        write_text(artifact_path("timings.json"), timings.dump(2));
    }
    return report;
}

json PipelineConfig::to_json() const {
    json j;
    if (input_csv) j["input_csv"] = *input_csv;
    if (generator) j["generator"] = json::parse(generator_spec_to_json(*generator));
    j["label_column"] = label_column;
    j["mode"] = model_mode_name(mode);
    json kinds = json::array();
    for (EnsembleKind k : classifiers) kinds.push_back(ensemble_kind_name(k));
    j["classifiers"] = std::move(kinds);
    j["train_fraction"] = train_fraction;
    json ranges = json::array();
    for (const CodeRange& r : code_ranges.ranges) ranges.push_back({r.lo, r.hi});
    j["code_ranges"] = std::move(ranges);
    j["missing_drop_threshold"] = missing_drop_threshold;
    if (cluster_cut.kind == ClusterCut::Kind::height) {
        j["cluster_cut"] = {{"height", cluster_cut.height}};
    } else {
        j["cluster_cut"] = {{"count", cluster_cut.count}};
    }
    j["vif_threshold"] = vif_threshold;
    j["adasyn"] = {{"k_neighbors", adasyn.k_neighbors}, {"beta", adasyn.beta}};
    // Contiguous domains echo as [lo, hi]; explicit lists echo in full.
    auto domain_json = [](const std::vector<int>& d) {
        if (!d.empty() && d.back() - d.front() + 1 == static_cast<int>(d.size())) {
            return json::array({d.front(), d.back()});
        }
        return json(d);
    };
    j["search"] = {{"strategy", search.strategy == SearchConfig::Strategy::grid ? "grid" : "random"},
                   {"trials", search.trials},
                   {"max_depth_domain", domain_json(search.max_depth_domain)},
                   {"n_estimators_domain", domain_json(search.n_estimators_domain)}};
    j["payoff"] = json::parse(payoff.to_json());
    j["objective"] = objective;
    j["seed"] = master_seed;
    j["gbt"] = {{"learning_rate", gbt_learning_rate}, {"l2_leaf_reg", gbt_l2_leaf_reg}};
    return j;
}

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig c;
    try {
        if (j.contains("input_csv")) c.input_csv = j.at("input_csv").get<std::string>();
        if (j.contains("generator")) {
            c.generator = generator_spec_from_json(j.at("generator").dump());
        }
        if (j.contains("label_column")) c.label_column = j.at("label_column").get<std::string>();
        if (j.contains("mode")) c.mode = model_mode_from(j.at("mode").get<std::string>());
        if (j.contains("classifiers")) {
            c.classifiers.clear();
            for (const auto& k : j.at("classifiers")) {
                c.classifiers.push_back(ensemble_kind_from(k.get<std::string>()));
            }
        }
        if (j.contains("train_fraction")) c.train_fraction = j.at("train_fraction").get<double>();
        if (j.contains("code_ranges")) {
            c.code_ranges.ranges.clear();
            for (const auto& r : j.at("code_ranges")) {
                c.code_ranges.ranges.push_back({r.at(0).get<long long>(), r.at(1).get<long long>()});
            }
        }
        if (j.contains("missing_drop_threshold")) {
            c.missing_drop_threshold = j.at("missing_drop_threshold").get<double>();
        }
        if (j.contains("cluster_cut")) {
            const auto& cc = j.at("cluster_cut");
            if (cc.contains("height")) {
                c.cluster_cut = ClusterCut::by_height(cc.at("height").get<double>());
            } else if (cc.contains("count")) {
                c.cluster_cut = ClusterCut::by_count(cc.at("count").get<std::size_t>());
            }
        }
        if (j.contains("vif_threshold")) c.vif_threshold = j.at("vif_threshold").get<double>();
        if (j.contains("adasyn")) {
            const auto& a = j.at("adasyn");
            if (a.contains("k_neighbors")) c.adasyn.k_neighbors = a.at("k_neighbors").get<std::size_t>();
            if (a.contains("beta")) c.adasyn.beta = a.at("beta").get<double>();
        }
        if (j.contains("search")) {
            const auto& s = j.at("search");
            if (s.contains("strategy")) {
                const std::string name = s.at("strategy").get<std::string>();
                if (name == "grid") {
                    c.search.strategy = SearchConfig::Strategy::grid;
                } else if (name == "random") {
                    c.search.strategy = SearchConfig::Strategy::random;
                } else {
                    throw ConfigError("unknown search strategy '" + name + "'");
                }
            }
            if (s.contains("trials")) c.search.trials = s.at("trials").get<std::size_t>();
            auto parse_domain = [](const json& d) {
                std::vector<int> out;
                if (d.is_array() && d.size() == 2 && d.at(0).is_number_integer() &&
                    d.at(1).is_number_integer() && d.at(0).get<int>() <= d.at(1).get<int>()) {
                    for (int v = d.at(0).get<int>(); v <= d.at(1).get<int>(); ++v) out.push_back(v);
                } else {
                    for (const auto& v : d) out.push_back(v.get<int>());
                }
                return out;
            };
            if (s.contains("max_depth_domain")) {
                c.search.max_depth_domain = parse_domain(s.at("max_depth_domain"));
            }
            if (s.contains("n_estimators_domain")) {
                c.search.n_estimators_domain = parse_domain(s.at("n_estimators_domain"));
            }
        }
        if (j.contains("payoff")) c.payoff = PayoffMatrix::from_json(j.at("payoff").dump());
        if (j.contains("objective")) c.objective = j.at("objective").get<std::string>();
        if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
        if (j.contains("seed")) c.master_seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("gbt")) {
            const auto& g = j.at("gbt");
            if (g.contains("learning_rate")) c.gbt_learning_rate = g.at("learning_rate").get<double>();
            if (g.contains("l2_leaf_reg")) c.gbt_l2_leaf_reg = g.at("l2_leaf_reg").get<double>();
        }
        if (j.contains("n_threads")) c.n_threads = j.at("n_threads").get<unsigned>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad pipeline config field: ") + e.what());
    }
    return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return from_json(j);
}

}  // namespace credo
