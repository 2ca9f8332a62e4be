#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "classy/data.hpp"
#include "classy/ensembles.hpp"
#include "classy/learners.hpp"
#include "classy/stats.hpp"

namespace classy {

struct ExperimentConfig {
    int n_replicates = 30;
    int n_models = 250;
    std::vector<int> k_grid{1, 2, 3, 5, 20, 50, 100, 250};
    Fractions fractions{0.6, 0.2, 0.2};
    std::vector<Method> methods{Method::order, Method::classy, Method::lexigarden, Method::cluster,
                                Method::classy_cluster};
    double alpha = 0.05;
    int permutation_rounds = 10000;
    std::uint64_t seed = 0;
    bool stratified = true;
    std::optional<double> time_limit_seconds;
    int jobs = 1;
    std::array<double, 4> family_weights{0.25, 0.25, 0.25, 0.25};
    HyperparameterRanges ranges;
    OutputKind cluster_output = OutputKind::probabilities;
};

/// Throws ConfigError when a field is out of range.
void validate(const ExperimentConfig& config);

/// Seed of replicate `index` under `master`.
std::uint64_t replicate_seed(std::uint64_t master, int index);

/// Everything a replicate produces before ensemble construction. Selection code
/// only ever receives `records` and `val_labels`.
struct PoolArtifacts {
    int n_classes = 0;
    Labels val_labels;
    Labels test_labels;
    std::vector<ModelRecord> records;
    std::vector<Eigen::MatrixXd> test_proba;  // parallel to records
    std::vector<std::string> model_names;     // parallel to records
};

/// Split, scale, fit the pool and score every model on validation and test.
PoolArtifacts prepare_replicate(const Dataset& dataset, const ExperimentConfig& config, std::uint64_t seed);

/// Validation-only outcome of the k-grid search for one method.
struct Selection {
    Method method = Method::order;
    int best_k = 0;
    Ensemble ensemble;
    double validation_score = 0.0;
    std::vector<double> validation_by_k;  // parallel to config.k_grid
};

struct ValidationChoices {
    std::size_t best_single = 0;  // position in records
    std::vector<Selection> selections;
};

/// Best single model and, per configured method, the validation-best k.
/// Deterministic in (records, val_labels, config, seed).
ValidationChoices select_on_validation(const std::vector<ModelRecord>& records, const Labels& val_labels,
                                       int n_classes, const ExperimentConfig& config, std::uint64_t seed);

struct BestSingle {
    int model_id = 0;
    std::string name;
    double validation_score = 0.0;
    double test_score = 0.0;
    double test_accuracy = 0.0;
};

struct MethodOutcome {
    Method method = Method::order;
    int best_k = 0;
    int ensemble_size = 0;
    double validation_score = 0.0;
    double test_score = 0.0;
    double test_accuracy = 0.0;
    std::vector<double> validation_by_k;
    std::vector<int> members;
};

struct ReplicateResult {
    int replicate = 0;
    std::uint64_t seed = 0;
    BestSingle best_single;
    std::vector<MethodOutcome> methods;
};

/// Selection on validation, then one test evaluation per chosen model/ensemble.
ReplicateResult evaluate_pool(const PoolArtifacts& artifacts, const ExperimentConfig& config, std::uint64_t seed);

ReplicateResult run_replicate(const Dataset& dataset, const ExperimentConfig& config, int replicate);

struct MethodSummary {
    Method method = Method::order;
    double median_test_score = 0.0;
    double median_ensemble_size = 0.0;
    double median_best_k = 0.0;
    PermutationResult versus_best_single;
    bool win = false;
    bool unique_win = false;
};

struct ExperimentReport {
    std::string dataset;
    ExperimentConfig config;
    std::vector<ReplicateResult> replicates;
    double best_single_median_test_score = 0.0;
    std::map<std::string, int> best_single_families;
    std::vector<MethodSummary> summaries;
    bool complete = true;
};

/// Recomputes every aggregate of `report` from its replicate list.
void summarize(ExperimentReport& report);

using ReplicateCallback = std::function<void(const ReplicateResult&)>;

/// Runs the replicates in order. Stops early, with `complete == false`, once
/// config.time_limit_seconds has elapsed.
ExperimentReport run_experiment(const Dataset& dataset, const ExperimentConfig& config,
                                const ReplicateCallback& on_replicate = {});

/// Externally produced per-model probability matrices (e.g. from deep networks).
struct PredictionBundle {
    int n_classes = 0;
    std::vector<std::string> model_names;
    std::vector<Eigen::MatrixXd> val_proba;
    std::vector<Eigen::MatrixXd> test_proba;
    Labels val_labels;
    Labels test_labels;
};

/// Reads meta.json, val_proba_<i>.csv, test_proba_<i>.csv, val_labels.csv and
/// test_labels.csv from `dir`, then validates the bundle.
PredictionBundle load_bundle(const std::filesystem::path& dir);
void write_bundle(const PredictionBundle& bundle, const std::filesystem::path& dir);

/// Throws DataError naming the model and row for inconsistent shapes, labels out
/// of range, or probability rows that do not sum to 1 within 1e-6.
void validate(const PredictionBundle& bundle);

/// Runs selection and test evaluation over a bundle, skipping training.
ReplicateResult aggregate_external(const PredictionBundle& bundle, const ExperimentConfig& config);

} // namespace classy
