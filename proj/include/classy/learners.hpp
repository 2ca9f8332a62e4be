#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "classy/data.hpp"
#include "classy/random.hpp"

namespace classy {

enum class Family { knn, cart_tree, bagged_trees, linear_sgd };

inline constexpr std::array<Family, 4> all_families{Family::knn, Family::cart_tree, Family::bagged_trees,
                                                    Family::linear_sgd};

std::string_view family_name(Family f) noexcept;

struct KnnParams {
    int k = 5;
    // Pseudo-count added to every class before normalizing neighbor frequencies.
    double smoothing = 1.0;
};

struct TreeParams {
    int max_depth = 6;
    // Features examined per split; 0 means all of them.
    int max_features = 0;
    double smoothing = 1.0;
};

struct BaggedTreesParams {
    int n_trees = 10;
    int max_depth = 8;
    // 0 means ceil(sqrt(n_features)).
    int max_features = 0;
    double smoothing = 1.0;
};

struct LinearSgdParams {
    double learning_rate = 0.01;
    int epochs = 20;
    double l2 = 0.0;
};

using Hyperparameters = std::variant<KnnParams, TreeParams, BaggedTreesParams, LinearSgdParams>;

Family family_of(const Hyperparameters& h) noexcept;
std::string describe(const Hyperparameters& h);

namespace detail {

struct KnnState {
    std::shared_ptr<const Eigen::MatrixXd> points;
    std::shared_ptr<const Labels> labels;
    Eigen::VectorXd squared_norms;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int leaf = -1;  // row of Tree::leaf_proba
};

struct Tree {
    std::vector<TreeNode> nodes;
    Eigen::MatrixXd leaf_proba;  // one row per leaf
};

struct LinearState {
    Eigen::MatrixXd weights;  // n_classes x n_features
    Eigen::VectorXd bias;
};

} // namespace detail

/// A trained base classifier. Immutable after fitting; prediction is deterministic.
class FittedModel {
public:
    int model_id() const noexcept { return model_id_; }
    Family family() const noexcept { return family_of(hyper_); }
    const Hyperparameters& hyperparameters() const noexcept { return hyper_; }
    int n_classes() const noexcept { return n_classes_; }
    Eigen::Index n_features() const noexcept { return n_features_; }

    /// n_samples x n_classes, row-stochastic. Throws DataError on feature-count mismatch.
    Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& features) const;
    Labels predict(const Eigen::MatrixXd& features) const;

    friend FittedModel fit_model(const Hyperparameters&, const Dataset&, Rng&, int);
    friend FittedModel fit_model(const Hyperparameters&, std::shared_ptr<const Dataset>, Rng&, int);

private:
    using State = std::variant<detail::KnnState, detail::Tree, std::vector<detail::Tree>, detail::LinearState>;

    int model_id_ = 0;
    Hyperparameters hyper_;
    int n_classes_ = 0;
    Eigen::Index n_features_ = 0;
    State state_;
};

/// Fits one model. Out-of-range hyperparameters (k above the training size,
/// non-positive depth) are clamped rather than rejected.
FittedModel fit_model(const Hyperparameters& hyper, const Dataset& train, Rng& rng, int model_id = 0);
FittedModel fit_model(const Hyperparameters& hyper, std::shared_ptr<const Dataset> train, Rng& rng,
                      int model_id = 0);

struct HyperparameterRanges {
    int knn_k_min = 1;
    int knn_k_max = 25;
    int depth_min = 2;
    int depth_max = 12;
    int trees_min = 10;
    int trees_max = 50;
    double log10_lr_min = -3.0;
    double log10_lr_max = -1.0;
    int epochs_min = 10;
    int epochs_max = 50;
    std::vector<double> l2_choices{0.0, 1e-4, 1e-2};
};

struct PoolSpec {
    int n_models = 250;
    // Indexed like all_families.
    std::array<double, 4> family_weights{0.25, 0.25, 0.25, 0.25};
    HyperparameterRanges ranges;
    std::uint64_t seed = 0;
};

/// Throws ConfigError when weights do not form a distribution or n_models < 1.
void validate(const PoolSpec& spec);

/// Draws a family and hyperparameters from `rng` according to the spec.
Hyperparameters sample_hyperparameters(const PoolSpec& spec, Rng& rng);

/// Draws and fits spec.n_models models. Model i uses its own stream derived
/// from (spec.seed, i), so the pool does not depend on `jobs`.
std::vector<FittedModel> sample_and_fit_pool(const PoolSpec& spec, const Dataset& train, int jobs = 1);

} // namespace classy
