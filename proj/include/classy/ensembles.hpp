#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "classy/cluster.hpp"
#include "classy/data.hpp"
#include "classy/random.hpp"

namespace classy {

/// Validation-set summary of one fitted model: everything ensemble construction
/// is allowed to see.
struct ModelRecord {
    int model_id = 0;
    // Balanced accuracy on validation; the per-member weight of classy methods.
    double validation_score = 0.0;
    Eigen::VectorXd per_class_accuracy;
    Eigen::MatrixXd val_proba;  // n_val x n_classes
    Labels val_pred;
};

/// Derives prediction, per-class recall and balanced accuracy from a model's
/// validation probabilities.
ModelRecord make_record(int model_id, Eigen::MatrixXd val_proba, const Labels& val_labels, int n_classes);

enum class Method { order, classy, cluster, lexigarden, classy_cluster };

inline constexpr std::array<Method, 5> all_methods{Method::order, Method::classy, Method::lexigarden,
                                                   Method::cluster, Method::classy_cluster};

std::string_view method_name(Method m) noexcept;
std::optional<Method> parse_method(std::string_view name) noexcept;

enum class Aggregation { majority_vote, weighted_proba };

constexpr Aggregation aggregation_of(Method m) noexcept
{
    return (m == Method::classy || m == Method::classy_cluster) ? Aggregation::weighted_proba
                                                               : Aggregation::majority_vote;
}

struct Ensemble {
    Method method = Method::order;
    std::vector<int> members;  // model ids; lexigarden may repeat an id
    std::vector<double> weights;
    Eigen::MatrixXi voters;  // one row per member, one column per class
    int k_param = 0;

    Aggregation aggregation() const noexcept { return aggregation_of(method); }
    std::size_t size() const noexcept { return members.size(); }
};

/// Top-k by validation score (ties: lower model id first); majority vote.
Ensemble build_order(const std::vector<ModelRecord>& records, int topk);

/// Per class, the top-k models by validation recall on that class become voters
/// for it (ties: higher validation score, then lower model id). Weights are the
/// validation scores.
Ensemble build_classy(const std::vector<ModelRecord>& records, int n_classes, int topk);

/// Best-scoring model of every cluster; majority vote.
Ensemble build_cluster(const std::vector<ModelRecord>& records, const Clustering& clustering);

/// `garden_size` rounds of lexicase filtering over shuffled validation instances;
/// members form a multiset.
Ensemble build_lexigarden(const std::vector<ModelRecord>& records, const Labels& validation_labels,
                          int garden_size, Rng& rng);

/// One lexicase pass over `order`: positions of the records that survive
/// successive filtering on validation correctness. Instances that no current
/// survivor gets right are skipped; the pass stops at a single survivor.
std::vector<std::size_t> lexicase_survivors(const std::vector<ModelRecord>& records, const Labels& validation_labels,
                                            const std::vector<Eigen::Index>& order);

/// Per-class top-k selection run inside each cluster, accumulated into one
/// global weighted ensemble.
Ensemble build_classy_cluster(const std::vector<ModelRecord>& records, const Clustering& clustering,
                              int n_classes, int topk);

enum class OutputKind { probabilities, one_hot };

/// One row per record: the flattened (row-major) validation probability matrix,
/// or the one-hot encoding of the validation predictions.
Eigen::MatrixXd output_vectors(const std::vector<ModelRecord>& records, OutputKind kind = OutputKind::probabilities);

/// k-means over output_vectors(records); the result carries the records' model ids.
Clustering cluster_models(const std::vector<ModelRecord>& records, int k, Rng& rng,
                          OutputKind kind = OutputKind::probabilities);

/// Resolves a model id to its probability matrix over the query set.
using ProbaProvider = std::function<const Eigen::MatrixXd&(int model_id)>;

/// Lookup table over a list of per-model matrices, keyed by model id.
class ProbaTable {
public:
    ProbaTable() = default;
    void add(int model_id, const Eigen::MatrixXd& proba) { table_[model_id] = &proba; }
    const Eigen::MatrixXd& operator()(int model_id) const;
    ProbaProvider provider() const
    {
        return [this](int id) -> const Eigen::MatrixXd& { return (*this)(id); };
    }

    static ProbaTable validation(const std::vector<ModelRecord>& records);

private:
    std::unordered_map<int, const Eigen::MatrixXd*> table_;
};

/// Accumulated sum of weight * voter-mask * probabilities over members
/// (n_samples x n_classes). Meaningful for every method; majority-vote
/// methods ignore it.
Eigen::MatrixXd ensemble_scores(const Ensemble& e, const ProbaProvider& proba);

/// Weighted-probability methods: row argmax of ensemble_scores. Majority-vote
/// methods: plurality of member argmax labels. Ties go to the lowest class.
/// Throws DataError for unresolvable members or mismatched dimensions.
Labels ensemble_predict(const Ensemble& e, const ProbaProvider& proba);

} // namespace classy
