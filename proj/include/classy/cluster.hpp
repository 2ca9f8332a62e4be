#pragma once

#include <vector>

#include <Eigen/Dense>

#include "classy/random.hpp"

namespace classy {

/// Result of k-means over a set of row vectors. `assignments[i]` is the cluster
/// of row i (and of `model_ids[i]` when clustering model outputs).
struct Clustering {
    int k = 0;
    std::vector<int> model_ids;
    std::vector<int> assignments;
    Eigen::MatrixXd centroids;  // k x dim
    double inertia = 0.0;
    // Inertia after each assignment step, ending with the final value.
    std::vector<double> inertia_trace;
    int iterations = 0;

    std::vector<std::vector<int>> members() const;  // row positions per cluster
};

struct KMeansOptions {
    int max_iterations = 300;
    // Independent seedings; the run with the lowest inertia is kept.
    int n_init = 10;
};

/// Number of pairwise-distinct rows.
Eigen::Index count_distinct_rows(const Eigen::MatrixXd& points);

/// k-means++ seeding followed by Lloyd iterations until the assignment is a
/// fixpoint, repeated `n_init` times. k is clamped to [1, number of distinct
/// rows]. Assignment ties go to the lowest cluster index; an empty cluster is
/// reseeded with the point farthest from its current centroid. Throws DataError
/// on an empty input.
Clustering kmeans(const Eigen::MatrixXd& points, int k, Rng& rng, const KMeansOptions& options = {});

/// Coordinates of the rows in an orthonormal basis of their span. Pairwise
/// distances are preserved and equal rows map to equal coordinates. Returned
/// unchanged when there are no more columns than rows.
Eigen::MatrixXd span_coordinates(const Eigen::MatrixXd& points);

/// Sum of squared Euclidean distances from each row to its cluster mean.
double partition_inertia(const Eigen::MatrixXd& points, const std::vector<int>& assignments, int k);

} // namespace classy
