#pragma once

#include <Eigen/Dense>

#include "classy/data.hpp"

namespace classy {

/// Per-class recall plus its mean over the classes present in the truth vector
/// (balanced accuracy).
struct ClasswiseScores {
    Eigen::VectorXd per_class;
    double overall = 0.0;
    Eigen::Matrix<bool, Eigen::Dynamic, 1> present_mask;
};

/// Throws DataError on empty or mismatched input.
ClasswiseScores classwise_scores(const Labels& y_true, const Labels& y_pred, int n_classes);

inline double balanced_accuracy(const Labels& y_true, const Labels& y_pred, int n_classes)
{
    return classwise_scores(y_true, y_pred, n_classes).overall;
}

/// Row-wise argmax; ties resolve to the lowest column index.
template <class Derived>
Labels weighted_argmax(const Eigen::MatrixBase<Derived>& scores)
{
    Labels out(scores.rows());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < scores.cols(); ++c)
            if (scores(i, c) > scores(i, best))
                best = c;
        out[i] = static_cast<int>(best);
    }
    return out;
}

/// Column-wise plurality over a member-by-sample label matrix. Duplicate members
/// count multiply; ties resolve to the lowest class index.
Labels majority_vote(const Eigen::MatrixXi& label_matrix);

} // namespace classy
