#include "classy/metrics.hpp"

#include <string>
#include <vector>

#include "classy/error.hpp"

namespace classy {

ClasswiseScores classwise_scores(const Labels& y_true, const Labels& y_pred, int n_classes)
{
    if (y_true.size() == 0)
        throw DataError(DataErrorKind::empty, "classwise_scores: empty label vectors");
    if (y_true.size() != y_pred.size())
        throw DataError(DataErrorKind::dimension_mismatch, "classwise_scores: length mismatch");
    if (n_classes < 1)
        throw DataError(DataErrorKind::dimension_mismatch, "classwise_scores: n_classes must be positive");

    Eigen::VectorXd hits = Eigen::VectorXd::Zero(n_classes);
    Eigen::VectorXd totals = Eigen::VectorXd::Zero(n_classes);
    for (Eigen::Index i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i];
        const int p = y_pred[i];
        if (t < 0 || t >= n_classes || p < 0 || p >= n_classes)
            throw DataError(DataErrorKind::dimension_mismatch,
                            "classwise_scores: label out of range at position " + std::to_string(i));
        totals[t] += 1;
        if (t == p)
            hits[t] += 1;
    }

    ClasswiseScores s;
    s.per_class = Eigen::VectorXd::Zero(n_classes);
    s.present_mask = totals.array() > 0;
    double sum = 0;
    int present = 0;
    for (int c = 0; c < n_classes; ++c) {
        if (!s.present_mask[c])
            continue;
        s.per_class[c] = hits[c] / totals[c];
        sum += s.per_class[c];
        ++present;
    }
    s.overall = sum / present;
    return s;
}

Labels majority_vote(const Eigen::MatrixXi& label_matrix)
{
    if (label_matrix.rows() == 0)
        throw DataError(DataErrorKind::empty, "majority_vote: no members");
    if (label_matrix.minCoeff() < 0)
        throw DataError(DataErrorKind::dimension_mismatch, "majority_vote: negative label");
    const int n_classes = label_matrix.maxCoeff() + 1;

    Labels out(label_matrix.cols());
    std::vector<int> counts(static_cast<std::size_t>(n_classes));
    for (Eigen::Index j = 0; j < label_matrix.cols(); ++j) {
        std::fill(counts.begin(), counts.end(), 0);
        for (Eigen::Index m = 0; m < label_matrix.rows(); ++m)
            ++counts[static_cast<std::size_t>(label_matrix(m, j))];
        int best = 0;
        for (int c = 1; c < n_classes; ++c)
            if (counts[static_cast<std::size_t>(c)] > counts[static_cast<std::size_t>(best)])
                best = c;
        out[j] = best;
    }
    return out;
}

} // namespace classy
