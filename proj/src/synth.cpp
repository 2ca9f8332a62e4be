#include "classy/synth.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "classy/error.hpp"

namespace classy {

void validate(const BlobSpec& spec)
{
    if (spec.n_classes < 2)
        throw ConfigError("synth: need at least 2 classes");
    if (spec.n_features < 1)
        throw ConfigError("synth: need at least 1 feature");
    if (spec.n_samples < spec.n_classes)
        throw ConfigError("synth: need at least one sample per class");
    if (!(spec.separation >= 0.0) || !std::isfinite(spec.separation))
        throw ConfigError("synth: separation must be non-negative");
    if (!(spec.label_noise >= 0.0 && spec.label_noise <= 1.0))
        throw ConfigError("synth: label noise must be in [0, 1]");
}

Dataset make_blobs(const BlobSpec& spec)
{
    validate(spec);
    Rng rng = make_rng(spec.seed);
    std::normal_distribution<double> gauss;
    const int d = spec.n_features;
    const int k = spec.n_classes;
    const double radius = spec.separation / std::sqrt(2.0);

    Eigen::MatrixXd centers(k, d);
    if (d >= k) {
        Eigen::MatrixXd g(d, d);
        for (Eigen::Index i = 0; i < g.size(); ++i)
            g(i) = gauss(rng);
        const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
        centers = radius * q.leftCols(k).transpose();
    } else {
        for (int c = 0; c < k; ++c) {
            Eigen::RowVectorXd v(d);
            for (int j = 0; j < d; ++j)
                v[j] = gauss(rng);
            centers.row(c) = radius * v / std::max(v.norm(), 1e-12);
        }
    }

    Dataset out;
    out.n_classes = k;
    out.features.resize(spec.n_samples, d);
    out.labels.resize(spec.n_samples);
    std::bernoulli_distribution flip(spec.label_noise);
    std::uniform_int_distribution<int> other(1, k - 1);
    for (int i = 0; i < spec.n_samples; ++i) {
        const int truth = i % k;
        for (int j = 0; j < d; ++j)
            out.features(i, j) = centers(truth, j) + gauss(rng);
        int label = truth;
        if (i >= k && flip(rng))
            label = (truth + other(rng)) % k;
        out.labels[i] = label;
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(spec.n_samples));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    out = out.subset(order);
    out.n_classes = k;
    for (int j = 0; j < d; ++j)
        out.feature_names.push_back("x" + std::to_string(j));
    out.source_name = "blobs";
    return out;
}

} // namespace classy
