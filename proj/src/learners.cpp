#include "classy/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "classy/error.hpp"
#include "classy/metrics.hpp"
#include "classy/parallel.hpp"

namespace classy {

std::string_view family_name(Family f) noexcept
{
    switch (f) {
    case Family::knn:
        return "knn";
    case Family::cart_tree:
        return "cart_tree";
    case Family::bagged_trees:
        return "bagged_trees";
    case Family::linear_sgd:
        return "linear_sgd";
    }
    return "unknown";
}

Family family_of(const Hyperparameters& h) noexcept
{
    return static_cast<Family>(h.index());
}

std::string describe(const Hyperparameters& h)
{
    std::ostringstream out;
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, KnnParams>)
                out << "knn(k=" << p.k << ")";
            else if constexpr (std::is_same_v<P, TreeParams>)
                out << "cart_tree(max_depth=" << p.max_depth << ")";
            else if constexpr (std::is_same_v<P, BaggedTreesParams>)
                out << "bagged_trees(n_trees=" << p.n_trees << ", max_depth=" << p.max_depth << ")";
            else
                out << "linear_sgd(lr=" << p.learning_rate << ", epochs=" << p.epochs << ", l2=" << p.l2 << ")";
        },
        h);
    return out.str();
}

namespace {

using detail::KnnState;
using detail::LinearState;
using detail::Tree;
using detail::TreeNode;

// ---------------------------------------------------------------- k-NN

Eigen::MatrixXd knn_proba(const KnnState& s, const KnnParams& p, int n_classes, const Eigen::MatrixXd& x)
{
    const auto& points = *s.points;
    const auto& labels = *s.labels;
    const Eigen::Index n_train = points.rows();
    const auto k = static_cast<std::size_t>(std::clamp<Eigen::Index>(p.k, 1, n_train));

    // Squared distances up to the per-query constant |q|^2, which does not affect ranking.
    Eigen::MatrixXd partial = (-2.0 * x) * points.transpose();
    partial.rowwise() += s.squared_norms.transpose();

    Eigen::MatrixXd proba(x.rows(), n_classes);
    std::vector<std::pair<double, Eigen::Index>> order(static_cast<std::size_t>(n_train));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < n_train; ++j)
            order[static_cast<std::size_t>(j)] = {partial(i, j), j};
        std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1), order.end());
        Eigen::RowVectorXd counts = Eigen::RowVectorXd::Constant(n_classes, p.smoothing);
        for (std::size_t r = 0; r < k; ++r)
            counts[labels[order[r].second]] += 1.0;
        proba.row(i) = counts / counts.sum();
    }
    return proba;
}

// ---------------------------------------------------------------- CART

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& x, const Labels& y, int n_classes, int max_depth, int max_features,
                double smoothing, Rng& rng)
        : x_(x), y_(y), n_classes_(n_classes), max_depth_(std::max(0, max_depth)),
          max_features_(max_features <= 0 ? static_cast<int>(x.cols())
                                          : std::min<int>(max_features, static_cast<int>(x.cols()))),
          smoothing_(smoothing), rng_(rng), features_(static_cast<std::size_t>(x.cols()))
    {
        std::iota(features_.begin(), features_.end(), Eigen::Index{0});
    }

    Tree build(std::vector<Eigen::Index> rows)
    {
        std::vector<Eigen::RowVectorXd> leaves;
        grow(rows, 0, leaves);
        tree_.leaf_proba.resize(static_cast<Eigen::Index>(leaves.size()), n_classes_);
        for (std::size_t i = 0; i < leaves.size(); ++i)
            tree_.leaf_proba.row(static_cast<Eigen::Index>(i)) = leaves[i];
        return std::move(tree_);
    }

private:
    struct Candidate {
        Eigen::Index feature = -1;
        double threshold = 0.0;
        double score = 0.0;
    };

    int grow(std::vector<Eigen::Index>& rows, int depth, std::vector<Eigen::RowVectorXd>& leaves)
    {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();

        std::vector<double> counts(static_cast<std::size_t>(n_classes_), 0.0);
        for (auto r : rows)
            counts[static_cast<std::size_t>(y_[r])] += 1.0;
        const auto distinct = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; });

        Candidate best;
        if (depth < max_depth_ && rows.size() >= 2 && distinct > 1)
            best = best_split(rows, counts);

        if (best.feature < 0) {
            Eigen::RowVectorXd dist(n_classes_);
            for (int c = 0; c < n_classes_; ++c)
                dist[c] = counts[static_cast<std::size_t>(c)] + smoothing_;
            tree_.nodes[static_cast<std::size_t>(id)].leaf = static_cast<int>(leaves.size());
            leaves.push_back(dist / dist.sum());
            return id;
        }

        std::vector<Eigen::Index> left, right;
        for (auto r : rows)
            (x_(r, best.feature) <= best.threshold ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        const int l = grow(left, depth + 1, leaves);
        const int r = grow(right, depth + 1, leaves);
        auto& node = tree_.nodes[static_cast<std::size_t>(id)];
        node.feature = static_cast<int>(best.feature);
        node.threshold = best.threshold;
        node.left = l;
        node.right = r;
        return id;
    }

    // Maximizes sum_c l_c^2 / n_l + sum_c r_c^2 / n_r, i.e. minimizes weighted Gini.
    Candidate best_split(const std::vector<Eigen::Index>& rows, const std::vector<double>& counts)
    {
        const auto n = static_cast<double>(rows.size());
        double parent = 0.0;
        for (double c : counts)
            parent += c * c;
        parent /= n;

        // Partial Fisher-Yates: the first max_features_ entries are the sampled subset.
        const auto m = static_cast<std::size_t>(max_features_);
        if (m < features_.size()) {
            for (std::size_t i = 0; i < m; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, features_.size() - 1);
                std::swap(features_[i], features_[pick(rng_)]);
            }
        }

        Candidate best;
        best.score = parent + 1e-12;
        std::vector<std::pair<double, int>> column(rows.size());
        std::vector<double> left(counts.size());
        for (std::size_t fi = 0; fi < m; ++fi) {
            const Eigen::Index f = features_[fi];
            for (std::size_t i = 0; i < rows.size(); ++i)
                column[i] = {x_(rows[i], f), y_[rows[i]]};
            std::sort(column.begin(), column.end());
            if (column.front().first == column.back().first)
                continue;

            std::fill(left.begin(), left.end(), 0.0);
            double left_sq = 0.0;
            double right_sq = parent * n;
            for (std::size_t i = 0; i + 1 < column.size(); ++i) {
                const auto c = static_cast<std::size_t>(column[i].second);
                left_sq += 2.0 * left[c] + 1.0;
                right_sq -= 2.0 * (counts[c] - left[c]) - 1.0;
                left[c] += 1.0;
                if (column[i].first == column[i + 1].first)
                    continue;
                const auto nl = static_cast<double>(i + 1);
                const double score = left_sq / nl + right_sq / (n - nl);
                if (score > best.score) {
                    best.score = score;
                    best.feature = f;
                    best.threshold = 0.5 * (column[i].first + column[i + 1].first);
                    // Midpoint can round onto the upper value for adjacent doubles.
                    if (!(best.threshold < column[i + 1].first))
                        best.threshold = column[i].first;
                }
            }
        }
        return best;
    }

    const Eigen::MatrixXd& x_;
    const Labels& y_;
    int n_classes_;
    int max_depth_;
    int max_features_;
    double smoothing_;
    Rng& rng_;
    std::vector<Eigen::Index> features_;
    Tree tree_;
};

void accumulate_tree(const Tree& t, const Eigen::MatrixXd& x, Eigen::MatrixXd& out)
{
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const TreeNode* node = &t.nodes.front();
        while (node->feature >= 0)
            node = &t.nodes[static_cast<std::size_t>(x(i, node->feature) <= node->threshold ? node->left
                                                                                             : node->right)];
        out.row(i) += t.leaf_proba.row(node->leaf);
    }
}

// ---------------------------------------------------------------- linear SGD

LinearState fit_linear(const Dataset& train, int n_classes, const LinearSgdParams& p, Rng& rng)
{
    const Eigen::Index d = train.n_features();
    LinearState s{Eigen::MatrixXd::Zero(n_classes, d), Eigen::VectorXd::Zero(n_classes)};
    std::vector<Eigen::Index> order(static_cast<std::size_t>(train.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const double decay = 1.0 - p.learning_rate * p.l2;

    Eigen::VectorXd z(n_classes);
    for (int epoch = 0; epoch < std::max(1, p.epochs); ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (auto i : order) {
            const auto x = train.features.row(i).transpose();
            z.noalias() = s.weights * x + s.bias;
            z = (z.array() - z.maxCoeff()).exp();
            z /= z.sum();
            z[train.labels[i]] -= 1.0;
            if (p.l2 > 0)
                s.weights *= decay;
            s.weights.noalias() -= p.learning_rate * z * x.transpose();
            s.bias -= p.learning_rate * z;
        }
    }
    return s;
}

Eigen::MatrixXd linear_proba(const LinearState& s, const Eigen::MatrixXd& x)
{
    Eigen::MatrixXd z = x * s.weights.transpose();
    z.rowwise() += s.bias.transpose();
    z.colwise() -= z.rowwise().maxCoeff();
    z = z.array().exp();
    z.array().colwise() /= z.rowwise().sum().array();
    return z;
}

} // namespace

Eigen::MatrixXd FittedModel::predict_proba(const Eigen::MatrixXd& features) const
{
    if (features.cols() != n_features_)
        throw DataError(DataErrorKind::dimension_mismatch, "model " + std::to_string(model_id_) + " expects " +
                                                               std::to_string(n_features_) + " features, got " +
                                                               std::to_string(features.cols()));
    return std::visit(
        [&](const auto& st) -> Eigen::MatrixXd {
            using S = std::decay_t<decltype(st)>;
            if constexpr (std::is_same_v<S, KnnState>) {
                return knn_proba(st, std::get<KnnParams>(hyper_), n_classes_, features);
            } else if constexpr (std::is_same_v<S, Tree>) {
                Eigen::MatrixXd out = Eigen::MatrixXd::Zero(features.rows(), n_classes_);
                accumulate_tree(st, features, out);
                return out;
            } else if constexpr (std::is_same_v<S, std::vector<Tree>>) {
                Eigen::MatrixXd out = Eigen::MatrixXd::Zero(features.rows(), n_classes_);
                for (const auto& t : st)
                    accumulate_tree(t, features, out);
                return out / static_cast<double>(st.size());
            } else {
                return linear_proba(st, features);
            }
        },
        state_);
}

Labels FittedModel::predict(const Eigen::MatrixXd& features) const
{
    return weighted_argmax(predict_proba(features));
}

FittedModel fit_model(const Hyperparameters& hyper, std::shared_ptr<const Dataset> train, Rng& rng, int model_id)
{
    if (!train || train->size() == 0)
        throw DataError(DataErrorKind::empty, "cannot fit a model on an empty training set");
    const Dataset& data = *train;

    FittedModel m;
    m.model_id_ = model_id;
    m.hyper_ = hyper;
    m.n_classes_ = std::max(data.n_classes, data.labels.maxCoeff() + 1);
    m.n_features_ = data.n_features();

    const auto n = static_cast<int>(data.size());
    std::visit(
        [&](auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, KnnParams>) {
                p.k = std::clamp(p.k, 1, n);
                p.smoothing = std::max(0.0, p.smoothing);
                auto points = std::shared_ptr<const Eigen::MatrixXd>(train, &train->features);
                auto labels = std::shared_ptr<const Labels>(train, &train->labels);
                m.state_ = KnnState{points, labels, points->rowwise().squaredNorm()};
            } else if constexpr (std::is_same_v<P, TreeParams>) {
                p.max_depth = std::max(1, p.max_depth);
                std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
                std::iota(rows.begin(), rows.end(), Eigen::Index{0});
                TreeBuilder builder(data.features, data.labels, m.n_classes_, p.max_depth, p.max_features,
                                    std::max(0.0, p.smoothing), rng);
                m.state_ = builder.build(std::move(rows));
            } else if constexpr (std::is_same_v<P, BaggedTreesParams>) {
                p.n_trees = std::max(1, p.n_trees);
                p.max_depth = std::max(1, p.max_depth);
                if (p.max_features <= 0)
                    p.max_features = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(data.n_features()))));
                std::vector<Tree> trees;
                trees.reserve(static_cast<std::size_t>(p.n_trees));
                std::uniform_int_distribution<Eigen::Index> draw(0, n - 1);
                for (int t = 0; t < p.n_trees; ++t) {
                    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
                    for (auto& r : rows)
                        r = draw(rng);
                    TreeBuilder builder(data.features, data.labels, m.n_classes_, p.max_depth, p.max_features,
                                        std::max(0.0, p.smoothing), rng);
                    trees.push_back(builder.build(std::move(rows)));
                }
                m.state_ = std::move(trees);
            } else {
                p.epochs = std::max(1, p.epochs);
                m.state_ = fit_linear(data, m.n_classes_, p, rng);
            }
        },
        m.hyper_);
    return m;
}

FittedModel fit_model(const Hyperparameters& hyper, const Dataset& train, Rng& rng, int model_id)
{
    return fit_model(hyper, std::make_shared<const Dataset>(train), rng, model_id);
}

void validate(const PoolSpec& spec)
{
    if (spec.n_models < 1)
        throw ConfigError("pool must contain at least one model");
    double sum = 0.0;
    for (double w : spec.family_weights) {
        if (!(w >= 0.0))
            throw ConfigError("family weights must be non-negative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("family weights must sum to 1");
    const auto& r = spec.ranges;
    if (r.knn_k_min < 1 || r.knn_k_max < r.knn_k_min || r.depth_min < 1 || r.depth_max < r.depth_min ||
        r.trees_min < 1 || r.trees_max < r.trees_min || r.log10_lr_max < r.log10_lr_min || r.epochs_min < 1 ||
        r.epochs_max < r.epochs_min || r.l2_choices.empty())
        throw ConfigError("invalid hyperparameter ranges");
}

Hyperparameters sample_hyperparameters(const PoolSpec& spec, Rng& rng)
{
    const auto& r = spec.ranges;
    std::discrete_distribution<int> family(spec.family_weights.begin(), spec.family_weights.end());
    auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    switch (all_families[static_cast<std::size_t>(family(rng))]) {
    case Family::knn:
        return KnnParams{uniform_int(r.knn_k_min, r.knn_k_max)};
    case Family::cart_tree:
        return TreeParams{uniform_int(r.depth_min, r.depth_max)};
    case Family::bagged_trees: {
        BaggedTreesParams p;
        p.n_trees = uniform_int(r.trees_min, r.trees_max);
        p.max_depth = uniform_int(r.depth_min, r.depth_max);
        return p;
    }
    case Family::linear_sgd: {
        LinearSgdParams p;
        p.learning_rate = std::pow(10.0, std::uniform_real_distribution<double>(r.log10_lr_min, r.log10_lr_max)(rng));
        p.epochs = uniform_int(r.epochs_min, r.epochs_max);
        p.l2 = r.l2_choices[static_cast<std::size_t>(uniform_int(0, static_cast<int>(r.l2_choices.size()) - 1))];
        return p;
    }
    }
    return KnnParams{};
}

std::vector<FittedModel> sample_and_fit_pool(const PoolSpec& spec, const Dataset& train, int jobs)
{
    validate(spec);
    if (train.size() == 0)
        throw DataError(DataErrorKind::empty, "cannot fit a pool on an empty training set");
    auto shared = std::make_shared<const Dataset>(train);
    std::vector<FittedModel> pool(static_cast<std::size_t>(spec.n_models));
    parallel_for(pool.size(), jobs, [&](std::size_t i) {
        Rng rng = make_rng(derive_seed(spec.seed, stream::model, i));
        const auto hyper = sample_hyperparameters(spec, rng);
        pool[i] = fit_model(hyper, shared, rng, static_cast<int>(i));
    });
    return pool;
}

} // namespace classy
