#include <gtest/gtest.h>

#include "classy/error.hpp"
#include "classy/learners.hpp"
#include "classy/metrics.hpp"
#include "classy/synth.hpp"

using namespace classy;

namespace {

Dataset blobs(int n, int features, int classes, double sep, std::uint64_t seed)
{
    BlobSpec spec;
    spec.n_samples = n;
    spec.n_features = features;
    spec.n_classes = classes;
    spec.separation = sep;
    spec.seed = seed;
    return make_blobs(spec);
}

PoolSpec single_family(Family f, int n_models, std::uint64_t seed)
{
    PoolSpec spec;
    spec.n_models = n_models;
    spec.family_weights = {0, 0, 0, 0};
    spec.family_weights[static_cast<std::size_t>(f)] = 1.0;
    spec.seed = seed;
    return spec;
}

} // namespace

TEST(Pool, DefaultSpecGivesTwoHundredFiftyModelsWithDrawIndexIds)
{
    const auto d = blobs(120, 4, 3, 4.0, 1);
    PoolSpec spec;
    spec.seed = 3;
    const auto pool = sample_and_fit_pool(spec, d);
    ASSERT_EQ(pool.size(), 250u);
    std::array<int, 4> counts{};
    for (std::size_t i = 0; i < pool.size(); ++i) {
        EXPECT_EQ(pool[i].model_id(), static_cast<int>(i));
        ++counts[static_cast<std::size_t>(pool[i].family())];
    }
    for (int c : counts)
        EXPECT_GT(c, 30);
}

TEST(Pool, DegenerateWeightsGiveOneFamily)
{
    const auto d = blobs(80, 3, 2, 4.0, 2);
    for (Family f : all_families) {
        const auto pool = sample_and_fit_pool(single_family(f, 12, 5), d);
        for (const auto& m : pool)
            EXPECT_EQ(m.family(), f) << family_name(f);
    }
}

TEST(Pool, SameSpecSameModelsRegardlessOfJobs)
{
    const auto d = blobs(150, 5, 3, 3.0, 4);
    PoolSpec spec;
    spec.n_models = 24;
    spec.seed = 11;
    const auto a = sample_and_fit_pool(spec, d, 1);
    const auto b = sample_and_fit_pool(spec, d, 1);
    const auto c = sample_and_fit_pool(spec, d, 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].family(), b[i].family());
        EXPECT_EQ(describe(a[i].hyperparameters()), describe(c[i].hyperparameters()));
        const Eigen::MatrixXd pa = a[i].predict_proba(d.features);
        EXPECT_EQ(pa, b[i].predict_proba(d.features));
        EXPECT_EQ(pa, c[i].predict_proba(d.features));
    }
}

TEST(Pool, InvalidSpecIsAConfigError)
{
    PoolSpec spec;
    spec.n_models = 0;
    EXPECT_THROW(validate(spec), ConfigError);
    spec.n_models = 5;
    spec.family_weights = {0.5, 0.5, 0.5, 0.0};
    EXPECT_THROW(validate(spec), ConfigError);
}

TEST(Predict, EveryFamilyIsRowStochastic)
{
    const auto train = blobs(200, 6, 4, 2.0, 6);
    const auto probe = blobs(50, 6, 4, 2.0, 60);
    PoolSpec spec;
    spec.n_models = 40;
    spec.seed = 8;
    for (const auto& m : sample_and_fit_pool(spec, train)) {
        const Eigen::MatrixXd p = m.predict_proba(probe.features);
        ASSERT_EQ(p.rows(), 50);
        ASSERT_EQ(p.cols(), 4);
        EXPECT_GE(p.minCoeff(), 0.0);
        EXPECT_LT((p.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-9) << describe(m.hyperparameters());
        EXPECT_EQ(m.predict(probe.features), weighted_argmax(p));
    }
}

TEST(Predict, DimensionMismatchIsAnError)
{
    const auto train = blobs(40, 3, 2, 4.0, 1);
    Rng rng(1);
    const auto m = fit_model(TreeParams{}, train, rng);
    EXPECT_THROW(m.predict_proba(Eigen::MatrixXd::Zero(2, 4)), DataError);
}

TEST(Knn, OneNeighbourOnATrainingPointIsOneHot)
{
    const auto train = blobs(60, 3, 3, 3.0, 2);
    Rng rng(1);
    const auto m = fit_model(KnnParams{1, 0.0}, train, rng);
    const Eigen::MatrixXd p = m.predict_proba(train.features);
    for (Eigen::Index i = 0; i < train.size(); ++i)
        for (int c = 0; c < 3; ++c)
            EXPECT_DOUBLE_EQ(p(i, c), c == train.labels[i] ? 1.0 : 0.0);
}

TEST(Knn, OneNeighbourMatchesBruteForceDistance)
{
    Dataset d;
    d.n_classes = 3;
    d.features.resize(4, 2);
    d.features << 0, 0, 4, 0, 0, 3, 5, 5;
    d.labels = (Labels(4) << 0, 1, 2, 1).finished();
    Rng rng(1);
    const auto m = fit_model(KnnParams{1, 0.0}, d, rng);

    Eigen::MatrixXd probes(5, 2);
    probes << 0.4, 0.3, 3.1, 0.9, 0.2, 2.2, 4.6, 4.1, -3, 9;
    const Eigen::MatrixXd p = m.predict_proba(probes);
    for (Eigen::Index q = 0; q < probes.rows(); ++q) {
        Eigen::Index nearest = 0;
        for (Eigen::Index r = 1; r < 4; ++r)
            if ((d.features.row(r) - probes.row(q)).squaredNorm() <
                (d.features.row(nearest) - probes.row(q)).squaredNorm())
                nearest = r;
        for (int c = 0; c < 3; ++c)
            EXPECT_DOUBLE_EQ(p(q, c), c == d.labels[nearest] ? 1.0 : 0.0) << "probe " << q;
    }
}

TEST(Knn, NeighbourFrequenciesWithSmoothing)
{
    Dataset d;
    d.n_classes = 2;
    d.features.resize(3, 1);
    d.features << 0, 1, 10;
    d.labels = (Labels(3) << 0, 0, 1).finished();
    Rng rng(1);
    const auto m = fit_model(KnnParams{2, 1.0}, d, rng);
    const Eigen::MatrixXd p = m.predict_proba(Eigen::MatrixXd::Zero(1, 1));
    EXPECT_DOUBLE_EQ(p(0, 0), 3.0 / 4.0);
    EXPECT_DOUBLE_EQ(p(0, 1), 1.0 / 4.0);
}

TEST(Clamping, OversizedAndNonPositiveParametersStillFit)
{
    const auto train = blobs(10, 2, 2, 4.0, 3);
    Rng rng(2);
    const auto knn = fit_model(KnnParams{500, 1.0}, train, rng);
    const Eigen::MatrixXd p = knn.predict_proba(train.features);
    // every neighbour counted: all rows identical
    EXPECT_LT((p.rowwise() - p.row(0)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NO_THROW(fit_model(TreeParams{0, -3, 1.0}, train, rng));
    EXPECT_NO_THROW(fit_model(BaggedTreesParams{0, 0, 99, 1.0}, train, rng));
    EXPECT_NO_THROW(fit_model(LinearSgdParams{0.01, 0, 0.0}, train, rng));
}

TEST(Tree, LeafDistributionIsTheSmoothedTrainingDistribution)
{
    Dataset d;
    d.n_classes = 2;
    d.features.resize(4, 1);
    d.features << 0, 1, 2, 3;
    d.labels = (Labels(4) << 0, 0, 0, 1).finished();
    Rng rng(1);
    const auto stump = fit_model(TreeParams{1, 0, 0.0}, d, rng);
    const Eigen::MatrixXd p = stump.predict_proba(d.features);
    EXPECT_DOUBLE_EQ(p(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(p(3, 1), 1.0);

    const auto smooth = fit_model(TreeParams{1, 0, 1.0}, d, rng);
    EXPECT_DOUBLE_EQ(smooth.predict_proba(d.features)(0, 0), 4.0 / 5.0);
}

TEST(Families, EachSeparatesWellSeparatedBlobsForSomeSetting)
{
    const auto train = blobs(500, 2, 2, 6.0, 21);
    const auto probe = blobs(500, 2, 2, 6.0, 22);
    for (Family f : all_families) {
        const auto pool = sample_and_fit_pool(single_family(f, 20, 13), train);
        double best = 0.0;
        for (const auto& m : pool)
            best = std::max(best, balanced_accuracy(probe.labels, m.predict(probe.features), 2));
        EXPECT_GE(best, 0.95) << family_name(f);
    }
}

TEST(Families, SeparationZeroIsChanceLevel)
{
    const auto train = blobs(600, 4, 3, 0.0, 41);
    const auto probe = blobs(600, 4, 3, 0.0, 42);
    PoolSpec spec;
    spec.n_models = 30;
    spec.seed = 4;
    double sum = 0.0;
    for (const auto& m : sample_and_fit_pool(spec, train))
        sum += balanced_accuracy(probe.labels, m.predict(probe.features), 3);
    EXPECT_NEAR(sum / 30.0, 1.0 / 3.0, 0.1);
}
