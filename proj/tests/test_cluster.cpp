#include <random>
#include <set>

#include <gtest/gtest.h>

#include "classy/cluster.hpp"
#include "classy/error.hpp"
#include "oracles.hpp"

using namespace classy;

TEST(KMeans, SingleClusterCentroidIsTheMean)
{
    Eigen::MatrixXd x(3, 2);
    x << 0, 0, 2, 0, 1, 3;
    Rng rng(1);
    const auto c = kmeans(x, 1, rng);
    EXPECT_EQ(c.k, 1);
    EXPECT_EQ(c.assignments, (std::vector<int>{0, 0, 0}));
    EXPECT_NEAR(c.centroids(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(c.centroids(0, 1), 1.0, 1e-12);
    EXPECT_NEAR(c.inertia, partition_inertia(x, c.assignments, 1), 1e-12);
}

TEST(KMeans, TwoObviousGroups)
{
    Eigen::MatrixXd x(4, 2);
    x << 0, 0, 0, 0.1, 10, 10, 10, 10.1;
    std::vector<std::vector<double>> pts{{0, 0}, {0, 0.1}, {10, 10}, {10, 10.1}};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const auto c = kmeans(x, 2, rng);
        EXPECT_EQ(c.assignments[0], c.assignments[1]);
        EXPECT_EQ(c.assignments[2], c.assignments[3]);
        EXPECT_NE(c.assignments[0], c.assignments[2]);
        EXPECT_NEAR(c.inertia, oracle::exhaustive_kmeans_optimum(pts, 2), 1e-9);
    }
}

TEST(KMeans, KIsClampedToDistinctRows)
{
    Eigen::MatrixXd x(5, 1);
    x << 1, 1, 2, 3, 3;
    EXPECT_EQ(count_distinct_rows(x), 3);
    Rng rng(4);
    const auto c = kmeans(x, 10, rng);
    EXPECT_EQ(c.k, 3);
    EXPECT_NEAR(c.inertia, 0.0, 1e-12);
    EXPECT_EQ(c.assignments[0], c.assignments[1]);
    EXPECT_EQ(c.assignments[3], c.assignments[4]);
    EXPECT_EQ(std::set<int>(c.assignments.begin(), c.assignments.end()).size(), 3u);

    Rng rng2(4);
    EXPECT_EQ(kmeans(x, 0, rng2).k, 1);
}

TEST(KMeans, EmptyInputIsAnError)
{
    Rng rng(1);
    EXPECT_THROW(kmeans(Eigen::MatrixXd(0, 3), 2, rng), DataError);
}

TEST(KMeans, InertiaTraceNeverIncreasesAndClustersAreNonEmpty)
{
    std::mt19937_64 gen(8);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::MatrixXd x(60, 4);
        for (Eigen::Index i = 0; i < x.size(); ++i)
            x(i) = g(gen);
        Rng rng(static_cast<std::uint64_t>(trial));
        const auto c = kmeans(x, 7, rng);
        ASSERT_FALSE(c.inertia_trace.empty());
        for (std::size_t i = 1; i < c.inertia_trace.size(); ++i)
            EXPECT_LE(c.inertia_trace[i], c.inertia_trace[i - 1] + 1e-9);
        EXPECT_NEAR(c.inertia_trace.back(), c.inertia, 1e-9);
        EXPECT_NEAR(c.inertia, partition_inertia(x, c.assignments, c.k), 1e-9);
        for (const auto& m : c.members())
            EXPECT_FALSE(m.empty());
    }
}

TEST(KMeans, SameSeedSameClustering)
{
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(40, 3);
    Rng a(12), b(12);
    const auto c1 = kmeans(x, 4, a);
    const auto c2 = kmeans(x, 4, b);
    EXPECT_EQ(c1.assignments, c2.assignments);
    EXPECT_EQ(c1.centroids, c2.centroids);
}

TEST(KMeans, ToySetsReachTheExhaustiveOptimum)
{
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> u(-5, 5);
    int good = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 3 + static_cast<int>(gen() % 6);
        const int k = 1 + static_cast<int>(gen() % 3);
        Eigen::MatrixXd x(n, 2);
        std::vector<std::vector<double>> pts;
        for (int i = 0; i < n; ++i) {
            x(i, 0) = u(gen);
            x(i, 1) = u(gen);
            pts.push_back({x(i, 0), x(i, 1)});
        }
        Rng rng(gen());
        const auto c = kmeans(x, k, rng);
        const double best = oracle::exhaustive_kmeans_optimum(pts, k);
        EXPECT_GE(c.inertia, best - 1e-9);
        good += c.inertia <= best * 1.05 + 1e-12;
    }
    EXPECT_GE(good, 36);
}
