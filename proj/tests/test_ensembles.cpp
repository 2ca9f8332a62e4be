#include <algorithm>
#include <random>
#include <set>
#include <thread>

#include <gtest/gtest.h>

#include "classy/ensembles.hpp"
#include "classy/error.hpp"
#include "classy/metrics.hpp"
#include "oracles.hpp"

using namespace classy;

namespace {

ModelRecord record(int id, double score, std::vector<double> per_class)
{
    ModelRecord r;
    r.model_id = id;
    r.validation_score = score;
    r.per_class_accuracy = Eigen::Map<Eigen::VectorXd>(per_class.data(), static_cast<Eigen::Index>(per_class.size()));
    r.val_proba = Eigen::MatrixXd::Constant(1, r.per_class_accuracy.size(), 1.0 / r.per_class_accuracy.size());
    r.val_pred = Labels::Zero(1);
    return r;
}

// Records whose validation predictions are right exactly where `correct` says so
// (two classes; a wrong prediction is the other class).
std::vector<ModelRecord> correctness_records(const std::vector<std::vector<bool>>& correct, const Labels& truth)
{
    std::vector<ModelRecord> out;
    for (std::size_t m = 0; m < correct.size(); ++m) {
        Eigen::MatrixXd p(truth.size(), 2);
        for (Eigen::Index i = 0; i < truth.size(); ++i) {
            const int label = correct[m][static_cast<std::size_t>(i)] ? truth[i] : 1 - truth[i];
            p(i, label) = 0.9;
            p(i, 1 - label) = 0.1;
        }
        out.push_back(make_record(static_cast<int>(m), p, truth, 2));
    }
    return out;
}

Clustering manual_clustering(std::vector<int> ids, std::vector<int> assignments, int k)
{
    Clustering c;
    c.k = k;
    c.model_ids = std::move(ids);
    c.assignments = std::move(assignments);
    return c;
}

} // namespace

TEST(EnsemblePredict, WorkedClassyExample)
{
    Ensemble e;
    e.method = Method::classy;
    e.members = {0, 1};
    e.weights = {0.8, 0.6};
    e.voters.resize(2, 2);
    e.voters << 1, 0, 0, 1;
    Eigen::MatrixXd pa(1, 2), pb(1, 2);
    pa << 0.6, 0.4;
    pb << 0.3, 0.7;
    ProbaTable table;
    table.add(0, pa);
    table.add(1, pb);
    const Eigen::MatrixXd s = ensemble_scores(e, table.provider());
    EXPECT_NEAR(s(0, 0), 0.48, 1e-15);
    EXPECT_NEAR(s(0, 1), 0.42, 1e-15);
    EXPECT_EQ(ensemble_predict(e, table.provider())[0], 0);
}

TEST(EnsemblePredict, SingleAllOnesMemberEqualsItsArgmax)
{
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    Eigen::MatrixXd p(30, 4);
    for (Eigen::Index i = 0; i < p.size(); ++i)
        p(i) = u(gen);
    p = p.array().colwise() / p.rowwise().sum().array();
    Ensemble e;
    e.method = Method::classy;
    e.members = {7};
    e.weights = {0.37};
    e.voters = Eigen::MatrixXi::Ones(1, 4);
    ProbaTable t;
    t.add(7, p);
    EXPECT_EQ(ensemble_predict(e, t.provider()), weighted_argmax(p));
}

TEST(EnsemblePredict, MatchesTripleLoopOracle)
{
    std::mt19937_64 gen(2023);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const int members = 1 + static_cast<int>(gen() % 6);
        const int classes = 2 + static_cast<int>(gen() % 3);
        const int samples = 1 + static_cast<int>(gen() % 8);
        Ensemble e;
        e.method = trial % 2 ? Method::classy : Method::classy_cluster;
        e.voters.resize(members, classes);
        std::vector<Eigen::MatrixXd> proba;
        std::vector<std::vector<int>> vo(static_cast<std::size_t>(members));
        std::vector<std::vector<std::vector<double>>> po(static_cast<std::size_t>(members));
        for (int m = 0; m < members; ++m) {
            e.members.push_back(m * 3 + 1);
            // coarse weights and probabilities make exact ties likely
            e.weights.push_back(static_cast<double>(gen() % 5) / 4.0);
            Eigen::MatrixXd p(samples, classes);
            for (Eigen::Index i = 0; i < p.size(); ++i)
                p(i) = trial % 3 == 0 ? static_cast<double>(gen() % 3) : u(gen);
            for (int i = 0; i < samples; ++i) {
                if (p.row(i).sum() == 0.0)
                    p.row(i).setOnes();
                p.row(i) /= p.row(i).sum();
            }
            proba.push_back(p);
            for (int c = 0; c < classes; ++c) {
                e.voters(m, c) = static_cast<int>(gen() % 2);
                vo[static_cast<std::size_t>(m)].push_back(e.voters(m, c));
            }
            for (int i = 0; i < samples; ++i) {
                std::vector<double> row;
                for (int c = 0; c < classes; ++c)
                    row.push_back(p(i, c));
                po[static_cast<std::size_t>(m)].push_back(row);
            }
        }
        ProbaTable t;
        for (int m = 0; m < members; ++m)
            t.add(e.members[static_cast<std::size_t>(m)], proba[static_cast<std::size_t>(m)]);
        const auto got = ensemble_predict(e, t.provider());
        const auto want = oracle::classy_predict(e.weights, vo, po);
        for (int i = 0; i < samples; ++i)
            ASSERT_EQ(got[i], want[static_cast<std::size_t>(i)]) << "trial " << trial;
    }
}

TEST(EnsemblePredict, MissingMemberAndShapeErrors)
{
    Ensemble e;
    e.method = Method::order;
    e.members = {0, 5};
    e.weights = {1, 1};
    e.voters = Eigen::MatrixXi::Ones(2, 2);
    Eigen::MatrixXd p = Eigen::MatrixXd::Constant(3, 2, 0.5);
    Eigen::MatrixXd q = Eigen::MatrixXd::Constant(4, 2, 0.5);
    ProbaTable t;
    t.add(0, p);
    EXPECT_THROW(ensemble_predict(e, t.provider()), DataError);
    t.add(5, q);
    EXPECT_THROW(ensemble_predict(e, t.provider()), DataError);
}

TEST(BuildOrder, TopTwoByScore)
{
    const std::vector<ModelRecord> r{record(0, 0.9, {0.9, 0.9}), record(1, 0.7, {0.7, 0.7}),
                                     record(2, 0.8, {0.8, 0.8})};
    const auto e = build_order(r, 2);
    EXPECT_EQ(std::set<int>(e.members.begin(), e.members.end()), (std::set<int>{0, 2}));
    EXPECT_EQ(e.aggregation(), Aggregation::majority_vote);
    EXPECT_EQ(build_order(r, 99).size(), 3u);
    EXPECT_EQ(build_order(r, 0).members, std::vector<int>{0});
    EXPECT_THROW(build_order({}, 1), DataError);
}

TEST(BuildOrder, TiesPreferLowerId)
{
    const std::vector<ModelRecord> r{record(4, 0.5, {0.5, 0.5}), record(2, 0.5, {0.5, 0.5}),
                                     record(9, 0.5, {0.5, 0.5})};
    EXPECT_EQ(build_order(r, 1).members, std::vector<int>{2});
}

TEST(BuildClassy, TwoSpecialists)
{
    const std::vector<ModelRecord> r{record(0, 0.5, {0.9, 0.1}), record(1, 0.5, {0.1, 0.9})};
    const auto e = build_classy(r, 2, 1);
    EXPECT_EQ(e.members, (std::vector<int>{0, 1}));
    EXPECT_EQ(e.voters, (Eigen::MatrixXi(2, 2) << 1, 0, 0, 1).finished());
    EXPECT_EQ(e.aggregation(), Aggregation::weighted_proba);
}

TEST(BuildClassy, FullTopkIsAScoreWeightedSoftVote)
{
    std::vector<ModelRecord> r;
    for (int m = 0; m < 5; ++m)
        r.push_back(record(m, 0.1 * (m + 1), {0.2 * m, 1 - 0.2 * m, 0.5}));
    const auto e = build_classy(r, 3, 5);
    ASSERT_EQ(e.size(), 5u);
    EXPECT_TRUE((e.voters.array() == 1).all());
    for (std::size_t m = 0; m < 5; ++m)
        EXPECT_DOUBLE_EQ(e.weights[m], r[static_cast<std::size_t>(e.members[m])].validation_score);
}

TEST(BuildClassy, MatchesBruteForcePerClassSelection)
{
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 1 + static_cast<int>(gen() % 8);
        const int classes = 2 + static_cast<int>(gen() % 3);
        const int topk = 1 + static_cast<int>(gen() % 4);
        std::vector<ModelRecord> r;
        for (int m = 0; m < n; ++m) {
            std::vector<double> pc;
            for (int c = 0; c < classes; ++c)
                pc.push_back(static_cast<double>(gen() % 4) / 4.0);
            r.push_back(record(m, static_cast<double>(gen() % 3) / 3.0, pc));
        }
        const auto e = build_classy(r, classes, topk);
        // a model votes for c iff fewer than topk models beat it under the ranking
        for (int m = 0; m < n; ++m) {
            for (int c = 0; c < classes; ++c) {
                int better = 0;
                for (int o = 0; o < n; ++o) {
                    const auto& a = r[static_cast<std::size_t>(o)];
                    const auto& b = r[static_cast<std::size_t>(m)];
                    better += a.per_class_accuracy[c] > b.per_class_accuracy[c] ||
                              (a.per_class_accuracy[c] == b.per_class_accuracy[c] &&
                               (a.validation_score > b.validation_score ||
                                (a.validation_score == b.validation_score && o < m)));
                }
                const bool expect = better < std::min(topk, n);
                const auto it = std::find(e.members.begin(), e.members.end(), m);
                const bool got = it != e.members.end() &&
                                 e.voters(static_cast<Eigen::Index>(it - e.members.begin()), c) == 1;
                ASSERT_EQ(got, expect) << "trial " << trial << " model " << m << " class " << c;
            }
        }
        for (std::size_t i = 0; i < e.size(); ++i)
            EXPECT_GT(e.voters.row(static_cast<Eigen::Index>(i)).sum(), 0);
    }
}

TEST(BuildCluster, BestOfEachCluster)
{
    const std::vector<ModelRecord> r{record(0, 0.6, {0.6, 0.6}), record(1, 0.9, {0.9, 0.9}),
                                     record(2, 0.8, {0.8, 0.8}), record(3, 0.7, {0.7, 0.7})};
    const auto e = build_cluster(r, manual_clustering({0, 1, 2, 3}, {0, 0, 1, 1}, 2));
    EXPECT_EQ(std::set<int>(e.members.begin(), e.members.end()), (std::set<int>{1, 2}));
    EXPECT_EQ(build_cluster(r, manual_clustering({0, 1, 2, 3}, {0, 0, 0, 0}, 1)).members, std::vector<int>{1});
    EXPECT_EQ(build_cluster(r, manual_clustering({0, 1, 2, 3}, {0, 1, 2, 3}, 4)).size(), 4u);
    EXPECT_THROW(build_cluster(r, manual_clustering({0, 1, 2, 8}, {0, 0, 1, 1}, 2)), DataError);
}

TEST(BuildClassyCluster, SingleClusterEqualsClassy)
{
    std::mt19937_64 gen(9);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<ModelRecord> r;
        std::vector<int> ids;
        for (int m = 0; m < 7; ++m) {
            r.push_back(record(m, static_cast<double>(gen() % 5) / 5.0,
                               {static_cast<double>(gen() % 5) / 5.0, static_cast<double>(gen() % 5) / 5.0,
                                static_cast<double>(gen() % 5) / 5.0}));
            ids.push_back(m);
        }
        const int topk = 1 + trial % 4;
        const auto a = build_classy(r, 3, topk);
        const auto b = build_classy_cluster(r, manual_clustering(ids, std::vector<int>(7, 0), 1), 3, topk);
        EXPECT_EQ(a.members, b.members);
        EXPECT_EQ(a.voters, b.voters);
        EXPECT_EQ(a.weights, b.weights);
    }
}

TEST(BuildClassyCluster, SpecialistsInSeparateClusters)
{
    // cluster 0: A strong on class 0, B better than A on class 1;
    // cluster 1: C strong on class 1, D better than C on class 0
    const std::vector<ModelRecord> r{record(0, 0.6, {0.9, 0.3}), record(1, 0.4, {0.5, 0.6}),
                                     record(2, 0.6, {0.3, 0.9}), record(3, 0.4, {0.6, 0.5})};
    const auto e = build_classy_cluster(r, manual_clustering({0, 1, 2, 3}, {0, 0, 1, 1}, 2), 2, 1);
    // within cluster 0: class 0 -> A, class 1 -> B; within cluster 1: class 0 -> D, class 1 -> C
    ASSERT_EQ(e.members, (std::vector<int>{0, 1, 3, 2}));
    EXPECT_EQ(e.voters, (Eigen::MatrixXi(4, 2) << 1, 0, 0, 1, 1, 0, 0, 1).finished());

    const auto all = build_classy_cluster(r, manual_clustering({0, 1, 2, 3}, {0, 0, 1, 1}, 2), 2, 10);
    EXPECT_EQ(all.size(), 4u);
    EXPECT_TRUE((all.voters.array() == 1).all());
}

TEST(Lexigarden, DominantModelFillsTheGarden)
{
    const Labels truth = (Labels(5) << 0, 1, 1, 0, 1).finished();
    const auto r = correctness_records({{false, false, false, false, false},
                                        {true, true, true, true, true},
                                        {false, false, false, false, false}},
                                       truth);
    Rng rng(4);
    const auto e = build_lexigarden(r, truth, 6, rng);
    EXPECT_EQ(e.members, std::vector<int>(6, 1));
}

TEST(Lexigarden, IndistinguishablePoolPredictsTheSame)
{
    const Labels truth = (Labels(4) << 0, 1, 1, 0).finished();
    const auto r = correctness_records({{true, false, true, true}, {true, false, true, true}}, truth);
    Rng rng(1);
    const auto e = build_lexigarden(r, truth, 1, rng);
    ASSERT_EQ(e.size(), 1u);
    const auto table = ProbaTable::validation(r);
    EXPECT_EQ(ensemble_predict(e, table.provider()), r[0].val_pred);
}

TEST(Lexigarden, SurvivorsMatchHandFilterForEveryOrder)
{
    const std::vector<std::vector<bool>> correct{
        {true, false, true, false},
        {true, true, false, false},
        {false, true, true, true},
    };
    const Labels truth = (Labels(4) << 0, 1, 0, 1).finished();
    const auto r = correctness_records(correct, truth);
    std::vector<int> order{0, 1, 2, 3};
    int orders = 0;
    do {
        const auto got = lexicase_survivors(r, truth, std::vector<Eigen::Index>(order.begin(), order.end()));
        const auto want = oracle::lexicase(correct, order);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i)
            EXPECT_EQ(static_cast<int>(got[i]), want[i]);
        ++orders;
    } while (std::next_permutation(order.begin(), order.end()));
    EXPECT_EQ(orders, 24);
}

TEST(Lexigarden, SeededAndAllMembersComeFromThePool)
{
    std::mt19937_64 gen(6);
    const Labels truth = (Labels(10) << 0, 1, 0, 1, 0, 1, 0, 1, 0, 1).finished();
    std::vector<std::vector<bool>> correct(8, std::vector<bool>(10));
    for (auto& row : correct)
        for (std::size_t i = 0; i < row.size(); ++i)
            row[i] = gen() % 3 != 0;
    const auto r = correctness_records(correct, truth);
    Rng a(10), b(10);
    const auto e1 = build_lexigarden(r, truth, 20, a);
    const auto e2 = build_lexigarden(r, truth, 20, b);
    EXPECT_EQ(e1.members, e2.members);
    EXPECT_EQ(e1.size(), 20u);
    for (int id : e1.members)
        EXPECT_TRUE(id >= 0 && id < 8);
}

TEST(ClusterModels, OutputVectorsAndIds)
{
    const Labels truth = (Labels(3) << 0, 1, 1).finished();
    auto r = correctness_records({{true, true, true}, {true, true, true}, {false, false, false}}, truth);
    r[2].model_id = 42;
    const Eigen::MatrixXd v = output_vectors(r);
    EXPECT_EQ(v.rows(), 3);
    EXPECT_EQ(v.cols(), 6);
    EXPECT_DOUBLE_EQ(v(0, 1), r[0].val_proba(0, 1));
    const Eigen::MatrixXd h = output_vectors(r, OutputKind::one_hot);
    EXPECT_DOUBLE_EQ(h(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(h(0, 1), 0.0);

    Rng rng(2);
    const auto c = cluster_models(r, 2, rng);
    EXPECT_EQ(c.model_ids, (std::vector<int>{0, 1, 42}));
    EXPECT_EQ(c.assignments[0], c.assignments[1]);
    EXPECT_NE(c.assignments[0], c.assignments[2]);
    const auto e = build_cluster(r, c);
    EXPECT_EQ(e.size(), 2u);
}

TEST(Ensembles, ConcurrentBuildsMatchSequential)
{
    std::mt19937_64 gen(1);
    std::vector<ModelRecord> r;
    const Labels truth = Labels::NullaryExpr(40, [&] { return static_cast<int>(gen() % 3); });
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int m = 0; m < 30; ++m) {
        Eigen::MatrixXd p = Eigen::MatrixXd::NullaryExpr(40, 3, [&] { return u(gen); });
        p = p.array().colwise() / p.rowwise().sum().array();
        r.push_back(make_record(m, p, truth, 3));
    }
    const auto table = ProbaTable::validation(r);
    std::vector<Labels> seq, par(8);
    for (int k = 1; k <= 8; ++k)
        seq.push_back(ensemble_predict(build_classy(r, 3, k), table.provider()));
    {
        std::vector<std::jthread> threads;
        for (int k = 1; k <= 8; ++k)
            threads.emplace_back([&, k] { par[static_cast<std::size_t>(k - 1)] = ensemble_predict(build_classy(r, 3, k), table.provider()); });
    }
    EXPECT_EQ(seq, par);
}
