#include "classy/cluster.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include <Eigen/QR>

#include "classy/error.hpp"

namespace classy {

std::vector<std::vector<int>> Clustering::members() const
{
    std::vector<std::vector<int>> out(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < assignments.size(); ++i)
        out[static_cast<std::size_t>(assignments[i])].push_back(static_cast<int>(i));
    return out;
}

namespace {

// Position of the first occurrence of each row's value.
std::vector<Eigen::Index> first_occurrence(const Eigen::MatrixXd& points)
{
    std::vector<Eigen::Index> order(static_cast<std::size_t>(points.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    auto less = [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index j = 0; j < points.cols(); ++j) {
            if (points(a, j) != points(b, j))
                return points(a, j) < points(b, j);
        }
        return false;
    };
    std::stable_sort(order.begin(), order.end(), less);
    std::vector<Eigen::Index> first(order.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        first[static_cast<std::size_t>(order[i])] = i > 0 && !less(order[i - 1], order[i])
                                                        ? first[static_cast<std::size_t>(order[i - 1])]
                                                        : order[i];
    return first;
}

} // namespace

Eigen::Index count_distinct_rows(const Eigen::MatrixXd& points)
{
    const auto first = first_occurrence(points);
    Eigen::Index distinct = 0;
    for (std::size_t i = 0; i < first.size(); ++i)
        distinct += first[i] == static_cast<Eigen::Index>(i);
    return distinct;
}

double partition_inertia(const Eigen::MatrixXd& points, const std::vector<int>& assignments, int k)
{
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    Eigen::VectorXd sizes = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        sums.row(assignments[static_cast<std::size_t>(i)]) += points.row(i);
        sizes[assignments[static_cast<std::size_t>(i)]] += 1;
    }
    double total = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const int c = assignments[static_cast<std::size_t>(i)];
        total += (points.row(i) - sums.row(c) / sizes[c]).squaredNorm();
    }
    return total;
}

namespace {

// Squared distances from every point to every centroid (n x k), clamped at 0.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& points, const Eigen::VectorXd& point_norms,
                                  const Eigen::MatrixXd& centroids)
{
    Eigen::MatrixXd d = (-2.0 * points) * centroids.transpose();
    d.colwise() += point_norms;
    d.rowwise() += centroids.rowwise().squaredNorm().transpose();
    return d.cwiseMax(0.0);
}

double exact_inertia(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids, const std::vector<int>& assign)
{
    double total = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        total += (points.row(i) - centroids.row(assign[static_cast<std::size_t>(i)])).squaredNorm();
    return total;
}

Eigen::MatrixXd plus_plus_seeds(const Eigen::MatrixXd& points, const Eigen::VectorXd& norms, int k, Rng& rng)
{
    const Eigen::Index n = points.rows();
    Eigen::MatrixXd centroids(k, points.cols());
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    centroids.row(0) = points.row(first(rng));

    Eigen::VectorXd nearest = squared_distances(points, norms, centroids.topRows(1)).col(0);
    for (int c = 1; c < k; ++c) {
        const double total = nearest.sum();
        Eigen::Index chosen = 0;
        if (total > 0.0) {
            double target = std::uniform_real_distribution<double>(0.0, total)(rng);
            chosen = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (nearest[i] <= 0.0)
                    continue;
                target -= nearest[i];
                if (target < 0.0) {
                    chosen = i;
                    break;
                }
            }
            // Guard against rounding landing on an already-chosen point.
            while (nearest[chosen] <= 0.0 && chosen > 0)
                --chosen;
        }
        centroids.row(c) = points.row(chosen);
        nearest = nearest.cwiseMin(squared_distances(points, norms, centroids.row(c)).col(0));
    }
    return centroids;
}

Clustering lloyd(const Eigen::MatrixXd& points, const Eigen::VectorXd& norms, int k, Rng& rng,
                 const KMeansOptions& options)
{
    const Eigen::Index n = points.rows();
    Clustering out;
    out.k = k;
    out.centroids = plus_plus_seeds(points, norms, k, rng);
    out.assignments.assign(static_cast<std::size_t>(n), -1);

    for (int iter = 0; iter < std::max(1, options.max_iterations); ++iter) {
        const Eigen::MatrixXd d = squared_distances(points, norms, out.centroids);
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index best = 0;
            d.row(i).minCoeff(&best);  // first minimum on ties
            if (out.assignments[static_cast<std::size_t>(i)] != static_cast<int>(best)) {
                out.assignments[static_cast<std::size_t>(i)] = static_cast<int>(best);
                changed = true;
            }
        }
        out.inertia_trace.push_back(exact_inertia(points, out.centroids, out.assignments));
        out.iterations = iter + 1;

        // Update step, reseeding empty clusters from the worst-served point.
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
        Eigen::VectorXd sizes = Eigen::VectorXd::Zero(k);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(out.assignments[static_cast<std::size_t>(i)]) += points.row(i);
            sizes[out.assignments[static_cast<std::size_t>(i)]] += 1;
        }
        for (int c = 0; c < k; ++c) {
            if (sizes[c] > 0)
                continue;
            Eigen::Index far = 0;
            double far_d = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const int owner = out.assignments[static_cast<std::size_t>(i)];
                if (sizes[owner] <= 1)
                    continue;
                const double dist = (points.row(i) - sums.row(owner) / sizes[owner]).squaredNorm();
                if (dist > far_d) {
                    far_d = dist;
                    far = i;
                }
            }
            const int owner = out.assignments[static_cast<std::size_t>(far)];
            sums.row(owner) -= points.row(far);
            sizes[owner] -= 1;
            sums.row(c) = points.row(far);
            sizes[c] = 1;
            out.assignments[static_cast<std::size_t>(far)] = c;
            changed = true;
        }
        for (int c = 0; c < k; ++c)
            out.centroids.row(c) = sums.row(c) / sizes[c];

        if (!changed)
            break;
    }
    out.inertia = exact_inertia(points, out.centroids, out.assignments);
    out.inertia_trace.push_back(out.inertia);
    return out;
}

} // namespace

Eigen::MatrixXd span_coordinates(const Eigen::MatrixXd& points)
{
    if (points.cols() <= points.rows())
        return points;
    // Factor the distinct rows only, so equal rows stay exactly equal.
    const auto first = first_occurrence(points);
    std::vector<Eigen::Index> unique;
    std::vector<Eigen::Index> slot(first.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        if (first[i] == static_cast<Eigen::Index>(i)) {
            slot[i] = static_cast<Eigen::Index>(unique.size());
            unique.push_back(static_cast<Eigen::Index>(i));
        } else {
            slot[i] = slot[static_cast<std::size_t>(first[i])];
        }
    }
    const Eigen::MatrixXd distinct = points(unique, Eigen::all);
    // distinct^T = Q R with orthonormal Q, so the rows of R^T keep every distance.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(distinct.transpose());
    const auto u = static_cast<Eigen::Index>(unique.size());
    const Eigen::MatrixXd r = qr.matrixQR().topRows(u).triangularView<Eigen::Upper>();
    Eigen::MatrixXd out(points.rows(), u);
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        out.row(i) = r.col(slot[static_cast<std::size_t>(i)]).transpose();
    return out;
}

Clustering kmeans(const Eigen::MatrixXd& points, int k, Rng& rng, const KMeansOptions& options)
{
    if (points.rows() == 0)
        throw DataError(DataErrorKind::empty, "kmeans: no vectors to cluster");
    k = static_cast<int>(std::clamp<Eigen::Index>(k, 1, count_distinct_rows(points)));

    const Eigen::MatrixXd coords = span_coordinates(points);
    const Eigen::VectorXd norms = coords.rowwise().squaredNorm();
    Clustering out = lloyd(coords, norms, k, rng, options);
    for (int run = 1; run < options.n_init && k > 1; ++run) {
        Clustering next = lloyd(coords, norms, k, rng, options);
        if (next.inertia < out.inertia)
            out = std::move(next);
    }
    if (coords.cols() != points.cols()) {
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
        Eigen::VectorXd sizes = Eigen::VectorXd::Zero(k);
        for (Eigen::Index i = 0; i < points.rows(); ++i) {
            sums.row(out.assignments[static_cast<std::size_t>(i)]) += points.row(i);
            sizes[out.assignments[static_cast<std::size_t>(i)]] += 1;
        }
        out.centroids = sums.array().colwise() / sizes.array();
    }
    out.model_ids.resize(static_cast<std::size_t>(points.rows()));
    std::iota(out.model_ids.begin(), out.model_ids.end(), 0);
    return out;
}

} // namespace classy
