#ifndef LOCALKERNELS_NEIGHBORS_HPP
#define LOCALKERNELS_NEIGHBORS_HPP

#include <Eigen/Core>
#include <algorithm>
#include <limits>
#include <vector>

#include "localkernels/errors.hpp"
#include "localkernels/parallel.hpp"
#include "localkernels/point_cloud.hpp"

namespace localkernels {

/// Indices of the k nearest neighbors (Euclidean, self excluded) of every row of
/// `points`, each neighbor list sorted by increasing distance. Ties break on index,
/// so the result is deterministic. Brute force; fine for the ambient dimensions and
/// data sizes this library targets.
inline Eigen::MatrixX<Index> knn_indices(const Eigen::MatrixXd& points, Index k) {
    const Index N = points.rows();
    if (k < 1) throw validation_error("neighbor count k must be positive");
    if (k >= N)
        throw validation_error("neighbor count k = " + std::to_string(k) +
                               " must be smaller than the point count N = " + std::to_string(N));
    Eigen::MatrixX<Index> out(N, k);
    parallel_for(0, N, [&](std::int64_t i) {
        std::vector<std::pair<double, Index>> dist;
        dist.reserve(static_cast<std::size_t>(N - 1));
        for (Index j = 0; j < N; ++j) {
            if (j == i) continue;
            dist.emplace_back((points.row(j) - points.row(i)).squaredNorm(), j);
        }
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        for (Index c = 0; c < k; ++c) out(i, c) = dist[static_cast<std::size_t>(c)].second;
    });
    return out;
}

/// Squared distance from each point to its nearest distinct neighbor.
inline Eigen::VectorXd nearest_neighbor_sq_distances(const Eigen::MatrixXd& points) {
    const Index N = points.rows();
    if (N < 2) throw validation_error("nearest-neighbor distances need at least 2 points");
    Eigen::VectorXd out(N);
    parallel_for(0, N, [&](std::int64_t i) {
        double best = std::numeric_limits<double>::infinity();
        for (Index j = 0; j < N; ++j) {
            if (j == i) continue;
            best = std::min(best, (points.row(j) - points.row(i)).squaredNorm());
        }
        out(i) = best;
    });
    return out;
}

} // namespace localkernels

#endif
