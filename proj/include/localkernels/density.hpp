#ifndef LOCALKERNELS_DENSITY_HPP
#define LOCALKERNELS_DENSITY_HPP

#include <Eigen/Core>
#include <cmath>

#include "localkernels/errors.hpp"
#include "localkernels/parallel.hpp"
#include "localkernels/point_cloud.hpp"

namespace localkernels {

/// A per-point kernel density estimate, normalized to unit mean. Only ratios (and the
/// power q^{-2/d}) matter downstream.
struct DensityEstimate {
    Eigen::VectorXd q;
    double epsilon_used = 0.0;
};

/// q(x_i) = sum_j exp(-||x_i - x_j||^2 / (4 eps)), including the self term, then
/// rescaled to unit mean. The sum runs over all pairs (matching the row sums of a
/// densely assembled Gaussian kernel matrix).
inline DensityEstimate estimate_density(const PointCloud& cloud, double epsilon) {
    cloud.validate();
    if (!(epsilon > 0.0)) throw validation_error("density bandwidth must be positive");
    const Index N = cloud.size();
    Eigen::VectorXd q(N);
    const double inv = 1.0 / (4.0 * epsilon);
    parallel_for(0, N, [&](std::int64_t i) {
        double acc = 0.0;
        for (Index j = 0; j < N; ++j)
            acc += std::exp(-(cloud.points.row(j) - cloud.points.row(i)).squaredNorm() * inv);
        q(i) = acc;
    });
    const double mean = q.mean();
    if (!(mean > 0.0)) throw numerical_error("density estimate collapsed to zero");
    DensityEstimate out;
    out.q = q / mean;
    out.epsilon_used = epsilon;
    return out;
}

} // namespace localkernels

#endif
