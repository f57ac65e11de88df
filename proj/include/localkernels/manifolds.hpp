#ifndef LOCALKERNELS_MANIFOLDS_HPP
#define LOCALKERNELS_MANIFOLDS_HPP

#include <cmath>
#include <numbers>
#include <random>

#include "localkernels/point_cloud.hpp"

namespace localkernels {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

namespace detail {

// Uniform grid over [0, 2*pi)^2, half-open so the seam is not double counted.
template <typename EmbedFn>
PointCloud torus_grid(Index grid, Index ambient_dim, EmbedFn&& embed) {
    if (grid < 2) throw validation_error("grid_size_per_axis must be at least 2");
    const Index N = grid * grid;
    PointCloud cloud;
    cloud.points.resize(N, ambient_dim);
    cloud.intrinsic.resize(N, 2);
    cloud.labels.reserve(static_cast<std::size_t>(N));
    Index row = 0;
    for (Index i = 0; i < grid; ++i) {
        const double theta = two_pi * static_cast<double>(i) / static_cast<double>(grid);
        for (Index j = 0; j < grid; ++j, ++row) {
            const double phi = two_pi * static_cast<double>(j) / static_cast<double>(grid);
            cloud.intrinsic(row, 0) = theta;
            cloud.intrinsic(row, 1) = phi;
            embed(theta, phi, cloud.points.row(row));
            cloud.labels.push_back(row);
        }
    }
    return cloud;
}

template <typename EmbedFn>
PointCloud torus_random(Index count, Index ambient_dim, std::uint64_t seed, EmbedFn&& embed) {
    if (count < 1) throw validation_error("count must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, two_pi);
    PointCloud cloud;
    cloud.points.resize(count, ambient_dim);
    cloud.intrinsic.resize(count, 2);
    cloud.labels.reserve(static_cast<std::size_t>(count));
    for (Index row = 0; row < count; ++row) {
        const double theta = angle(rng);
        const double phi = angle(rng);
        cloud.intrinsic(row, 0) = theta;
        cloud.intrinsic(row, 1) = phi;
        embed(theta, phi, cloud.points.row(row));
        cloud.labels.push_back(row);
    }
    return cloud;
}

inline void embed_flat_torus(double theta, double phi, Eigen::MatrixXd::RowXpr row) {
    row[0] = std::sin(theta);
    row[1] = std::cos(theta);
    row[2] = std::sin(phi);
    row[3] = std::cos(phi);
}

} // namespace detail

/// Flat 2-torus isometrically embedded in R^4:
/// (theta, phi) -> (sin theta, cos theta, sin phi, cos phi) on a uniform grid of [0,2pi)^2.
inline PointCloud generate_flat_torus_r4(Index grid_size_per_axis) {
    return detail::torus_grid(grid_size_per_axis, 4, detail::embed_flat_torus);
}

/// I.i.d. uniform samples of the flat torus in R^4 (seeded).
inline PointCloud sample_flat_torus_r4(Index count, std::uint64_t seed) {
    return detail::torus_random(count, 4, seed, detail::embed_flat_torus);
}

/// Torus of revolution in R^3 with the given major radius R > 1:
/// (theta, phi) -> ((R+sin theta) cos phi, (R+sin theta) sin phi, cos theta).
inline PointCloud generate_embedded_torus_r3(Index grid_size_per_axis, double major_radius) {
    if (!(major_radius > 1.0))
        throw validation_error("major_radius must exceed 1 for an injective embedding");
    return detail::torus_grid(grid_size_per_axis, 3, [major_radius](double t, double p, auto row) {
        row[0] = (major_radius + std::sin(t)) * std::cos(p);
        row[1] = (major_radius + std::sin(t)) * std::sin(p);
        row[2] = std::cos(t);
    });
}

inline PointCloud sample_embedded_torus_r3(Index count, double major_radius, std::uint64_t seed) {
    if (!(major_radius > 1.0))
        throw validation_error("major_radius must exceed 1 for an injective embedding");
    return detail::torus_random(count, 3, seed, [major_radius](double t, double p, auto row) {
        row[0] = (major_radius + std::sin(t)) * std::cos(p);
        row[1] = (major_radius + std::sin(t)) * std::sin(p);
        row[2] = std::cos(t);
    });
}

/// Ellipse (cos theta_j, a sin theta_j) with theta_j = 2 pi j / count for j = 1..count.
/// Points are equispaced in the angle, hence nonuniform on the ellipse for a != 1.
inline PointCloud generate_ellipse(Index count, double minor_axis) {
    if (count < 3) throw validation_error("ellipse needs at least 3 points");
    if (!(minor_axis > 0.0)) throw validation_error("minor_axis must be positive");
    PointCloud cloud;
    cloud.points.resize(count, 2);
    cloud.intrinsic.resize(count, 1);
    cloud.labels.reserve(static_cast<std::size_t>(count));
    for (Index j = 1; j <= count; ++j) {
        const double theta = two_pi * static_cast<double>(j) / static_cast<double>(count);
        cloud.points(j - 1, 0) = std::cos(theta);
        cloud.points(j - 1, 1) = minor_axis * std::sin(theta);
        cloud.intrinsic(j - 1, 0) = theta;
        cloud.labels.push_back(j - 1);
    }
    return cloud;
}

inline PointCloud sample_ellipse(Index count, double minor_axis, std::uint64_t seed) {
    if (count < 3) throw validation_error("ellipse needs at least 3 points");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, two_pi);
    PointCloud cloud;
    cloud.points.resize(count, 2);
    cloud.intrinsic.resize(count, 1);
    cloud.labels.reserve(static_cast<std::size_t>(count));
    for (Index j = 0; j < count; ++j) {
        const double theta = angle(rng);
        cloud.points(j, 0) = std::cos(theta);
        cloud.points(j, 1) = minor_axis * std::sin(theta);
        cloud.intrinsic(j, 0) = theta;
        cloud.labels.push_back(j);
    }
    return cloud;
}

/// The torus warp (x, y, z) -> (x, y, (2 + sin(3 angle)/2) z), where angle is the
/// full-plane polar angle atan2(y, x). Labels and intrinsic coordinates are preserved,
/// so the output stays in correspondence with the input.
inline PointCloud apply_torus_diffeomorphism(const PointCloud& cloud) {
    cloud.validate();
    if (cloud.ambient_dim() != 3)
        throw validation_error("torus diffeomorphism expects points in R^3");
    PointCloud out = cloud;
    for (Index i = 0; i < cloud.size(); ++i) {
        const double x = cloud.points(i, 0);
        const double y = cloud.points(i, 1);
        if (x == 0.0 && y == 0.0)
            throw validation_error("point " + std::to_string(i) +
                                   " lies on the z-axis; polar angle undefined");
        const double angle = std::atan2(y, x);
        out.points(i, 2) = (2.0 + 0.5 * std::sin(3.0 * angle)) * cloud.points(i, 2);
    }
    return out;
}

} // namespace localkernels

#endif
