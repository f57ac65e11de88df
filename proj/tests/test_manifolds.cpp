#include <catch2/catch.hpp>

#include <cmath>
#include <set>

#include "localkernels/manifolds.hpp"

using namespace localkernels;

TEST_CASE("flat torus grid in R^4") {
    PointCloud cloud = generate_flat_torus_r4(100);
    REQUIRE(cloud.size() == 10000);
    REQUIRE(cloud.ambient_dim() == 4);
    REQUIRE(cloud.has_intrinsic());

    // (theta, phi) = (0, 0) is the first grid point.
    REQUIRE(cloud.intrinsic.row(0).norm() == 0.0);
    REQUIRE(cloud.points(0, 0) == 0.0);
    REQUIRE(cloud.points(0, 1) == 1.0);
    REQUIRE(cloud.points(0, 2) == 0.0);
    REQUIRE(cloud.points(0, 3) == 1.0);

    for (Index i = 0; i < cloud.size(); i += 997)
        REQUIRE(cloud.points.row(i).norm() == Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("grid generators never duplicate intrinsic pairs") {
    PointCloud cloud = generate_flat_torus_r4(23);
    REQUIRE(cloud.size() == 23 * 23);
    std::set<std::pair<double, double>> seen;
    for (Index i = 0; i < cloud.size(); ++i)
        seen.insert({cloud.intrinsic(i, 0), cloud.intrinsic(i, 1)});
    REQUIRE(seen.size() == static_cast<std::size_t>(cloud.size()));

    PointCloud again = generate_flat_torus_r4(23);
    REQUIRE((again.points - cloud.points).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("torus of revolution in R^3") {
    PointCloud cloud = generate_embedded_torus_r3(100, std::sqrt(2.0));
    REQUIRE(cloud.size() == 10000);
    REQUIRE(cloud.ambient_dim() == 3);

    PointCloud big = generate_embedded_torus_r3(4, 2.0);
    // (0, 0) -> (2, 0, 1)
    REQUIRE(big.points(0, 0) == Approx(2.0));
    REQUIRE(big.points(0, 1) == Approx(0.0).margin(1e-15));
    REQUIRE(big.points(0, 2) == Approx(1.0));
    // (pi/2, 0) -> (3, 0, 0); with grid 4 that is row index 1*4+0.
    REQUIRE(big.intrinsic(4, 0) == Approx(M_PI / 2));
    REQUIRE(big.points(4, 0) == Approx(3.0));
    REQUIRE(big.points(4, 2) == Approx(0.0).margin(1e-15));

    REQUIRE_THROWS_AS(generate_embedded_torus_r3(10, 1.0), validation_error);
    REQUIRE_THROWS_AS(generate_embedded_torus_r3(10, 0.5), validation_error);
}

TEST_CASE("ellipse generator") {
    PointCloud cloud = generate_ellipse(4000, 1.0 / 6.0);
    REQUIRE(cloud.size() == 4000);
    REQUIRE(cloud.ambient_dim() == 2);

    // theta_j = 2 pi j / count; j = 1000 gives theta = pi/2 -> (0, 1/6).
    REQUIRE(cloud.intrinsic(999, 0) == Approx(M_PI / 2));
    REQUIRE(cloud.points(999, 0) == Approx(0.0).margin(1e-12));
    REQUIRE(cloud.points(999, 1) == Approx(1.0 / 6.0));

    PointCloud circle = generate_ellipse(64, 1.0);
    for (Index i = 0; i < circle.size(); ++i)
        REQUIRE(circle.points.row(i).norm() == Approx(1.0).epsilon(1e-12));

    REQUIRE_THROWS_AS(generate_ellipse(2, 0.5), validation_error);
}

TEST_CASE("torus diffeomorphism examples match direct substitution") {
    // Oracle: H(x, y, z) = (x, y, (2 + sin(3 atan2(y, x))/2) z) evaluated directly.
    auto oracle = [](double x, double y, double z) {
        return (2.0 + 0.5 * std::sin(3.0 * std::atan2(y, x))) * z;
    };
    PointCloud cloud;
    cloud.points.resize(3, 3);
    cloud.points << 2, 0, 1, 0, 2, 1, 1, 1, 0;
    PointCloud warped = apply_torus_diffeomorphism(cloud);

    REQUIRE(oracle(2, 0, 1) == Approx(2.0)); // angle 0, factor 2 + sin(0)/2 = 2
    REQUIRE(warped.points(0, 2) == Approx(2.0));
    REQUIRE(oracle(0, 2, 1) == Approx(1.5)); // angle pi/2, factor 2 - 1/2
    REQUIRE(warped.points(1, 2) == Approx(1.5));
    // z = 0 plane maps to itself pointwise.
    REQUIRE(warped.points(2, 2) == 0.0);
    REQUIRE((warped.points.leftCols(2) - cloud.points.leftCols(2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("torus diffeomorphism rejects the z-axis and preserves correspondence") {
    PointCloud cloud;
    cloud.points.resize(1, 3);
    cloud.points << 0, 0, 1;
    REQUIRE_THROWS_AS(apply_torus_diffeomorphism(cloud), validation_error);

    PointCloud torus = generate_embedded_torus_r3(15, 2.0);
    PointCloud warped = apply_torus_diffeomorphism(torus);
    REQUIRE(warped.labels == torus.labels);
    REQUIRE(warped.has_intrinsic());

    // Bijectivity on generated torus clouds: no two outputs collide.
    double min_gap = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < warped.size(); ++i)
        for (Index j = i + 1; j < warped.size(); ++j)
            min_gap = std::min(min_gap,
                               (warped.points.row(i) - warped.points.row(j)).norm());
    REQUIRE(min_gap > 1e-12);
}

TEST_CASE("random samplers are seeded and deterministic") {
    PointCloud a = sample_flat_torus_r4(200, 42);
    PointCloud b = sample_flat_torus_r4(200, 42);
    PointCloud c = sample_flat_torus_r4(200, 43);
    REQUIRE((a.points - b.points).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((a.points - c.points).cwiseAbs().maxCoeff() > 0.0);
    REQUIRE_NOTHROW(sample_embedded_torus_r3(50, 2.0, 1).validate());
    REQUIRE_NOTHROW(sample_ellipse(50, 0.5, 1).validate());
}
