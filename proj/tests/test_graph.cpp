#include <catch2/catch.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "localkernels/analytic.hpp"
#include "localkernels/generators.hpp"
#include "localkernels/manifolds.hpp"
#include "localkernels/metrics.hpp"

using namespace localkernels;

namespace {

PointCloud collinear_three() {
    PointCloud c;
    c.points.resize(3, 1);
    c.points << 0.0, 1.0, 2.5;
    return c;
}

SparseKernelMatrix manual_matrix(const Eigen::MatrixXd& dense, double eps, bool symmetric) {
    SparseKernelMatrix out;
    out.weights = dense.sparseView(1.0, -1.0); // keep all entries
    out.weights.makeCompressed();
    out.epsilon = eps;
    out.symmetric = symmetric;
    return out;
}

} // namespace

TEST_CASE("assemble evaluates exact pairwise kernels") {
    const double eps = 0.8;
    PointCloud cloud = collinear_three();
    auto k = LocalKernel::radial(gaussian_shape(), eps);
    SparseKernelMatrix K = assemble(cloud, k, Sparsity::dense());

    // Scalar oracle per pair: exp(-|xi - xj|^2 / (4 eps)).
    Eigen::MatrixXd dense(K.weights);
    for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 3; ++j) {
            const double d2 = std::pow(cloud.points(i, 0) - cloud.points(j, 0), 2.0);
            REQUIRE(dense(i, j) == Approx(std::exp(-d2 / (4 * eps))).epsilon(1e-14));
        }
    REQUIRE(K.symmetric);
    Eigen::MatrixXd diff = dense - dense.transpose();
    REQUIRE(diff.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("knn with k = N-1 equals dense assembly") {
    PointCloud cloud = generate_ellipse(40, 0.5);
    auto k = LocalKernel::radial(gaussian_shape(), 0.05);
    Eigen::MatrixXd dense(assemble(cloud, k, Sparsity::dense()).weights);
    Eigen::MatrixXd sparse(assemble(cloud, k, Sparsity::knn(39)).weights);
    REQUIRE((dense - sparse).cwiseAbs().maxCoeff() == 0.0);

    REQUIRE_THROWS_AS(assemble(cloud, k, Sparsity::knn(40)), validation_error);
}

TEST_CASE("knn pattern is union-symmetrized with exact evaluations") {
    // An asymmetric kernel on an uneven cloud: pattern must still be symmetric.
    PointCloud cloud;
    cloud.points.resize(5, 1);
    cloud.points << 0.0, 0.1, 0.25, 3.0, 3.05;
    std::vector<Eigen::MatrixXd> maps(5, Eigen::MatrixXd::Identity(1, 1));
    maps[3](0, 0) = 2.0;
    auto k = LocalKernel::jacobian(maps, 0.5);
    SparseKernelMatrix K = assemble(cloud, k, Sparsity::knn(2));
    Eigen::MatrixXd dense(K.weights);
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 5; ++j) {
            const bool present = dense(i, j) != 0.0;
            const bool mirrored = dense(j, i) != 0.0;
            REQUIRE(present == mirrored);
            if (present)
                REQUIRE(dense(i, j) ==
                        Approx(k.eval(i, j, cloud.points.row(i), cloud.points.row(j))));
        }
    REQUIRE_FALSE(K.symmetric);
}

TEST_CASE("right normalization") {
    const double eps = 0.8;
    SparseKernelMatrix K = assemble(collinear_three(), LocalKernel::radial(gaussian_shape(), eps),
                                    Sparsity::dense());

    SECTION("alpha = 0 returns the input unchanged") {
        SparseKernelMatrix R = right_normalize(K, 0.0);
        REQUIRE((Eigen::MatrixXd(R.weights) - Eigen::MatrixXd(K.weights)).cwiseAbs().maxCoeff() ==
                0.0);
    }
    SECTION("constant row sums scale all columns equally") {
        PointCloud circle = generate_ellipse(24, 1.0);
        SparseKernelMatrix J =
            assemble(circle, LocalKernel::radial(gaussian_shape(), 0.2), Sparsity::dense());
        Eigen::VectorXd sums = J.row_sums();
        const double s = sums(0);
        REQUIRE((sums.array() - s).abs().maxCoeff() < 1e-10);
        Eigen::MatrixXd scaled(right_normalize(J, 1.0).weights);
        REQUIRE((scaled * s - Eigen::MatrixXd(J.weights)).cwiseAbs().maxCoeff() < 1e-10);
    }
    SECTION("three-point hand oracle at alpha = 1") {
        Eigen::MatrixXd dense(K.weights);
        Eigen::VectorXd q = dense.rowwise().sum();
        Eigen::MatrixXd expected = dense * q.cwiseInverse().asDiagonal();
        Eigen::MatrixXd got(right_normalize(K, 1.0).weights);
        REQUIRE((got - expected).cwiseAbs().maxCoeff() < 1e-15);
    }
    SECTION("isolated point raises a named error") {
        Eigen::MatrixXd W = Eigen::MatrixXd::Zero(3, 3);
        W(0, 0) = 1;
        W(0, 1) = 1;
        W(1, 0) = 1;
        W(1, 1) = 1;
        // row 2 all zero (isolated); diagonal entry stored explicitly as zero
        SparseKernelMatrix M = manual_matrix(W, 1.0, false);
        try {
            right_normalize(M, 1.0);
            FAIL("expected validation_error");
        } catch (const validation_error& e) {
            REQUIRE(std::string(e.what()).find("2") != std::string::npos);
        }
    }
}

TEST_CASE("left normalization is row-stochastic and idempotent") {
    SparseKernelMatrix K = assemble(generate_ellipse(30, 0.4),
                                    LocalKernel::radial(gaussian_shape(), 0.1), Sparsity::knn(8));
    SparseKernelMatrix P = left_normalize(K);
    Eigen::VectorXd sums = P.row_sums();
    REQUIRE((sums.array() - 1.0).abs().maxCoeff() < 1e-12);

    SparseKernelMatrix PP = left_normalize(P);
    REQUIRE((Eigen::MatrixXd(PP.weights) - Eigen::MatrixXd(P.weights)).cwiseAbs().maxCoeff() <
            1e-14);

    Eigen::MatrixXd dense(Eigen::MatrixXd(K.weights));
    Eigen::MatrixXd expected = dense.row(1) / dense.row(1).sum();
    REQUIRE((Eigen::MatrixXd(P.weights).row(1) - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("epsilon heuristic") {
    SECTION("unit-spaced 1-D grid") {
        PointCloud c;
        c.points.resize(10, 1);
        for (Index i = 0; i < 10; ++i) c.points(i, 0) = static_cast<double>(i);
        REQUIRE(epsilon_heuristic(c) == Approx(1.0));
    }
    SECTION("two points at distance 2") {
        PointCloud c;
        c.points.resize(2, 1);
        c.points << 0.0, 2.0;
        REQUIRE(epsilon_heuristic(c) == Approx(4.0));
    }
    SECTION("flat torus value matches an independent all-pairs oracle") {
        PointCloud c = generate_flat_torus_r4(17);
        double acc = 0.0;
        for (Index i = 0; i < c.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (Index j = 0; j < c.size(); ++j) {
                if (i == j) continue;
                best = std::min(best, (c.points.row(i) - c.points.row(j)).squaredNorm());
            }
            acc += best;
        }
        REQUIRE(epsilon_heuristic(c) == Approx(acc / c.size()).epsilon(1e-12));
    }
    SECTION("duplicates are excluded from the mean") {
        PointCloud c;
        c.points.resize(4, 1);
        c.points << 0.0, 0.0, 1.0, 3.0;
        // duplicates at distance 0; the remaining nearest-neighbor squared distances
        // are 1 (for the point at 1) and 4 (for the point at 3)
        REQUIRE(epsilon_heuristic(c) == Approx((1.0 + 4.0) / 2.0));
    }
}

TEST_CASE("generator normalizations annihilate constants") {
    PointCloud cloud = generate_embedded_torus_r3(12, 2.0);
    const double eps = epsilon_heuristic(cloud);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(cloud.size());

    SparseKernelMatrix K =
        assemble(cloud, LocalKernel::radial(gaussian_shape(), eps), Sparsity::knn(24));
    REQUIRE(local_kernel_generator(K, eps).apply(ones).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE(intrinsic_laplacian(K, eps).apply(ones).cwiseAbs().maxCoeff() < 1e-10);
    GeneratorMatrix dm = diffusion_maps_generator(
        cloud, LocalKernel::radial(gaussian_shape(), eps), 0.5, Sparsity::knn(24));
    REQUIRE(dm.apply(ones).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE(subtraction_generator(K, ones, eps).apply(ones).cwiseAbs().maxCoeff() < 1e-12);

    // Rows of (eps L + I) sum to one for the kolmogorov builders.
    Eigen::VectorXd row_check = eps * dm.op * ones + ones;
    REQUIRE((row_check.array() - 1.0).abs().maxCoeff() < 1e-10);
}

TEST_CASE("local kernel generator equals diffusion maps at alpha zero") {
    PointCloud cloud = generate_ellipse(60, 0.3);
    const double eps = epsilon_heuristic(cloud);
    auto radial = LocalKernel::radial(gaussian_shape(), eps);
    SparseKernelMatrix J = assemble(cloud, radial, Sparsity::knn(12));
    GeneratorMatrix a = local_kernel_generator(J, eps);
    GeneratorMatrix b = diffusion_maps_generator(cloud, radial, 0.0, Sparsity::knn(12));
    REQUIRE((Eigen::MatrixXd(a.op) - Eigen::MatrixXd(b.op)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("kernel scaling leaves normalized generators unchanged") {
    PointCloud cloud = generate_ellipse(50, 0.4);
    const double eps = epsilon_heuristic(cloud);
    RadialShape scaled{[](double u) { return 7.25 * std::exp(-0.25 * u); }, "scaled"};
    auto base = LocalKernel::radial(gaussian_shape(), eps);
    auto bigger = LocalKernel::radial(scaled, eps);

    GeneratorMatrix g1 = diffusion_maps_generator(cloud, base, 1.0, Sparsity::knn(12));
    GeneratorMatrix g2 = diffusion_maps_generator(cloud, bigger, 1.0, Sparsity::knn(12));
    REQUIRE((Eigen::MatrixXd(g1.op) - Eigen::MatrixXd(g2.op)).cwiseAbs().maxCoeff() < 1e-12);

    GeneratorMatrix i1 = intrinsic_laplacian(assemble(cloud, base, Sparsity::knn(12)), eps);
    GeneratorMatrix i2 = intrinsic_laplacian(assemble(cloud, bigger, Sparsity::knn(12)), eps);
    REQUIRE((Eigen::MatrixXd(i1.op) - Eigen::MatrixXd(i2.op)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("subtraction generator on the unit-weight three-point chain") {
    Eigen::MatrixXd W(3, 3);
    W << 1, 1, 0, 1, 1, 1, 0, 1, 1;
    const double eps = 0.25;
    SparseKernelMatrix K = manual_matrix(W, eps, true);
    GeneratorMatrix L = subtraction_generator(K, Eigen::VectorXd::Ones(3), eps);
    Eigen::MatrixXd dense(L.op);
    Eigen::MatrixXd expected(3, 3); // (K - diag(K 1)) / eps: the (-1, 2, -1) chain pattern
    expected << -1, 1, 0, 1, -2, 1, 0, 1, -1;
    expected /= eps;
    REQUIRE((dense - expected).cwiseAbs().maxCoeff() < 1e-14);
    REQUIRE((dense - dense.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adjoint generator bookkeeping") {
    PointCloud cloud = generate_ellipse(25, 0.5);
    const double eps = 0.1;
    SparseKernelMatrix K =
        assemble(cloud, LocalKernel::radial(gaussian_shape(), eps), Sparsity::dense());
    GeneratorMatrix Ls = adjoint_generator(K, eps);
    REQUIRE(Ls.kind == GeneratorKind::fokker_planck);
    // Columns of the transpose-normalized matrix sum to one: eps L* + I is
    // column-stochastic.
    Eigen::MatrixXd P = eps * Eigen::MatrixXd(Ls.op) + Eigen::MatrixXd::Identity(25, 25);
    REQUIRE((P.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("flat torus generator hits the analytic laplacian of sin theta") {
    PointCloud cloud = generate_flat_torus_r4(40);
    const double eps = epsilon_heuristic(cloud);
    GeneratorMatrix L = diffusion_maps_generator(
        cloud, LocalKernel::radial(gaussian_shape(), eps), 1.0, Sparsity::knn(48));
    Eigen::VectorXd f(cloud.size()), target(cloud.size());
    for (Index i = 0; i < cloud.size(); ++i) {
        f(i) = std::sin(cloud.intrinsic(i, 0));
        target(i) = -std::sin(cloud.intrinsic(i, 0));
    }
    REQUIRE(relative_l2(L.apply(f), target) < 0.1);
}

TEST_CASE("knn truncation converges to dense for the designed-kernel generator") {
    const double eps = 1e-3;
    PointCloud cloud = generate_flat_torus_r4(50);
    auto kernel = analytic::flat_torus::designed_kernel(eps);
    Eigen::VectorXd f(cloud.size());
    for (Index i = 0; i < cloud.size(); ++i)
        f(i) = std::sin(cloud.intrinsic(i, 0)) * std::sin(2 * cloud.intrinsic(i, 1));
    GeneratorMatrix sparse =
        local_kernel_generator(assemble(cloud, kernel, Sparsity::knn(128)), eps);
    GeneratorMatrix dense = local_kernel_generator(assemble(cloud, kernel, Sparsity::dense()), eps);
    REQUIRE(relative_l2(sparse.apply(f), dense.apply(f)) < 0.02);
}

TEST_CASE("coordinate list serialization round trips") {
    PointCloud cloud = generate_ellipse(12, 0.5);
    const double eps = 0.2;
    GeneratorMatrix L = diffusion_maps_generator(
        cloud, LocalKernel::radial(gaussian_shape(), eps), 1.0, Sparsity::knn(4));
    const std::string path =
        (std::filesystem::temp_directory_path() / "lk_operator.txt").string();
    save_generator(L, path);
    CoordinateList back = read_coordinate_list(path);
    REQUIRE(back.kind == "kolmogorov");
    REQUIRE(back.epsilon == eps);
    REQUIRE((Eigen::MatrixXd(back.matrix) - Eigen::MatrixXd(L.op)).cwiseAbs().maxCoeff() == 0.0);
    std::remove(path.c_str());
}
