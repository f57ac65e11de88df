#ifndef LOCALKERNELS_DIFFEO_HPP
#define LOCALKERNELS_DIFFEO_HPP

#include <Eigen/Core>
#include <Eigen/SVD>
#include <vector>

#include "localkernels/conformal.hpp"
#include "localkernels/generators.hpp"
#include "localkernels/neighbors.hpp"
#include "localkernels/spectral.hpp"

namespace localkernels {

/// Per-point linear maps sending displacements of one cloud into displacements of a
/// corresponding cloud.
struct JacobianField {
    std::vector<Eigen::MatrixXd> jacobians; // each target_dim x source_dim
    Index neighbor_count = 0;
    double epsilon_used = 0.0;
};

namespace detail {

inline void require_correspondence(const PointCloud& a, const PointCloud& b) {
    if (a.size() != b.size())
        throw validation_error("corresponding clouds must have the same point count");
    if (a.has_labels() && b.has_labels()) {
        for (Index i = 0; i < a.size(); ++i)
            if (a.labels[static_cast<std::size_t>(i)] != b.labels[static_cast<std::size_t>(i)])
                throw validation_error("correspondence labels disagree at row " +
                                       std::to_string(i));
    }
}

} // namespace detail

/// For each point i, fits the matrix DH_i minimizing sum_j ||vt_j - DH_i v_j||^2 over
/// the k nearest neighbors of x_i in the source cloud, where
///   v_j = w_j (x_j - x_i)  (source displacements),  vt_j = w_j (xt_j - xt_i),
/// and both vector sets carry the same localization weight w_j = exp(-||x_j-x_i||^2/eps).
/// The fit uses a pseudo-inverse with relative singular-value cutoff 1e-8.
inline JacobianField estimate_jacobians(const PointCloud& source, const PointCloud& target,
                                        Index k, double epsilon) {
    source.validate();
    target.validate();
    detail::require_correspondence(source, target);
    if (k < source.ambient_dim())
        throw validation_error("jacobian fit needs at least n neighbors (k >= " +
                               std::to_string(source.ambient_dim()) + ")");
    if (!(epsilon > 0.0)) throw validation_error("jacobian weight bandwidth must be positive");
    const Index N = source.size();
    const Index n = source.ambient_dim();
    const Index m = target.ambient_dim();
    Eigen::MatrixX<Index> nn = knn_indices(source.points, k);

    JacobianField out;
    out.jacobians.resize(static_cast<std::size_t>(N));
    out.neighbor_count = k;
    out.epsilon_used = epsilon;
    std::vector<std::string> failures(static_cast<std::size_t>(N));
    parallel_for(0, N, [&](std::int64_t i) {
        Eigen::MatrixXd V(n, k), Vt(m, k);
        for (Index c = 0; c < k; ++c) {
            const Index j = nn(i, c);
            Eigen::VectorXd dx = (source.points.row(j) - source.points.row(i)).transpose();
            const double w = std::exp(-dx.squaredNorm() / epsilon);
            V.col(c) = w * dx;
            Vt.col(c) = w * (target.points.row(j) - target.points.row(i)).transpose();
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(V, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const double smax = svd.singularValues()(0);
        if (!(smax > 0.0)) {
            failures[static_cast<std::size_t>(i)] =
                "jacobian fit: degenerate neighborhood at point " + std::to_string(i);
            out.jacobians[static_cast<std::size_t>(i)] = Eigen::MatrixXd::Zero(m, n);
            return;
        }
        const double tol = 1e-8 * smax;
        Eigen::VectorXd inv = svd.singularValues();
        for (Index c = 0; c < inv.size(); ++c) inv(c) = inv(c) > tol ? 1.0 / inv(c) : 0.0;
        // DH = Vt V^+ = Vt V^T U diag(inv) U^T ... with V = U S W^T: V^+ = W S^+ U^T.
        out.jacobians[static_cast<std::size_t>(i)] =
            Vt * svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
    });
    for (const auto& f : failures)
        if (!f.empty()) throw numerical_error(f);
    return out;
}

/// K(eps, x_i, x_j) = exp(-||DH_i (x_j - x_i)||^2 / (2 eps)); pushes the metric of the
/// Jacobians' codomain cloud onto `cloud`. Asymmetric; symmetrized downstream.
inline SparseKernelMatrix diffeo_kernel_matrix(const PointCloud& cloud, const JacobianField& J,
                                               double epsilon, Sparsity sparsity) {
    if (static_cast<Index>(J.jacobians.size()) != cloud.size())
        throw validation_error("jacobian field size does not match the cloud");
    LocalKernel k = LocalKernel::jacobian(J.jacobians, epsilon);
    return assemble(cloud, k, sparsity);
}

struct DiffeoOptions {
    Index jacobian_neighbors = 0;   // 0 means 2 * ambient_dim + 8
    double jacobian_epsilon = 0.0;  // 0 means mean squared distance to the k-th neighbor
    Sparsity sparsity = Sparsity::knn(64);
    DecomposeOptions decompose;
};

struct DiffeomorphismReconstruction {
    SpectralEmbedding source_embedding; // diffusion maps (alpha = 1) on the source
    SpectralEmbedding target_embedding; // pushed-forward intrinsic Laplacian on the target
    LinearMap map;                      // source coords ~ map * target coords
    Eigen::MatrixXd source_coords;      // N x n_eigs (constant mode excluded)
    Eigen::MatrixXd target_coords;
    double source_epsilon = 0.0;
    double target_jacobian_epsilon = 0.0;
};

/// Reconstructs a global diffeomorphism between corresponding clouds. The source cloud
/// keeps its ambient geometry (diffusion maps, alpha = 1). The target cloud is
/// re-metrized by per-point Jacobians mapping target displacements into source
/// displacements, so its intrinsic Laplacian is isometric to the source one and the two
/// eigenfunction coordinate systems are related by the linear map H found by least
/// squares. The fit residual is a reported outcome, not an error.
inline DiffeomorphismReconstruction reconstruct_diffeomorphism(const PointCloud& source,
                                                               const PointCloud& target,
                                                               Index n_eigs,
                                                               DiffeoOptions opt = {}) {
    if (n_eigs < 2) throw validation_error("reconstruct_diffeomorphism needs n_eigs >= 2");
    detail::require_correspondence(source, target);

    const double eps_source = epsilon_heuristic(source);
    GeneratorMatrix L_source = diffusion_maps_generator(
        source, LocalKernel::radial(gaussian_shape(), eps_source), 1.0, opt.sparsity);

    Index k_jac = opt.jacobian_neighbors > 0 ? opt.jacobian_neighbors
                                             : 2 * target.ambient_dim() + 8;
    double eps_jac = opt.jacobian_epsilon;
    if (!(eps_jac > 0.0)) {
        Eigen::MatrixX<Index> nn = knn_indices(target.points, k_jac);
        double acc = 0.0;
        for (Index i = 0; i < target.size(); ++i)
            acc += (target.points.row(nn(i, k_jac - 1)) - target.points.row(i)).squaredNorm();
        eps_jac = acc / static_cast<double>(target.size());
    }
    // Neighbors and weights live on the target cloud; DH_i maps its displacements into
    // source displacements, so ||DH_i(x_j - x_i)|| emulates source-side distances.
    JacobianField J = estimate_jacobians(target, source, k_jac, eps_jac);
    // exp(-||DH d||^2/(2 eps_k)) with eps_k = 2 eps_source has the same effective
    // variance as the source-side exp(-||d||^2/(4 eps_source)), so the finite-bandwidth
    // bias of the two discrete spectra cancels in the pairwise comparison.
    const double eps_kernel = 2.0 * eps_source;
    SparseKernelMatrix K = diffeo_kernel_matrix(target, J, eps_kernel, opt.sparsity);
    GeneratorMatrix L_target = intrinsic_laplacian(K, eps_kernel);

    DiffeomorphismReconstruction out;
    out.source_embedding = decompose(L_source, n_eigs + 1, opt.decompose);
    out.target_embedding = decompose(L_target, n_eigs + 1, opt.decompose);
    out.source_coords = embed_range(out.source_embedding, 1, n_eigs);
    out.target_coords = embed_range(out.target_embedding, 1, n_eigs);
    out.map = fit_linear_map(out.target_coords, out.source_coords);
    out.source_epsilon = eps_source;
    out.target_jacobian_epsilon = eps_jac;
    return out;
}

} // namespace localkernels

#endif
