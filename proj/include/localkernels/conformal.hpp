#ifndef LOCALKERNELS_CONFORMAL_HPP
#define LOCALKERNELS_CONFORMAL_HPP

#include "localkernels/density.hpp"
#include "localkernels/generators.hpp"
#include "localkernels/spectral.hpp"

namespace localkernels {

/// Variable-bandwidth Gaussian K(x_i, x_j) = exp(-||x_i-x_j||^2 / (4 eps q_i^{-2/d})).
/// Asymmetric (the bandwidth follows the row point); downstream use symmetrizes it.
inline SparseKernelMatrix conformal_kernel_matrix(const PointCloud& cloud,
                                                  const DensityEstimate& density,
                                                  int intrinsic_dim, double epsilon,
                                                  Sparsity sparsity) {
    if (density.q.size() != cloud.size())
        throw validation_error("density estimate size does not match the cloud");
    LocalKernel k = LocalKernel::conformal(density.q, intrinsic_dim, epsilon);
    return assemble(cloud, k, sparsity);
}

struct ConformalOptions {
    double epsilon = 0.0;            // 0 means use the bandwidth heuristic
    Sparsity sparsity = Sparsity::knn(64);
    DecomposeOptions decompose;
};

struct ConformalEmbeddingResult {
    SpectralEmbedding embedding; // k_eigs + 1 pairs; index 0 is the constant mode
    DensityEstimate density;
    double epsilon = 0.0;
};

/// The conformally invariant embedding: density estimate -> variable-bandwidth kernel
/// -> symmetrization -> intrinsic Laplacian -> eigenpairs. The recovered geometry has
/// volume form equal to the sampling measure, so conformal isometries of the input
/// change the embedding only by an orthogonal mix of degenerate eigenspaces.
inline ConformalEmbeddingResult conformal_embedding(const PointCloud& cloud, int intrinsic_dim,
                                                    Index k_eigs, ConformalOptions opt = {}) {
    if (k_eigs < 2) throw validation_error("conformal_embedding needs k_eigs >= 2");
    const double eps = opt.epsilon > 0.0 ? opt.epsilon : epsilon_heuristic(cloud);
    DensityEstimate q = estimate_density(cloud, eps);
    SparseKernelMatrix K = conformal_kernel_matrix(cloud, q, intrinsic_dim, eps, opt.sparsity);
    GeneratorMatrix L = intrinsic_laplacian(K, eps); // symmetrizes internally
    ConformalEmbeddingResult out;
    out.embedding = decompose(L, k_eigs + 1, opt.decompose);
    out.density = std::move(q);
    out.epsilon = eps;
    return out;
}

} // namespace localkernels

#endif
