#ifndef LOCALKERNELS_GENERATORS_HPP
#define LOCALKERNELS_GENERATORS_HPP

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <iostream>
#include <optional>
#include <string>

#include "localkernels/kernel_matrix.hpp"
#include "localkernels/neighbors.hpp"

namespace localkernels {

enum class GeneratorKind { kolmogorov, fokker_planck, intrinsic_laplacian };

inline std::string to_string(GeneratorKind k) {
    switch (k) {
    case GeneratorKind::kolmogorov: return "kolmogorov";
    case GeneratorKind::fokker_planck: return "fokker_planck";
    case GeneratorKind::intrinsic_laplacian: return "intrinsic_laplacian";
    }
    return "?";
}

/// A discrete N x N operator approximating a Kolmogorov operator, its adjoint, or an
/// intrinsic Laplacian. When `sym_weight` is nonempty, diag(sqrt(w)) L diag(1/sqrt(w))
/// is symmetric; spectral code exploits this to solve a symmetric problem.
struct GeneratorMatrix {
    SparseMatrix op;
    GeneratorKind kind = GeneratorKind::kolmogorov;
    double epsilon = 0.0;
    std::optional<double> alpha;   // right-normalization exponent, where applicable
    Eigen::VectorXd sym_weight;    // empty when no symmetric conjugation is known

    Index size() const { return op.rows(); }
    bool has_symmetric_form() const { return sym_weight.size() > 0; }

    Eigen::VectorXd apply(const Eigen::VectorXd& f) const {
        if (f.size() != op.cols())
            throw validation_error("generator applied to vector of mismatched length");
        return op * f;
    }
};

/// Bandwidth heuristic: the mean squared distance to the nearest distinct neighbor.
/// Duplicate points (zero nearest-neighbor distance) are excluded from the mean with a
/// warning on stderr.
inline double epsilon_heuristic(const PointCloud& cloud) {
    cloud.validate();
    if (cloud.size() < 2) throw validation_error("epsilon heuristic needs at least 2 points");
    Eigen::VectorXd d2 = nearest_neighbor_sq_distances(cloud.points);
    double acc = 0.0;
    Index used = 0;
    for (Index i = 0; i < d2.size(); ++i) {
        if (d2(i) > 0.0) {
            acc += d2(i);
            ++used;
        }
    }
    if (used < d2.size())
        std::cerr << "epsilon_heuristic: " << (d2.size() - used)
                  << " duplicate point(s) excluded from the mean\n";
    if (used == 0) throw validation_error("epsilon heuristic: all points are duplicates");
    return acc / static_cast<double>(used);
}

namespace detail {

// L = scale * (P - I) where P = D^{-1} W row-stochastic. Returns L with diagonal
// entries materialized.
inline SparseMatrix stochastic_minus_identity(const SparseMatrix& W, const Eigen::VectorXd& rowsum,
                                              double scale) {
    SparseMatrix L = W;
    for (Index i = 0; i < L.rows(); ++i) {
        if (!(rowsum(i) > 0.0))
            throw validation_error("generator normalization: row " + std::to_string(i) +
                                   " has zero kernel mass (isolated point)");
        bool saw_diag = false;
        for (SparseMatrix::InnerIterator it(L, i); it; ++it) {
            double v = it.value() / rowsum(i);
            if (it.col() == i) {
                v -= 1.0;
                saw_diag = true;
            }
            it.valueRef() = scale * v;
        }
        if (!saw_diag)
            throw numerical_error("generator: missing diagonal entry in row " + std::to_string(i));
    }
    return L;
}

} // namespace detail

/// L_eps = (row-normalized K - I)/eps. For a kernel with moments (m, mu, C) this
/// approximates (1/m)(mu . grad + (1/2) C : hessian).
inline GeneratorMatrix local_kernel_generator(const SparseKernelMatrix& K, double epsilon) {
    if (!(epsilon > 0.0)) throw validation_error("epsilon must be positive");
    GeneratorMatrix out;
    out.kind = GeneratorKind::kolmogorov;
    out.epsilon = epsilon;
    Eigen::VectorXd r = K.row_sums();
    out.op = detail::stochastic_minus_identity(K.weights, r, 1.0 / epsilon);
    if (K.symmetric) out.sym_weight = r; // P = D^{-1} K with K symmetric
    return out;
}

/// The adjoint estimator: rows of K are normalized by their sums, the result is
/// transposed, and the identity is subtracted. For a prototypical kernel this
/// approximates the Fokker-Planck operator -div(b f) + (1/2) hessian : (A f).
inline GeneratorMatrix adjoint_generator(const SparseKernelMatrix& K, double epsilon) {
    if (!(epsilon > 0.0)) throw validation_error("epsilon must be positive");
    Eigen::VectorXd r = K.row_sums();
    for (Index i = 0; i < r.size(); ++i)
        if (!(r(i) > 0.0))
            throw validation_error("adjoint generator: row " + std::to_string(i) +
                                   " has zero kernel mass");
    SparseMatrix P = K.weights;
    for (Index i = 0; i < P.rows(); ++i)
        for (SparseMatrix::InnerIterator it(P, i); it; ++it) it.valueRef() /= r(i);
    SparseMatrix Pt = SparseMatrix(P.transpose());
    GeneratorMatrix out;
    out.kind = GeneratorKind::fokker_planck;
    out.epsilon = epsilon;
    out.op = Pt;
    for (Index i = 0; i < out.op.rows(); ++i) {
        bool saw_diag = false;
        for (SparseMatrix::InnerIterator it(out.op, i); it; ++it) {
            double v = it.value();
            if (it.col() == i) {
                v -= 1.0;
                saw_diag = true;
            }
            it.valueRef() = v / epsilon;
        }
        if (!saw_diag)
            throw numerical_error("adjoint generator: missing diagonal entry in row " +
                                  std::to_string(i));
    }
    // P^T = K^T D^{-1}; for symmetric K, diag(1/sqrt(r)) P^T diag(sqrt(r)) is symmetric.
    if (K.symmetric) out.sym_weight = r.cwiseInverse();
    return out;
}

/// Subtraction normalization (K f - diag(K 1) f)/eps, rows divided by the supplied
/// per-point zeroth-moment estimate. Discretizes a weighted graph Laplacian; symmetric
/// kernels give a symmetric conjugation (exactly symmetric for constant estimates).
inline GeneratorMatrix subtraction_generator(const SparseKernelMatrix& K,
                                             const Eigen::VectorXd& zeroth_moment,
                                             double epsilon) {
    if (!(epsilon > 0.0)) throw validation_error("epsilon must be positive");
    if (zeroth_moment.size() != K.size())
        throw validation_error("zeroth-moment estimate must have one entry per point");
    for (Index i = 0; i < zeroth_moment.size(); ++i)
        if (!(zeroth_moment(i) > 0.0))
            throw validation_error("zeroth-moment estimate must be positive (point " +
                                   std::to_string(i) + ")");
    Eigen::VectorXd r = K.row_sums();
    GeneratorMatrix out;
    out.kind = GeneratorKind::kolmogorov;
    out.epsilon = epsilon;
    out.op = K.weights;
    for (Index i = 0; i < out.op.rows(); ++i) {
        bool saw_diag = false;
        for (SparseMatrix::InnerIterator it(out.op, i); it; ++it) {
            double v = it.value();
            if (it.col() == i) {
                v -= r(i);
                saw_diag = true;
            }
            it.valueRef() = v / (epsilon * zeroth_moment(i));
        }
        if (!saw_diag)
            throw numerical_error("subtraction generator: missing diagonal entry in row " +
                                  std::to_string(i));
    }
    if (K.symmetric) out.sym_weight = zeroth_moment;
    return out;
}

/// Intrinsic-geometry Laplacian of a symmetric (or symmetrizable) kernel matrix:
/// symmetrize, divide column j by the j-th mass sum, row-normalize, subtract the
/// identity, scale by 2/eps. Approximates the Laplacian of the metric encoded by the
/// kernel's second moment, independent of the sampling density.
inline GeneratorMatrix intrinsic_laplacian(const SparseKernelMatrix& K, double epsilon) {
    if (!(epsilon > 0.0)) throw validation_error("epsilon must be positive");
    const SparseKernelMatrix Kbar = K.symmetric ? K : symmetrize(K);
    Eigen::VectorXd d = Kbar.row_sums();
    for (Index j = 0; j < d.size(); ++j)
        if (!(d(j) > 0.0))
            throw validation_error("intrinsic laplacian: point " + std::to_string(j) +
                                   " has zero kernel mass");
    // Right normalization (alpha = 1 pattern): W = Kbar diag(d)^{-1}.
    SparseMatrix W = Kbar.weights;
    for (Index i = 0; i < W.rows(); ++i)
        for (SparseMatrix::InnerIterator it(W, i); it; ++it) it.valueRef() /= d(it.col());
    Eigen::VectorXd r(W.rows());
    for (Index i = 0; i < W.rows(); ++i) {
        double acc = 0.0;
        for (SparseMatrix::InnerIterator it(W, i); it; ++it) acc += it.value();
        r(i) = acc;
    }
    GeneratorMatrix out;
    out.kind = GeneratorKind::intrinsic_laplacian;
    out.epsilon = epsilon;
    out.alpha = 1.0;
    out.op = detail::stochastic_minus_identity(W, r, 2.0 / epsilon);
    // P = D_sym^{-1} W_sym with W_sym = diag(d)^{-1} Kbar diag(d)^{-1} symmetric and
    // (D_sym)_i = r_i / d_i.
    out.sym_weight = r.cwiseQuotient(d);
    return out;
}

/// Convenience overload: assemble the kernel first.
inline GeneratorMatrix intrinsic_laplacian(const PointCloud& cloud, const LocalKernel& kernel,
                                           double epsilon, Sparsity sparsity) {
    return intrinsic_laplacian(assemble(cloud, kernel, sparsity), epsilon);
}

/// The diffusion-maps generator L_{eps,alpha} = (Jhat_{eps,alpha} - I)/eps of a radial
/// kernel: assemble, divide columns by the density estimate to the power alpha, make
/// rows stochastic, subtract the identity. Approximates
/// Delta f + (2 - 2 alpha) grad f . grad(q)/q.
inline GeneratorMatrix diffusion_maps_generator(const PointCloud& cloud,
                                                const LocalKernel& radial_kernel, double alpha,
                                                Sparsity sparsity) {
    if (radial_kernel.family() != LocalKernel::Family::radial || radial_kernel.symmetrized())
        throw validation_error("diffusion_maps_generator expects a radial kernel");
    SparseKernelMatrix J = assemble(cloud, radial_kernel, sparsity);
    Eigen::VectorXd q = J.row_sums();
    for (Index j = 0; j < q.size(); ++j)
        if (!(q(j) > 0.0))
            throw validation_error("diffusion maps: point " + std::to_string(j) +
                                   " has zero kernel mass (isolated point)");
    SparseMatrix W = J.weights;
    if (alpha != 0.0) {
        Eigen::VectorXd scale = q.array().pow(-alpha);
        for (Index i = 0; i < W.rows(); ++i)
            for (SparseMatrix::InnerIterator it(W, i); it; ++it) it.valueRef() *= scale(it.col());
    }
    Eigen::VectorXd r(W.rows());
    for (Index i = 0; i < W.rows(); ++i) {
        double acc = 0.0;
        for (SparseMatrix::InnerIterator it(W, i); it; ++it) acc += it.value();
        r(i) = acc;
    }
    GeneratorMatrix out;
    out.kind = GeneratorKind::kolmogorov;
    out.epsilon = radial_kernel.epsilon();
    out.alpha = alpha;
    out.op = detail::stochastic_minus_identity(W, r, 1.0 / radial_kernel.epsilon());
    // W_sym = diag(q^-alpha) J diag(q^-alpha) is symmetric and P = D_sym^{-1} W_sym
    // with (D_sym)_i = q_i^{-alpha} r_i.
    out.sym_weight = q.array().pow(-alpha) * r.array();
    return out;
}

/// Serializes the operator in the `i,j,value` coordinate-list format.
inline void save_generator(const GeneratorMatrix& g, const std::string& path) {
    write_coordinate_list(g.op, g.epsilon, to_string(g.kind), path);
}

} // namespace localkernels

#endif
