#ifndef LOCALKERNELS_SPECTRAL_HPP
#define LOCALKERNELS_SPECTRAL_HPP

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "localkernels/errors.hpp"
#include "localkernels/generators.hpp"
#include "localkernels/lanczos.hpp"

namespace localkernels {

/// Leading eigenpairs of a generator, ordered by |lambda| ascending (the near-zero
/// eigenvalue first). Columns are unit norm with the sign convention that the first
/// entry of largest magnitude is positive.
struct SpectralEmbedding {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;
    GeneratorKind generator_kind = GeneratorKind::kolmogorov;
    Eigen::VectorXd residuals; // ||L v - lambda v|| per pair
};

struct DecomposeOptions {
    Index dense_threshold = 2000;     // problems up to this size are solved densely
    Index max_subspace = 0;           // Lanczos cap; 0 picks a default
    double residual_bound = 1e-6;     // enforced on ||L v - lambda v|| / ||v||
    std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
};

namespace detail {

inline void apply_sign_convention(Eigen::MatrixXd& vectors) {
    for (Index c = 0; c < vectors.cols(); ++c) {
        Index imax = 0;
        double best = -1.0;
        for (Index i = 0; i < vectors.rows(); ++i) {
            const double a = std::abs(vectors(i, c));
            if (a > best) {
                best = a;
                imax = i;
            }
        }
        if (vectors(imax, c) < 0.0) vectors.col(c) = -vectors.col(c);
    }
}

inline SparseMatrix conjugated_symmetric_form(const GeneratorMatrix& L) {
    Eigen::VectorXd s = L.sym_weight.cwiseSqrt();
    SparseMatrix M = L.op;
    for (Index i = 0; i < M.rows(); ++i)
        for (SparseMatrix::InnerIterator it(M, i); it; ++it)
            it.valueRef() *= s(i) / s(it.col());
    SparseMatrix Mt = SparseMatrix(M.transpose());
    M = 0.5 * (M + Mt); // scrub rounding asymmetry
    return M;
}

} // namespace detail

/// The k eigenpairs of L with eigenvalues closest to zero. Generators carrying a
/// symmetric conjugation are solved as symmetric problems (densely, or by Lanczos when
/// N exceeds the dense threshold) and the eigenvectors are conjugated back. Other
/// generators use a dense general eigensolver; materially complex pairs are rejected.
inline SpectralEmbedding decompose(const GeneratorMatrix& L, Index k,
                                   DecomposeOptions opt = {}) {
    const Index N = L.size();
    if (k < 1 || k >= N)
        throw validation_error("decompose needs 1 <= k < N (k = " + std::to_string(k) +
                               ", N = " + std::to_string(N) + ")");
    SpectralEmbedding out;
    out.generator_kind = L.kind;

    if (L.has_symmetric_form()) {
        Eigen::VectorXd inv_s = L.sym_weight.cwiseSqrt().cwiseInverse();
        Eigen::VectorXd values;
        Eigen::MatrixXd sym_vectors;
        if (N <= opt.dense_threshold) {
            Eigen::MatrixXd M = Eigen::MatrixXd(detail::conjugated_symmetric_form(L));
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
            if (es.info() != Eigen::Success)
                throw numerical_error("dense symmetric eigensolve failed");
            values.resize(k);
            sym_vectors.resize(N, k);
            for (Index c = 0; c < k; ++c) {
                values(c) = es.eigenvalues()(N - 1 - c); // largest algebraic = closest to 0
                sym_vectors.col(c) = es.eigenvectors().col(N - 1 - c);
            }
        } else {
            SparseMatrix M = detail::conjugated_symmetric_form(L);
            LanczosOptions lopt;
            lopt.seed = opt.seed;
            const double ratio = inv_s.maxCoeff() / inv_s.minCoeff();
            lopt.tolerance = 0.1 * opt.residual_bound / ratio;
            // Short plain run to place the shift at the scale of the first spectral gap;
            // the shift-inverted iteration then resolves the near-zero cluster.
            LanczosOptions warm = lopt;
            warm.max_subspace = std::min<Index>(N, std::max<Index>(2 * k + 20, 80));
            LanczosResult estimate = lanczos_largest(M, std::min<Index>(k + 1, N - 1), warm);
            const double scale =
                estimate.values.size() > 0 ? estimate.values.cwiseAbs().maxCoeff() : 1.0;
            double gap = 0.0;
            for (Index c = 1; c < estimate.values.size(); ++c)
                if (estimate.values(c) < -1e-12 * std::max(scale, 1.0)) {
                    gap = std::abs(estimate.values(c));
                    break;
                }
            const double sigma = std::max(0.5 * gap, 1e-10 * std::max(scale, 1.0));
            lopt.max_subspace = opt.max_subspace > 0
                                    ? opt.max_subspace
                                    : std::min<Index>(N, std::max<Index>(8 * k, 160));
            LanczosResult r = lanczos_shift_invert(M, k, sigma, lopt);
            if (!r.converged)
                throw numerical_error(
                    "decompose: eigensolver failed to converge within the iteration cap");
            values = r.values;
            sym_vectors = r.vectors;
        }
        out.eigenvalues = values;
        out.eigenvectors.resize(N, k);
        for (Index c = 0; c < k; ++c) {
            Eigen::VectorXd v = inv_s.asDiagonal() * sym_vectors.col(c);
            out.eigenvectors.col(c) = v / v.norm();
        }
    } else {
        if (N > opt.dense_threshold)
            throw numerical_error(
                "decompose: generator has no symmetric form and exceeds the dense solver "
                "threshold (N = " + std::to_string(N) + ")");
        Eigen::MatrixXd A = Eigen::MatrixXd(L.op);
        Eigen::EigenSolver<Eigen::MatrixXd> es(A);
        if (es.info() != Eigen::Success) throw numerical_error("dense eigensolve failed");
        std::vector<Index> order(static_cast<std::size_t>(N));
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](Index a, Index b) {
            return std::abs(es.eigenvalues()(a)) < std::abs(es.eigenvalues()(b));
        });
        out.eigenvalues.resize(k);
        out.eigenvectors.resize(N, k);
        for (Index c = 0; c < k; ++c) {
            const auto lam = es.eigenvalues()(order[static_cast<std::size_t>(c)]);
            if (std::abs(lam.imag()) > 1e-6 * std::max(std::abs(lam.real()), 1e-12))
                throw numerical_error(
                    "decompose: materially complex eigenvalue " + std::to_string(lam.real()) +
                    " + " + std::to_string(lam.imag()) + "i for a real-spectrum generator");
            out.eigenvalues(c) = lam.real();
            Eigen::VectorXd v = es.eigenvectors().col(order[static_cast<std::size_t>(c)]).real();
            const double nrm = v.norm();
            if (nrm == 0.0) throw numerical_error("decompose: degenerate eigenvector");
            out.eigenvectors.col(c) = v / nrm;
        }
    }

    // Order by |lambda| ascending; stable for reproducibility.
    std::vector<Index> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return std::abs(out.eigenvalues(a)) < std::abs(out.eigenvalues(b));
    });
    Eigen::VectorXd seigen(k);
    Eigen::MatrixXd svec(N, k);
    for (Index c = 0; c < k; ++c) {
        seigen(c) = out.eigenvalues(order[static_cast<std::size_t>(c)]);
        svec.col(c) = out.eigenvectors.col(order[static_cast<std::size_t>(c)]);
    }
    out.eigenvalues = seigen;
    out.eigenvectors = svec;
    detail::apply_sign_convention(out.eigenvectors);

    out.residuals.resize(k);
    for (Index c = 0; c < k; ++c) {
        out.residuals(c) =
            (L.op * out.eigenvectors.col(c) - out.eigenvalues(c) * out.eigenvectors.col(c)).norm();
        if (!(out.residuals(c) <= opt.residual_bound))
            throw numerical_error("decompose: eigenpair " + std::to_string(c) +
                                  " residual " + std::to_string(out.residuals(c)) +
                                  " exceeds the bound " + std::to_string(opt.residual_bound));
    }
    return out;
}

/// Selected eigenvector columns as coordinates (the constant index 0 is normally
/// excluded by callers). An empty index list yields an N x 0 matrix.
inline Eigen::MatrixXd embed(const SpectralEmbedding& decomp, const std::vector<Index>& indices) {
    Eigen::MatrixXd out(decomp.eigenvectors.rows(), static_cast<Index>(indices.size()));
    for (std::size_t c = 0; c < indices.size(); ++c) {
        if (indices[c] < 0 || indices[c] >= decomp.eigenvectors.cols())
            throw validation_error("embed: eigenvector index " + std::to_string(indices[c]) +
                                   " out of range");
        out.col(static_cast<Index>(c)) = decomp.eigenvectors.col(indices[c]);
    }
    return out;
}

/// Convenience: indices first..last inclusive.
inline Eigen::MatrixXd embed_range(const SpectralEmbedding& decomp, Index first, Index last) {
    std::vector<Index> idx;
    for (Index i = first; i <= last; ++i) idx.push_back(i);
    return embed(decomp, idx);
}

/// A least-squares linear map between coordinate systems, with its relative misfit.
struct LinearMap {
    Eigen::MatrixXd matrix;        // target_dim x source_dim
    double relative_residual = 0.0; // ||target - source H^T||_F / ||target||_F
};

namespace detail {

inline void require_full_column_rank(const Eigen::BDCSVD<Eigen::MatrixXd>& svd,
                                     const char* what) {
    const auto& sv = svd.singularValues();
    const double tol = 1e-10 * sv(0);
    std::vector<Index> deficient;
    for (Index c = 0; c < sv.size(); ++c)
        if (!(sv(c) > tol)) {
            // name the columns loading on the null directions
            for (Index col = 0; col < svd.matrixV().rows(); ++col)
                if (std::abs(svd.matrixV()(col, c)) > 0.5 / std::sqrt(double(svd.matrixV().rows())))
                    deficient.push_back(col);
        }
    if (!deficient.empty()) {
        std::string cols;
        std::sort(deficient.begin(), deficient.end());
        deficient.erase(std::unique(deficient.begin(), deficient.end()), deficient.end());
        for (Index c : deficient) cols += (cols.empty() ? "" : ", ") + std::to_string(c);
        throw numerical_error(std::string(what) + ": rank-deficient columns {" + cols + "}");
    }
}

} // namespace detail

/// H minimizing sum_i ||target_i - H source_i||^2 by ordinary least squares.
inline LinearMap fit_linear_map(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target) {
    if (source.rows() != target.rows())
        throw validation_error("fit_linear_map: row counts differ");
    if (source.rows() < source.cols())
        throw validation_error("fit_linear_map: fewer samples than source dimensions");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(source, Eigen::ComputeThinU | Eigen::ComputeThinV);
    detail::require_full_column_rank(svd, "fit_linear_map");
    Eigen::MatrixXd B = svd.solve(target); // p x q
    LinearMap out;
    out.matrix = B.transpose();
    const double denom = target.norm();
    out.relative_residual = denom > 0.0 ? (source * B - target).norm() / denom
                                        : (source * B - target).norm();
    return out;
}

/// Ordinary least squares of u onto span(candidates): coefficients and the coefficient
/// of determination R^2 = 1 - ||residual||^2 / ||u - mean(u)||^2.
struct AlignResult {
    Eigen::VectorXd coefficients;
    double r_squared = 0.0;
};

inline AlignResult align_and_compare(const Eigen::VectorXd& u, const Eigen::MatrixXd& candidates) {
    if (candidates.rows() != u.size())
        throw validation_error("align_and_compare: dimension mismatch");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(candidates, Eigen::ComputeThinU | Eigen::ComputeThinV);
    detail::require_full_column_rank(svd, "align_and_compare");
    AlignResult out;
    out.coefficients = svd.solve(u);
    const double ss_res = (u - candidates * out.coefficients).squaredNorm();
    const double mean = u.mean();
    const double ss_tot = (u.array() - mean).matrix().squaredNorm();
    if (ss_tot > 0.0)
        out.r_squared = 1.0 - ss_res / ss_tot;
    else
        out.r_squared = ss_res <= 1e-24 ? 1.0 : 0.0;
    return out;
}

/// CSV layout: one header row naming the columns lambda_0..lambda_{k-1}, one row with
/// the eigenvalues, then N rows of eigenvector coordinates.
inline void write_embedding_csv(const SpectralEmbedding& e, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    for (Index c = 0; c < e.eigenvalues.size(); ++c) out << (c ? ",lambda_" : "lambda_") << c;
    out << "\n";
    for (Index c = 0; c < e.eigenvalues.size(); ++c)
        out << (c ? "," : "") << detail::format_g17(e.eigenvalues(c));
    out << "\n";
    for (Index i = 0; i < e.eigenvectors.rows(); ++i) {
        for (Index c = 0; c < e.eigenvectors.cols(); ++c)
            out << (c ? "," : "") << detail::format_g17(e.eigenvectors(i, c));
        out << "\n";
    }
    if (!out) throw io_error("write failure on '" + path + "'");
}

} // namespace localkernels

#endif
