#ifndef LOCALKERNELS_KERNEL_MATRIX_HPP
#define LOCALKERNELS_KERNEL_MATRIX_HPP

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "localkernels/errors.hpp"
#include "localkernels/kernels.hpp"
#include "localkernels/neighbors.hpp"
#include "localkernels/parallel.hpp"
#include "localkernels/point_cloud.hpp"

namespace localkernels {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Storage policy for assembled kernel matrices.
struct Sparsity {
    static Sparsity dense() { return Sparsity{-1}; }
    static Sparsity knn(Index k) {
        if (k < 1) throw validation_error("knn sparsity needs k >= 1");
        return Sparsity{k};
    }
    bool is_dense() const { return k_ < 0; }
    Index k() const { return k_; }

private:
    explicit Sparsity(Index k) : k_(k) {}
    Index k_;
};

/// A nonnegative N x N kernel weight matrix with its bandwidth and storage metadata.
/// Diagonal (self-weight) entries are always present.
struct SparseKernelMatrix {
    SparseMatrix weights;
    double epsilon = 0.0;
    Sparsity sparsity = Sparsity::dense();
    bool symmetric = false; // set only when the matrix equals its transpose exactly

    Index size() const { return weights.rows(); }

    Eigen::VectorXd row_sums() const {
        Eigen::VectorXd s(weights.rows());
        for (Index i = 0; i < weights.rows(); ++i) {
            double acc = 0.0;
            for (SparseMatrix::InnerIterator it(weights, i); it; ++it) acc += it.value();
            s(i) = acc;
        }
        return s;
    }
};

namespace detail {

inline void check_kernel_value(double v, Index i, Index j) {
    if (!std::isfinite(v) || v < 0.0)
        throw numerical_error("kernel value at pair (" + std::to_string(i) + ", " +
                              std::to_string(j) + ") is " + std::to_string(v));
}

} // namespace detail

/// Evaluates the kernel on all pairs of the cloud. Dense mode fills all N^2 entries.
/// knn(k) mode keeps, per row i, the k nearest neighbors of i plus the diagonal, then
/// symmetrizes the sparsity pattern by union; every retained entry is the exact kernel
/// evaluation (no averaging).
inline SparseKernelMatrix assemble(const PointCloud& cloud, const LocalKernel& kernel,
                                   Sparsity sparsity) {
    cloud.validate();
    const Index N = cloud.size();
    SparseKernelMatrix out;
    out.epsilon = kernel.epsilon();
    out.sparsity = sparsity;

    // Column index lists per row, ascending, diagonal included.
    std::vector<std::vector<Index>> pattern(static_cast<std::size_t>(N));
    if (sparsity.is_dense()) {
        for (Index i = 0; i < N; ++i) {
            auto& row = pattern[static_cast<std::size_t>(i)];
            row.resize(static_cast<std::size_t>(N));
            for (Index j = 0; j < N; ++j) row[static_cast<std::size_t>(j)] = j;
        }
    } else {
        Eigen::MatrixX<Index> nn = knn_indices(cloud.points, sparsity.k());
        for (Index i = 0; i < N; ++i) {
            pattern[static_cast<std::size_t>(i)].push_back(i);
            for (Index c = 0; c < nn.cols(); ++c)
                pattern[static_cast<std::size_t>(i)].push_back(nn(i, c));
        }
        // Union with the transpose pattern so K and K^T share storage structure.
        std::vector<std::vector<Index>> incoming(static_cast<std::size_t>(N));
        for (Index i = 0; i < N; ++i)
            for (Index c = 0; c < nn.cols(); ++c)
                incoming[static_cast<std::size_t>(nn(i, c))].push_back(i);
        for (Index i = 0; i < N; ++i) {
            auto& row = pattern[static_cast<std::size_t>(i)];
            row.insert(row.end(), incoming[static_cast<std::size_t>(i)].begin(),
                       incoming[static_cast<std::size_t>(i)].end());
            std::sort(row.begin(), row.end());
            row.erase(std::unique(row.begin(), row.end()), row.end());
        }
    }

    // Evaluate rows in parallel, then build the CSR structure serially.
    std::vector<std::vector<double>> values(static_cast<std::size_t>(N));
    parallel_for(0, N, [&](std::int64_t i) {
        const auto& row = pattern[static_cast<std::size_t>(i)];
        auto& vals = values[static_cast<std::size_t>(i)];
        vals.resize(row.size());
        auto evaluate = kernel.row_evaluator(i, cloud.points.row(i).transpose());
        for (std::size_t c = 0; c < row.size(); ++c) {
            const double v = evaluate(row[c], cloud.points.row(row[c]).transpose());
            detail::check_kernel_value(v, i, row[c]);
            vals[c] = v;
        }
    });

    SparseMatrix& W = out.weights;
    W.resize(N, N);
    Eigen::VectorXi per_row(N);
    for (Index i = 0; i < N; ++i)
        per_row(i) = static_cast<int>(pattern[static_cast<std::size_t>(i)].size());
    W.reserve(per_row);
    for (Index i = 0; i < N; ++i) {
        const auto& row = pattern[static_cast<std::size_t>(i)];
        const auto& vals = values[static_cast<std::size_t>(i)];
        for (std::size_t c = 0; c < row.size(); ++c) W.insert(i, row[c]) = vals[c];
    }
    W.makeCompressed();

    out.symmetric = kernel.pairwise_symmetric();
    return out;
}

/// Kbar = K + K^T entrywise; exactly symmetric.
inline SparseKernelMatrix symmetrize(const SparseKernelMatrix& K) {
    SparseKernelMatrix out = K;
    SparseMatrix t = SparseMatrix(K.weights.transpose());
    out.weights = K.weights + t;
    out.weights.makeCompressed();
    out.symmetric = true;
    return out;
}

/// Divides column j by q(x_j)^alpha, where q(x_j) = sum_i K(x_j, x_i) is the j-th row
/// sum. alpha = 0 returns the input unchanged.
inline SparseKernelMatrix right_normalize(const SparseKernelMatrix& K, double alpha) {
    if (alpha == 0.0) return K;
    Eigen::VectorXd q = K.row_sums();
    for (Index j = 0; j < q.size(); ++j)
        if (!(q(j) > 0.0))
            throw validation_error("right_normalize: point " + std::to_string(j) +
                                   " has zero kernel mass (isolated point)");
    Eigen::VectorXd scale = q.array().pow(-alpha);
    SparseKernelMatrix out = K;
    for (Index i = 0; i < out.weights.rows(); ++i)
        for (SparseMatrix::InnerIterator it(out.weights, i); it; ++it)
            it.valueRef() *= scale(it.col());
    out.symmetric = false;
    return out;
}

/// Divides each row by its sum, producing a row-stochastic matrix.
inline SparseKernelMatrix left_normalize(const SparseKernelMatrix& K) {
    Eigen::VectorXd r = K.row_sums();
    for (Index i = 0; i < r.size(); ++i)
        if (!(r(i) > 0.0))
            throw validation_error("left_normalize: row " + std::to_string(i) +
                                   " has zero sum (isolated point)");
    SparseKernelMatrix out = K;
    for (Index i = 0; i < out.weights.rows(); ++i)
        for (SparseMatrix::InnerIterator it(out.weights, i); it; ++it)
            it.valueRef() /= r(i);
    out.symmetric = false;
    return out;
}

/// Writes a sparse matrix as `i,j,value` coordinate triples (0-based, row-major order)
/// under a one-line header `N epsilon kind`, values with 17 significant digits.
inline void write_coordinate_list(const SparseMatrix& m, double epsilon, const std::string& kind,
                                  const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out << m.rows() << ' ' << detail::format_g17(epsilon) << ' ' << kind << "\n";
    for (Index i = 0; i < m.rows(); ++i)
        for (SparseMatrix::InnerIterator it(m, i); it; ++it)
            out << i << ',' << it.col() << ',' << detail::format_g17(it.value()) << "\n";
    if (!out) throw io_error("write failure on '" + path + "'");
}

struct CoordinateList {
    SparseMatrix matrix;
    double epsilon = 0.0;
    std::string kind;
};

inline CoordinateList read_coordinate_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "' for reading");
    std::string header;
    if (!std::getline(in, header)) throw io_error("'" + path + "' is empty");
    std::istringstream hs(header);
    Index N = 0;
    CoordinateList out;
    if (!(hs >> N >> out.epsilon >> out.kind) || N < 1)
        throw io_error("'" + path + "': malformed header '" + header + "'");
    std::vector<Eigen::Triplet<double>> trip;
    std::string line;
    Index rownum = 1;
    while (std::getline(in, line)) {
        ++rownum;
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 3)
            throw io_error("row " + std::to_string(rownum) + ": expected i,j,value");
        const Index i = static_cast<Index>(std::stoll(fields[0]));
        const Index j = static_cast<Index>(std::stoll(fields[1]));
        if (i < 0 || i >= N || j < 0 || j >= N)
            throw io_error("row " + std::to_string(rownum) + ": index out of range");
        trip.emplace_back(i, j, detail::parse_double_field(fields[2], rownum, 2));
    }
    out.matrix.resize(N, N);
    out.matrix.setFromTriplets(trip.begin(), trip.end());
    return out;
}

} // namespace localkernels

#endif
