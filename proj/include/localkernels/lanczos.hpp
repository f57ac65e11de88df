#ifndef LOCALKERNELS_LANCZOS_HPP
#define LOCALKERNELS_LANCZOS_HPP

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "localkernels/errors.hpp"
#include "localkernels/kernel_matrix.hpp"

namespace localkernels {

struct LanczosOptions {
    Index max_subspace = 0;    // 0 means an automatic cap
    double tolerance = 1e-8;   // bound on ||M v - theta v|| for accepted pairs
    std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
};

struct LanczosResult {
    bool converged = false;
    Eigen::VectorXd values;    // k largest eigenvalues, descending
    Eigen::MatrixXd vectors;   // N x k, orthonormal
    Eigen::VectorXd residuals; // ||M v - theta v|| per pair
    Index iterations = 0;
};

namespace detail {

/// One Lanczos run with full reorthogonalization applied to the symmetric operator
/// `apply`, kept orthogonal to the columns of `deflate` (an invariant subspace of the
/// operator). Ritz pairs are accepted once their residual against the verification
/// operator `verify` (the matrix of actual interest; differs from `apply` under
/// shift-inversion) meets `tol`. Returns the best available estimates either way.
template <typename ApplyFn, typename VerifyFn, typename ValueMap>
LanczosResult lanczos_sweep(Index N, ApplyFn&& apply, VerifyFn&& verify, ValueMap&& to_eigenvalue,
                            Index k, Index m_max, double tol, std::uint64_t seed,
                            const Eigen::MatrixXd& deflate) {
    Eigen::MatrixXd V(N, m_max + 1);
    Eigen::VectorXd alpha(m_max), beta(m_max);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto project_out = [&](Eigen::VectorXd& v, Index cols) {
        if (deflate.cols() > 0) {
            Eigen::VectorXd h = deflate.transpose() * v;
            v.noalias() -= deflate * h;
        }
        if (cols > 0) {
            Eigen::VectorXd h = V.leftCols(cols).transpose() * v;
            v.noalias() -= V.leftCols(cols) * h;
        }
    };
    auto random_unit_orthogonal = [&](Index cols) {
        Eigen::VectorXd v(N);
        for (int attempt = 0; attempt < 20; ++attempt) {
            for (Index i = 0; i < N; ++i) v(i) = gauss(rng);
            project_out(v, cols);
            project_out(v, cols);
            const double nrm = v.norm();
            if (nrm > 1e-8) return Eigen::VectorXd((v / nrm).eval());
        }
        throw numerical_error("lanczos: could not generate an orthogonal start vector");
    };
    V.col(0) = random_unit_orthogonal(0);

    LanczosResult best;
    Eigen::VectorXd w(N);
    Index next_check = std::max<Index>(2 * k + 10, 40);
    const Index span_cap = N - deflate.cols(); // the invariant complement is this big
    for (Index j = 0; j < m_max; ++j) {
        apply(V.col(j), w);
        if (j > 0) w.noalias() -= beta(j - 1) * V.col(j - 1);
        alpha(j) = V.col(j).dot(w);
        w.noalias() -= alpha(j) * V.col(j);
        project_out(w, j + 1);
        project_out(w, j + 1);
        beta(j) = w.norm();
        bool exhausted = false;
        if (beta(j) < 1e-13) {
            beta(j) = 0.0;
            if (j + 2 <= span_cap)
                V.col(j + 1) = random_unit_orthogonal(j + 1);
            else
                exhausted = true; // the Krylov basis spans the whole complement
        } else {
            V.col(j + 1) = w / beta(j);
        }

        const Index m = j + 1;
        if (!exhausted && (m < k + 2 || (m < next_check && m < m_max))) continue;
        if (exhausted && m < k)
            throw numerical_error("lanczos: subspace exhausted before " + std::to_string(k) +
                                  " pairs were available");
        next_check = std::min<Index>(m_max, static_cast<Index>(static_cast<double>(m) * 1.5) + 1);

        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
        for (Index i = 0; i < m; ++i) {
            T(i, i) = alpha(i);
            if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta(i);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        if (es.info() != Eigen::Success)
            throw numerical_error("lanczos: tridiagonal eigensolve failed");

        // Cheap relative screen on the operator residual before forming Ritz vectors.
        const double op_scale = std::max(std::abs(es.eigenvalues()(m - 1)),
                                         std::abs(es.eigenvalues()(0)));
        bool plausible = true;
        for (Index c = 0; c < k && plausible; ++c) {
            const double opres = std::abs(beta(j) * es.eigenvectors()(m - 1, m - 1 - c));
            if (opres > 1e-3 * std::max(op_scale, 1e-30)) plausible = false;
        }
        if (!plausible && m < m_max) continue;

        LanczosResult cand;
        cand.iterations = m;
        cand.values.resize(k);
        cand.vectors.resize(N, k);
        cand.residuals.resize(k);
        bool all_ok = true;
        for (Index c = 0; c < k; ++c) {
            const Index idx = m - 1 - c;
            Eigen::VectorXd x = V.leftCols(m) * es.eigenvectors().col(idx);
            x /= x.norm();
            const double theta = to_eigenvalue(es.eigenvalues()(idx));
            cand.values(c) = theta;
            cand.vectors.col(c) = x;
            cand.residuals(c) = verify(x, theta);
            if (!(cand.residuals(c) <= tol)) all_ok = false;
        }
        cand.converged = all_ok;
        best = std::move(cand);
        if (best.converged || exhausted) return best;
    }
    return best;
}

} // namespace detail

/// Largest (algebraic) k eigenpairs of a sparse symmetric matrix by Lanczos with full
/// reorthogonalization. May return unconverged estimates; check `converged`. Used
/// directly only where completeness against degenerate copies is not required (shift
/// estimation, probes); decompositions go through lanczos_shift_invert.
inline LanczosResult lanczos_largest(const SparseMatrix& M, Index k, LanczosOptions opt = {}) {
    const Index N = M.rows();
    if (M.cols() != N) throw validation_error("lanczos needs a square matrix");
    if (k < 1 || k >= N) throw validation_error("lanczos needs 1 <= k < N");
    const Index m_max = opt.max_subspace > 0 ? std::min(opt.max_subspace, N)
                                             : std::min<Index>(N, 400);
    if (m_max < k + 2) throw validation_error("lanczos subspace cap too small");
    return detail::lanczos_sweep(
        N, [&](const auto& x, Eigen::VectorXd& y) { y.noalias() = M * x; },
        [&](const Eigen::VectorXd& x, double theta) { return (M * x - theta * x).norm(); },
        [](double t) { return t; }, k, m_max, opt.tolerance, opt.seed, Eigen::MatrixXd(0, 0));
}

/// The k eigenvalues of a symmetric negative-semidefinite matrix closest to zero, by
/// shift-invert Lanczos: factor (sigma I - M) once (SPD for sigma > 0) and iterate on
/// its inverse, which turns the near-zero cluster into well-separated extremal
/// eigenvalues. Residuals are verified against M itself.
///
/// Degenerate eigenvalues converge one copy at a time from a single start vector, so
/// accepted pairs are locked, the iteration restarts deflated against them, and a probe
/// run certifies that no eigenvalue above the k-th accepted one was missed.
inline LanczosResult lanczos_shift_invert(const SparseMatrix& M, Index k, double sigma,
                                          LanczosOptions opt = {}) {
    const Index N = M.rows();
    if (k < 1 || k >= N) throw validation_error("lanczos needs 1 <= k < N");
    if (!(sigma > 0.0)) throw validation_error("shift must be positive");
    Eigen::SparseMatrix<double> B(N, N);
    {
        Eigen::SparseMatrix<double> I(N, N);
        I.setIdentity();
        B = sigma * I - Eigen::SparseMatrix<double>(M);
    }
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(B);
    if (solver.info() != Eigen::Success)
        throw numerical_error("shift-invert factorization failed (shift " +
                              std::to_string(sigma) + ")");
    auto apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = solver.solve(x); };
    auto verify = [&](const Eigen::VectorXd& x, double theta) {
        return (M * x - theta * x).norm();
    };
    auto to_theta = [sigma](double nu) { return sigma - 1.0 / nu; };
    const Index m_max = opt.max_subspace > 0 ? std::min(opt.max_subspace, N)
                                             : std::min<Index>(N, std::max<Index>(8 * k, 160));

    Eigen::MatrixXd locked(N, 0);
    Eigen::VectorXd locked_theta(0), locked_res(0);
    Index total_iterations = 0;
    std::uint64_t round_seed = opt.seed;
    auto lock = [&](const LanczosResult& r, Index count) {
        const Index old = locked.cols();
        locked.conservativeResize(N, old + count);
        locked_theta.conservativeResize(old + count);
        locked_res.conservativeResize(old + count);
        for (Index c = 0; c < count; ++c) {
            locked.col(old + c) = r.vectors.col(c);
            locked_theta(old + c) = r.values(c);
            locked_res(old + c) = r.residuals(c);
        }
    };

    const int max_rounds = static_cast<int>(k) + 8;
    for (int round = 0; round < max_rounds; ++round) {
        if (locked.cols() < k) {
            const Index want = k - locked.cols();
            LanczosResult r = detail::lanczos_sweep(N, apply, verify, to_theta, want,
                                                    m_max, opt.tolerance, round_seed++, locked);
            total_iterations += r.iterations;
            if (!r.converged) {
                // Merge what we have for diagnostics and report non-convergence.
                LanczosResult out = r;
                out.converged = false;
                out.iterations = total_iterations;
                return out;
            }
            lock(r, want);
            continue;
        }
        // Completeness probe: the largest eigenvalue of the deflated operator must lie
        // at or below the k-th accepted one, otherwise a degenerate copy was missed.
        LanczosResult probe = detail::lanczos_sweep(N, apply, verify, to_theta, 1, m_max,
                                                    opt.tolerance, round_seed++, locked);
        total_iterations += probe.iterations;
        if (!probe.converged) {
            LanczosResult out = probe;
            out.converged = false;
            out.iterations = total_iterations;
            return out;
        }
        double kth = locked_theta(0);
        for (Index c = 1; c < locked_theta.size(); ++c) kth = std::min(kth, locked_theta(c));
        const double margin = 1e-6 * std::max(std::abs(kth), 1e-9);
        if (probe.values(0) > kth + margin) {
            lock(probe, 1); // a missed copy strictly inside the wanted range
            continue;
        }
        break; // certified complete
    }
    if (locked.cols() < k)
        throw numerical_error("lanczos: completeness loop exceeded its round limit");

    // Order by eigenvalue descending (closest to zero first for our operators).
    std::vector<Index> order(static_cast<std::size_t>(locked.cols()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](Index a, Index b) { return locked_theta(a) > locked_theta(b); });
    LanczosResult out;
    out.converged = true;
    out.iterations = total_iterations;
    out.values.resize(k);
    out.vectors.resize(N, k);
    out.residuals.resize(k);
    for (Index c = 0; c < k; ++c) {
        out.values(c) = locked_theta(order[static_cast<std::size_t>(c)]);
        out.vectors.col(c) = locked.col(order[static_cast<std::size_t>(c)]);
        out.residuals(c) = locked_res(order[static_cast<std::size_t>(c)]);
    }
    return out;
}

} // namespace localkernels

#endif
