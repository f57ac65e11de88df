#ifndef LOCALKERNELS_KERNELS_HPP
#define LOCALKERNELS_KERNELS_HPP

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "localkernels/errors.hpp"
#include "localkernels/point_cloud.hpp"

namespace localkernels {

/// Shape function h for radial kernels J(eps, x, y) = h(||x-y||^2 / eps).
struct RadialShape {
    std::function<double(double)> h;
    std::string name;
};

/// h(u) = exp(-u/4). Each tangent direction has variance 2, so the row-normalized
/// generator limits to the Laplacian with unit coefficient (the diffusion-maps scaling).
inline RadialShape gaussian_shape() {
    return {[](double u) { return std::exp(-0.25 * u); }, "gaussian"};
}

/// h(u) = exp(-u/2), unit variance per direction.
inline RadialShape gaussian_unit_shape() {
    return {[](double u) { return std::exp(-0.5 * u); }, "gaussian_unit"};
}

/// Compactly supported h(u) = max(1 - u, 0).
inline RadialShape truncated_parabola_shape() {
    return {[](double u) { return u < 1.0 ? 1.0 - u : 0.0; }, "truncated_parabola"};
}

/// A pairwise weight family K(eps, x, y) with exponential decay in the rescaled
/// displacement (y - x)/sqrt(eps). Immutable after construction; evaluation is safe
/// from any number of threads provided user-supplied field functions are.
class LocalKernel {
public:
    enum class Family { radial, prototypical, ica, jacobian, conformal };

    using MatrixField = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
    using VectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
    using RowEvaluator = std::function<double(Index, const Eigen::VectorXd&)>;

    /// J(eps, x, y) = h(||x-y||^2 / eps).
    static LocalKernel radial(RadialShape shape, double epsilon) {
        auto impl = std::make_shared<Impl>(Family::radial, epsilon);
        impl->shape = std::move(shape);
        return LocalKernel(std::move(impl));
    }

    /// Anisotropic Gaussian with position-dependent SPD covariance A(x) and drift b(x):
    ///   K = exp(-(y-x-eps b(x))^T A(x)^{-1} (y-x-eps b(x)) / (2 eps)),
    /// evaluated with the higher-order eps b^T A^{-1} b term dropped (the moments are
    /// unchanged). A(x)^{-1} is applied through a Cholesky solve.
    static LocalKernel prototypical(MatrixField A, VectorField b, double epsilon) {
        auto impl = std::make_shared<Impl>(Family::prototypical, epsilon);
        impl->A_field = std::move(A);
        impl->b_field = std::move(b);
        return LocalKernel(std::move(impl));
    }

    /// Drift-free pairwise kernel built from per-point SPD covariances:
    ///   K(eps, x_i, x_j) = exp(-(x_j-x_i)^T (C_i^{-1} + C_j^{-1}) (x_j-x_i) / (4 eps)).
    static LocalKernel ica(std::vector<Eigen::MatrixXd> covariances, double epsilon) {
        auto impl = std::make_shared<Impl>(Family::ica, epsilon);
        impl->factors.reserve(covariances.size());
        for (std::size_t i = 0; i < covariances.size(); ++i) {
            Eigen::LLT<Eigen::MatrixXd> llt(covariances[i]);
            if (llt.info() != Eigen::Success)
                throw numerical_error("ica covariance at point " + std::to_string(i) +
                                      " is not symmetric positive definite");
            impl->factors.push_back(std::move(llt));
        }
        return LocalKernel(std::move(impl));
    }

    /// Metric push-forward kernel from per-point linear maps J_i:
    ///   K(eps, x_i, x_j) = exp(-||J_i (x_j - x_i)||^2 / (2 eps)).
    static LocalKernel jacobian(std::vector<Eigen::MatrixXd> maps, double epsilon) {
        auto impl = std::make_shared<Impl>(Family::jacobian, epsilon);
        impl->maps = std::move(maps);
        return LocalKernel(std::move(impl));
    }

    /// Variable-bandwidth Gaussian driven by a per-point sampling density q > 0:
    ///   K(eps, x_i, x_j) = exp(-||x_j - x_i||^2 / (4 eps q_i^{-2/d})).
    /// The exponent decays: large density shrinks the bandwidth.
    static LocalKernel conformal(const Eigen::VectorXd& density, int intrinsic_dim,
                                 double epsilon) {
        if (intrinsic_dim < 1) throw validation_error("intrinsic dimension must be >= 1");
        auto impl = std::make_shared<Impl>(Family::conformal, epsilon);
        impl->density_pow.resize(density.size());
        for (Index i = 0; i < density.size(); ++i) {
            if (!(density(i) > 0.0) || !std::isfinite(density(i)))
                throw validation_error("conformal kernel density must be positive (point " +
                                       std::to_string(i) + ")");
            impl->density_pow(i) = std::pow(density(i), 2.0 / intrinsic_dim);
        }
        return LocalKernel(std::move(impl));
    }

    double epsilon() const { return impl_->epsilon; }
    Family family() const { return impl_->family; }
    bool symmetrized() const { return symmetrized_; }

    /// True when K(eps,x,y) = K(eps,y,x) identically.
    bool pairwise_symmetric() const {
        return symmetrized_ || impl_->family == Family::radial || impl_->family == Family::ica;
    }

    /// True when evaluation needs per-point data (covariances, maps, densities).
    bool index_based() const {
        return impl_->family == Family::ica || impl_->family == Family::jacobian ||
               impl_->family == Family::conformal;
    }

    double eval(Index i, Index j, const Eigen::VectorXd& xi, const Eigen::VectorXd& xj) const {
        double v = eval_one(i, j, xi, xj);
        if (symmetrized_) v += eval_one(j, i, xj, xi);
        return v;
    }

    /// Point-based convenience overload.
    double eval(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
        if (index_based())
            throw validation_error("this kernel family needs point indices for evaluation");
        return eval(0, 0, x, y);
    }

    /// An evaluator for K(eps, x_i, .) with the per-row state (field values, Cholesky
    /// factors) computed once. Used by matrix assembly and quadrature.
    RowEvaluator row_evaluator(Index i, const Eigen::VectorXd& xi) const {
        RowEvaluator base = row_evaluator_one(i, xi);
        if (!symmetrized_) return base;
        auto self = *this;
        return [self, base, i, xi](Index j, const Eigen::VectorXd& xj) {
            return base(j, xj) + self.eval_one(j, i, xj, xi);
        };
    }

    /// Kbar(eps,x,y) = K(eps,x,y) + K(eps,y,x); exactly symmetric in its arguments.
    friend LocalKernel symmetrize(const LocalKernel& k) {
        LocalKernel out = k;
        if (!out.symmetrized_) out.symmetrized_ = true;
        return out;
    }

private:
    struct Impl {
        Impl(Family f, double eps) : family(f), epsilon(eps) {
            if (!(eps > 0.0)) throw validation_error("kernel bandwidth epsilon must be positive");
        }
        Family family;
        double epsilon;
        RadialShape shape;                               // radial
        MatrixField A_field;                             // prototypical
        VectorField b_field;                             // prototypical
        std::vector<Eigen::LLT<Eigen::MatrixXd>> factors; // ica (Cholesky of C_i)
        std::vector<Eigen::MatrixXd> maps;               // jacobian
        Eigen::VectorXd density_pow;                     // conformal (q_i^{2/d})
    };

    explicit LocalKernel(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

    double eval_one(Index i, Index j, const Eigen::VectorXd& xi, const Eigen::VectorXd& xj) const {
        const double eps = impl_->epsilon;
        switch (impl_->family) {
        case Family::radial:
            return impl_->shape.h((xj - xi).squaredNorm() / eps);
        case Family::prototypical: {
            Eigen::VectorXd delta = xj - xi;
            Eigen::MatrixXd A = impl_->A_field(xi);
            Eigen::LLT<Eigen::MatrixXd> llt(A);
            if (llt.info() != Eigen::Success)
                throw numerical_error("prototypical covariance is not SPD at point index " +
                                      std::to_string(i));
            Eigen::VectorXd s = llt.solve(delta);
            double expo = -delta.dot(s) / (2.0 * eps);
            if (impl_->b_field) expo += s.dot(impl_->b_field(xi));
            return std::exp(expo);
        }
        case Family::ica: {
            check_index(i);
            check_index(j);
            Eigen::VectorXd delta = xj - xi;
            const double q = delta.dot(impl_->factors[static_cast<std::size_t>(i)].solve(delta)) +
                             delta.dot(impl_->factors[static_cast<std::size_t>(j)].solve(delta));
            return std::exp(-q / (4.0 * eps));
        }
        case Family::jacobian: {
            check_index(i);
            return std::exp(-(impl_->maps[static_cast<std::size_t>(i)] * (xj - xi)).squaredNorm() /
                            (2.0 * eps));
        }
        case Family::conformal: {
            check_index(i);
            return std::exp(-(xj - xi).squaredNorm() * impl_->density_pow(i) / (4.0 * eps));
        }
        }
        return 0.0;
    }

    RowEvaluator row_evaluator_one(Index i, const Eigen::VectorXd& xi) const {
        const double eps = impl_->epsilon;
        switch (impl_->family) {
        case Family::prototypical: {
            Eigen::MatrixXd A = impl_->A_field(xi);
            auto llt = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(A);
            if (llt->info() != Eigen::Success)
                throw numerical_error("prototypical covariance is not SPD at point index " +
                                      std::to_string(i));
            Eigen::VectorXd b;
            if (impl_->b_field) b = impl_->b_field(xi);
            return [llt, b, xi, eps](Index, const Eigen::VectorXd& xj) {
                Eigen::VectorXd delta = xj - xi;
                Eigen::VectorXd s = llt->solve(delta);
                double expo = -delta.dot(s) / (2.0 * eps);
                if (b.size() > 0) expo += s.dot(b);
                return std::exp(expo);
            };
        }
        default: {
            auto self = *this;
            return [self, i, xi](Index j, const Eigen::VectorXd& xj) {
                return self.eval_one(i, j, xi, xj);
            };
        }
        }
    }

    void check_index(Index i) const {
        const Index limit = impl_->family == Family::ica
                                ? static_cast<Index>(impl_->factors.size())
                                : (impl_->family == Family::jacobian
                                       ? static_cast<Index>(impl_->maps.size())
                                       : impl_->density_pow.size());
        if (i < 0 || i >= limit)
            throw validation_error("kernel point index " + std::to_string(i) +
                                   " outside per-point data range");
    }

    std::shared_ptr<const Impl> impl_;
    bool symmetrized_ = false;
};

LocalKernel symmetrize(const LocalKernel& k);

/// Tangent-space integrals of a kernel against {1, z/sqrt(eps), z z^T}.
struct KernelMoments {
    double m = 0.0;        // zeroth moment
    Eigen::VectorXd mu;    // first moment (drift), length d
    Eigen::MatrixXd C;     // second moment, d x d symmetric PSD
};

namespace detail {
inline void require_orthonormal_rows(const Eigen::MatrixXd& basis, double tol = 1e-10) {
    if (basis.rows() < 1 || basis.cols() < basis.rows())
        throw validation_error("tangent basis must be d x n with d <= n");
    Eigen::MatrixXd gram = basis * basis.transpose();
    gram -= Eigen::MatrixXd::Identity(basis.rows(), basis.rows());
    if (gram.cwiseAbs().maxCoeff() > tol)
        throw validation_error("tangent basis rows are not orthonormal");
}
} // namespace detail

/// Closed-form moments of the prototypical kernel with covariance A and drift b,
/// restricted to the tangent space spanned by the orthonormal rows of `tangent_basis`:
///   m = (2 pi)^{d/2} det(I A I^T)^{1/2},  mu = m I b,  C = m I A I^T.
inline KernelMoments prototypical_moments(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                          const Eigen::MatrixXd& tangent_basis) {
    detail::require_orthonormal_rows(tangent_basis);
    const Index d = tangent_basis.rows();
    if (A.rows() != tangent_basis.cols() || A.cols() != tangent_basis.cols())
        throw validation_error("covariance dimension does not match the tangent basis");
    Eigen::MatrixXd At = tangent_basis * A * tangent_basis.transpose();
    Eigen::LLT<Eigen::MatrixXd> llt(At);
    if (llt.info() != Eigen::Success)
        throw numerical_error("restricted covariance I A I^T is not SPD");
    double det = 1.0;
    for (Index i = 0; i < d; ++i) det *= llt.matrixL()(i, i);
    KernelMoments out;
    out.m = std::pow(2.0 * std::numbers::pi, 0.5 * static_cast<double>(d)) * det;
    out.mu = out.m * (tangent_basis * b);
    out.C = out.m * At;
    return out;
}

/// Monte-Carlo moment estimates with standard errors.
struct MonteCarloMoments {
    KernelMoments value;
    double m_stderr = 0.0;
    Eigen::VectorXd mu_stderr;
    Eigen::MatrixXd C_stderr;
    double epsilon = 0.0;   // the finite bandwidth the integrals were taken at
    std::size_t samples = 0;
};

/// Uniform-box quadrature of the moment integrals of `kernel` at base point x (index
/// `base_index` for per-point families), over z in [-R, R]^d mapped through the
/// orthonormal tangent basis: y = x + sqrt(eps) I^T z. The kernel's own (small, fixed)
/// epsilon is used; the estimate carries the finite-bandwidth bias documented with it.
inline MonteCarloMoments monte_carlo_moments(const LocalKernel& kernel, Index base_index,
                                             const Eigen::VectorXd& x,
                                             const Eigen::MatrixXd& tangent_basis,
                                             std::size_t sample_count,
                                             std::uint64_t seed = 0x6b5f3a9d,
                                             double box_radius = 10.0) {
    detail::require_orthonormal_rows(tangent_basis);
    if (sample_count < 1000)
        throw validation_error("monte_carlo_moments needs at least 1000 samples");
    const Index d = tangent_basis.rows();
    const double eps = kernel.epsilon();
    const double sqrt_eps = std::sqrt(eps);
    const double volume = std::pow(2.0 * box_radius, static_cast<double>(d));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-box_radius, box_radius);
    auto evaluate = kernel.row_evaluator(base_index, x);

    double sum_k = 0.0, sum_k2 = 0.0;
    Eigen::VectorXd z(d);
    Eigen::VectorXd sum_zk = Eigen::VectorXd::Zero(d), sum_zk2 = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd sum_zzk = Eigen::MatrixXd::Zero(d, d), sum_zzk2 = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t s = 0; s < sample_count; ++s) {
        for (Index a = 0; a < d; ++a) z(a) = unif(rng);
        Eigen::VectorXd y = x + sqrt_eps * (tangent_basis.transpose() * z);
        const double k = evaluate(base_index, y);
        sum_k += k;
        sum_k2 += k * k;
        for (Index a = 0; a < d; ++a) {
            const double v = z(a) * k;
            sum_zk(a) += v;
            sum_zk2(a) += v * v;
        }
        for (Index a = 0; a < d; ++a)
            for (Index c = 0; c < d; ++c) {
                const double v = z(a) * z(c) * k;
                sum_zzk(a, c) += v;
                sum_zzk2(a, c) += v * v;
            }
    }
    const double n = static_cast<double>(sample_count);
    auto stderr_of = [&](double sum, double sumsq) {
        const double mean = sum / n;
        const double var = std::max(0.0, sumsq / n - mean * mean);
        return volume * std::sqrt(var / n);
    };

    MonteCarloMoments out;
    out.epsilon = eps;
    out.samples = sample_count;
    out.value.m = volume * sum_k / n;
    out.m_stderr = stderr_of(sum_k, sum_k2);
    out.value.mu = (volume / (n * sqrt_eps)) * sum_zk;
    out.value.C = (volume / n) * sum_zzk;
    out.mu_stderr.resize(d);
    for (Index a = 0; a < d; ++a)
        out.mu_stderr(a) = stderr_of(sum_zk(a), sum_zk2(a)) / sqrt_eps;
    out.C_stderr.resize(d, d);
    for (Index a = 0; a < d; ++a)
        for (Index c = 0; c < d; ++c) out.C_stderr(a, c) = stderr_of(sum_zzk(a, c), sum_zzk2(a, c));
    return out;
}

/// Monte-Carlo estimates of the third moments \int w_a w_b w_c K dz for a <= b <= c,
/// where w = z - center, with standard errors. Skew-free kernels have all of these
/// vanish; for drifted kernels pass center = sqrt(eps) I b, since the raw moments only
/// vanish in the eps -> 0 limit.
struct ThirdMoments {
    std::vector<std::array<int, 3>> triples;
    Eigen::VectorXd values;
    Eigen::VectorXd stderrs;
};

inline ThirdMoments monte_carlo_third_moments(const LocalKernel& kernel, Index base_index,
                                              const Eigen::VectorXd& x,
                                              const Eigen::MatrixXd& tangent_basis,
                                              std::size_t sample_count,
                                              std::uint64_t seed = 0x51c0ffee,
                                              double box_radius = 10.0,
                                              const Eigen::VectorXd& center = Eigen::VectorXd()) {
    detail::require_orthonormal_rows(tangent_basis);
    if (sample_count < 1000)
        throw validation_error("monte_carlo_third_moments needs at least 1000 samples");
    const Index d = tangent_basis.rows();
    ThirdMoments out;
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b)
            for (int c = b; c < d; ++c) out.triples.push_back({a, b, c});
    const Index t = static_cast<Index>(out.triples.size());
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(t), sumsq = Eigen::VectorXd::Zero(t);

    const double eps = kernel.epsilon();
    const double sqrt_eps = std::sqrt(eps);
    const double volume = std::pow(2.0 * box_radius, static_cast<double>(d));
    Eigen::VectorXd shift = center.size() == d ? center : Eigen::VectorXd::Zero(d);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-box_radius, box_radius);
    auto evaluate = kernel.row_evaluator(base_index, x);
    Eigen::VectorXd z(d), w(d);
    for (std::size_t s = 0; s < sample_count; ++s) {
        for (Index a = 0; a < d; ++a) z(a) = unif(rng);
        Eigen::VectorXd y = x + sqrt_eps * (tangent_basis.transpose() * z);
        const double k = evaluate(base_index, y);
        w = z - shift;
        for (Index q = 0; q < t; ++q) {
            const auto& tr = out.triples[static_cast<std::size_t>(q)];
            const double v = w(tr[0]) * w(tr[1]) * w(tr[2]) * k;
            sum(q) += v;
            sumsq(q) += v * v;
        }
    }
    const double n = static_cast<double>(sample_count);
    out.values = (volume / n) * sum;
    out.stderrs.resize(t);
    for (Index q = 0; q < t; ++q) {
        const double mean = sum(q) / n;
        const double var = std::max(0.0, sumsq(q) / n - mean * mean);
        out.stderrs(q) = volume * std::sqrt(var / n);
    }
    return out;
}

} // namespace localkernels

#endif
