#ifndef LOCALKERNELS_ANALYTIC_HPP
#define LOCALKERNELS_ANALYTIC_HPP

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "localkernels/errors.hpp"
#include "localkernels/kernels.hpp"
#include "localkernels/manifolds.hpp"

namespace localkernels {

/// Closed-form reference solutions for the synthetic experiments. Pure functions;
/// reproducible to quadrature tolerance across runs.
namespace analytic {

/// A scalar field on the 2-torus with the derivatives needed to apply second-order
/// operators in (theta, phi) coordinates.
struct ScalarField2 {
    std::function<double(double, double)> value;
    std::function<double(double, double)> d_theta;
    std::function<double(double, double)> d_phi;
    std::function<double(double, double)> d_theta_theta;
    std::function<double(double, double)> d_theta_phi;
    std::function<double(double, double)> d_phi_phi;
};

// ---------------------------------------------------------------------------
// Flat torus in R^4 with the designed anisotropic generator
//   L f   = mu . grad f + C : hess f,        mu = (2 + sin th, 0),
//   L* f  = -div(mu f) + hess : (C f),       C  = [[3 + sin ph, 1], [1, 1]].
// The (theta, phi) coordinates are geodesic for this embedding, so covariant
// derivatives are plain partials.
// ---------------------------------------------------------------------------
namespace flat_torus {

inline Eigen::Vector2d drift(double theta, double /*phi*/) {
    return {2.0 + std::sin(theta), 0.0};
}

inline Eigen::Matrix2d diffusion(double /*theta*/, double phi) {
    Eigen::Matrix2d C;
    C << 3.0 + std::sin(phi), 1.0, 1.0, 1.0;
    return C;
}

/// Rows are the (orthonormal) tangent vectors of the embedding at (theta, phi).
inline Eigen::Matrix<double, 2, 4> tangent_rows(double theta, double phi) {
    Eigen::Matrix<double, 2, 4> D;
    D << std::cos(theta), -std::sin(theta), 0.0, 0.0,
         0.0, 0.0, std::cos(phi), -std::sin(phi);
    return D;
}

/// Recovers the intrinsic angles from an embedded point (exact inverse of the chart).
inline Eigen::Vector2d angles_from_point(const Eigen::VectorXd& x) {
    if (x.size() != 4) throw validation_error("flat-torus point must lie in R^4");
    return {std::atan2(x(0), x(1)), std::atan2(x(2), x(3))};
}

/// The test function f = sin(theta) sin(2 phi) used throughout the generator checks.
inline ScalarField2 default_test_function() {
    ScalarField2 f;
    f.value = [](double t, double p) { return std::sin(t) * std::sin(2 * p); };
    f.d_theta = [](double t, double p) { return std::cos(t) * std::sin(2 * p); };
    f.d_phi = [](double t, double p) { return 2.0 * std::sin(t) * std::cos(2 * p); };
    f.d_theta_theta = [](double t, double p) { return -std::sin(t) * std::sin(2 * p); };
    f.d_theta_phi = [](double t, double p) { return 2.0 * std::cos(t) * std::cos(2 * p); };
    f.d_phi_phi = [](double t, double p) { return -4.0 * std::sin(t) * std::sin(2 * p); };
    return f;
}

/// mu . grad f + C : hess f at (theta, phi).
inline double apply_generator(const ScalarField2& f, double t, double p) {
    const Eigen::Vector2d mu = drift(t, p);
    const Eigen::Matrix2d C = diffusion(t, p);
    return mu(0) * f.d_theta(t, p) + mu(1) * f.d_phi(t, p) + C(0, 0) * f.d_theta_theta(t, p) +
           2.0 * C(0, 1) * f.d_theta_phi(t, p) + C(1, 1) * f.d_phi_phi(t, p);
}

/// -div(mu f) + hess : (C f) expanded with the closed-form field derivatives:
/// d_theta(mu_1) = cos(theta); C_11 depends only on phi, C_12 = C_22 = 1.
inline double apply_adjoint(const ScalarField2& f, double t, double p) {
    return -std::cos(t) * f.value(t, p) - (2.0 + std::sin(t)) * f.d_theta(t, p) +
           (3.0 + std::sin(p)) * f.d_theta_theta(t, p) + 2.0 * f.d_theta_phi(t, p) +
           f.d_phi_phi(t, p);
}

/// L f on every grid point for the default test function, in closed form:
/// (2+sin th) cos th sin 2ph - (3+sin ph) sin th sin 2ph + 4 cos th cos 2ph - 4 sin th sin 2ph.
inline Eigen::VectorXd generator_values(const Eigen::MatrixXd& intrinsic) {
    Eigen::VectorXd out(intrinsic.rows());
    for (Index i = 0; i < intrinsic.rows(); ++i) {
        const double t = intrinsic(i, 0), p = intrinsic(i, 1);
        out(i) = (2.0 + std::sin(t)) * std::cos(t) * std::sin(2 * p) -
                 (3.0 + std::sin(p)) * std::sin(t) * std::sin(2 * p) +
                 4.0 * std::cos(t) * std::cos(2 * p) - 4.0 * std::sin(t) * std::sin(2 * p);
    }
    return out;
}

/// L* f on every grid point for the default test function, in closed form.
inline Eigen::VectorXd adjoint_values(const Eigen::MatrixXd& intrinsic) {
    Eigen::VectorXd out(intrinsic.rows());
    for (Index i = 0; i < intrinsic.rows(); ++i) {
        const double t = intrinsic(i, 0), p = intrinsic(i, 1);
        out(i) = -(2.0 + std::sin(t)) * std::cos(t) * std::sin(2 * p) -
                 std::cos(t) * std::sin(t) * std::sin(2 * p) -
                 (3.0 + std::sin(p)) * std::sin(t) * std::sin(2 * p) +
                 4.0 * std::cos(t) * std::cos(2 * p) - 4.0 * std::sin(t) * std::sin(2 * p);
    }
    return out;
}

/// Generic evaluation of L f / L* f for a user-supplied field with derivatives.
inline Eigen::VectorXd generator_values(const ScalarField2& f, const Eigen::MatrixXd& intrinsic) {
    Eigen::VectorXd out(intrinsic.rows());
    for (Index i = 0; i < intrinsic.rows(); ++i)
        out(i) = apply_generator(f, intrinsic(i, 0), intrinsic(i, 1));
    return out;
}

inline Eigen::VectorXd adjoint_values(const ScalarField2& f, const Eigen::MatrixXd& intrinsic) {
    Eigen::VectorXd out(intrinsic.rows());
    for (Index i = 0; i < intrinsic.rows(); ++i)
        out(i) = apply_adjoint(f, intrinsic(i, 0), intrinsic(i, 1));
    return out;
}

/// The anisotropic kernel whose row-normalized generator limits to L above: a
/// prototypical kernel with drift b = Dι^T mu and covariance A = Dι^T (2C) Dι
/// completed by the identity on the normal directions (SPD in R^4, harmless at order
/// epsilon). Field functions invert the chart, so the kernel is a function of the
/// ambient point alone.
inline LocalKernel designed_kernel(double epsilon) {
    LocalKernel::MatrixField A = [](const Eigen::VectorXd& x) {
        const Eigen::Vector2d a = angles_from_point(x);
        const Eigen::Matrix<double, 2, 4> D = tangent_rows(a(0), a(1));
        Eigen::Matrix4d P = D.transpose() * D; // tangent projector
        return Eigen::MatrixXd(D.transpose() * (2.0 * diffusion(a(0), a(1))) * D +
                               (Eigen::Matrix4d::Identity() - P));
    };
    LocalKernel::VectorField b = [](const Eigen::VectorXd& x) {
        const Eigen::Vector2d a = angles_from_point(x);
        return Eigen::VectorXd(tangent_rows(a(0), a(1)).transpose() * drift(a(0), a(1)));
    };
    return LocalKernel::prototypical(std::move(A), std::move(b), epsilon);
}

} // namespace flat_torus

// ---------------------------------------------------------------------------
// Torus of revolution in R^3
// ---------------------------------------------------------------------------
namespace curved_torus {

/// Columns are d(iota)/d(theta) and d(iota)/d(phi) at (theta, phi).
inline Eigen::Matrix<double, 3, 2> jacobian(double theta, double phi, double major_radius) {
    Eigen::Matrix<double, 3, 2> D;
    const double w = major_radius + std::sin(theta);
    D << std::cos(theta) * std::cos(phi), -w * std::sin(phi),
         std::cos(theta) * std::sin(phi), w * std::cos(phi),
         -std::sin(theta), 0.0;
    return D;
}

/// Moore-Penrose pseudo-inverse (D^T D)^{-1} D^T; D^T D = diag(1, w^2) here.
inline Eigen::Matrix<double, 2, 3> jacobian_pinv(double theta, double phi, double major_radius) {
    const Eigen::Matrix<double, 3, 2> D = jacobian(theta, phi, major_radius);
    const double w = major_radius + std::sin(theta);
    Eigen::Matrix2d gi = Eigen::Matrix2d::Zero();
    gi(0, 0) = 1.0;
    gi(1, 1) = 1.0 / (w * w);
    return gi * D.transpose();
}

/// Per-point maps Dι^+ pulling ambient displacements back to flat (theta, phi)
/// displacements; the jacobian kernel family built on these recovers the flat metric.
inline std::vector<Eigen::MatrixXd> flattening_maps(const PointCloud& cloud,
                                                    double major_radius) {
    if (!cloud.has_intrinsic() || cloud.intrinsic_dim() != 2)
        throw validation_error("flattening maps need the intrinsic (theta, phi) coordinates");
    std::vector<Eigen::MatrixXd> maps;
    maps.reserve(static_cast<std::size_t>(cloud.size()));
    for (Index i = 0; i < cloud.size(); ++i)
        maps.emplace_back(
            jacobian_pinv(cloud.intrinsic(i, 0), cloud.intrinsic(i, 1), major_radius));
    return maps;
}

} // namespace curved_torus

// ---------------------------------------------------------------------------
// Ellipse (cos theta, a sin theta)
// ---------------------------------------------------------------------------
namespace ellipse {

/// Metric coefficient g(theta) = 1 + (a^2 - 1) cos^2(theta) (squared speed).
inline double metric(double theta, double a) {
    const double c = std::cos(theta);
    return 1.0 + (a * a - 1.0) * c * c;
}

/// Sampling density of the angle-uniform construction with respect to arc length,
/// q(theta) = 1/sqrt(g(theta)) (unnormalized).
inline double sampling_density(double theta, double a) { return 1.0 / std::sqrt(metric(theta, a)); }

namespace detail {

template <typename Fn>
double adaptive_simpson(Fn&& f, double lo, double hi, double fl, double fm, double fh, double whole,
                        double tol, int depth) {
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
    const double flm = f(lm), frm = f(rm);
    const double left = (mid - lo) / 6.0 * (fl + 4.0 * flm + fm);
    const double right = (hi - mid) / 6.0 * (fm + 4.0 * frm + fh);
    if (depth <= 0) return left + right;
    if (std::abs(left + right - whole) <= 15.0 * tol) return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, lo, mid, fl, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, mid, hi, fm, frm, fh, right, 0.5 * tol, depth - 1);
}

template <typename Fn>
double integrate(Fn&& f, double lo, double hi, double tol) {
    const double fl = f(lo), fh = f(hi), fm = f(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (fl + 4.0 * fm + fh);
    return adaptive_simpson(f, lo, hi, fl, fm, fh, whole, tol, 48);
}

} // namespace detail

/// The monotone phase z(theta) with z'(theta) = sqrt(g(theta)), computed by adaptive
/// quadrature (tolerance 1e-10) and rescaled so z(2 pi) = 2 pi: the first circle
/// harmonics sin(z), cos(z) then close up periodically.
inline Eigen::VectorXd arclength_phase(const Eigen::VectorXd& thetas, double a,
                                       double tol = 1e-10) {
    if (!(a > 0.0)) throw validation_error("ellipse minor axis must be positive");
    auto speed = [a](double t) { return std::sqrt(metric(t, a)); };
    std::vector<Index> order(static_cast<std::size_t>(thetas.size()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](Index x, Index y) { return thetas(x) < thetas(y); });
    Eigen::VectorXd z(thetas.size());
    double acc = 0.0, prev = 0.0;
    for (Index c = 0; c < thetas.size(); ++c) {
        const double t = thetas(order[static_cast<std::size_t>(c)]);
        if (t < prev) throw validation_error("arclength phase needs theta >= 0");
        acc += detail::integrate(speed, prev, t, tol);
        z(order[static_cast<std::size_t>(c)]) = acc;
        prev = t;
    }
    const double total = acc + detail::integrate(speed, prev, two_pi, tol);
    return z * (two_pi / total);
}

/// The first nontrivial Laplacian eigenfunctions of the arc-length metric evaluated on
/// the angle grid: (sin z(theta), cos z(theta)).
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> eigenfunctions(const Eigen::VectorXd& thetas,
                                                                  double a) {
    Eigen::VectorXd z = arclength_phase(thetas, a);
    return {z.array().sin().matrix(), z.array().cos().matrix()};
}

} // namespace ellipse

} // namespace analytic

} // namespace localkernels

#endif
