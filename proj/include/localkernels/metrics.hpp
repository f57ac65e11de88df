#ifndef LOCALKERNELS_METRICS_HPP
#define LOCALKERNELS_METRICS_HPP

#include <Eigen/Core>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>

#include "localkernels/errors.hpp"
#include "localkernels/point_cloud.hpp"

namespace localkernels {

/// ||u - v|| / ||v||.
inline double relative_l2(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    if (u.size() != v.size()) throw validation_error("relative_l2: length mismatch");
    const double ref = v.norm();
    if (!(ref > 0.0)) throw validation_error("relative_l2: zero reference norm");
    return (u - v).norm() / ref;
}

/// Principal angles (radians, ascending) between the column spans of U and V.
inline Eigen::VectorXd subspace_angles(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V) {
    if (U.rows() != V.rows()) throw validation_error("subspace_angles: row counts differ");
    if (U.cols() == 0 || V.cols() == 0)
        throw validation_error("subspace_angles: empty basis");
    auto orthonormalize = [](const Eigen::MatrixXd& M) {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU);
        const auto& sv = svd.singularValues();
        if (!(sv(sv.size() - 1) > 1e-12 * sv(0)))
            throw numerical_error("subspace_angles: rank-deficient basis");
        return Eigen::MatrixXd(svd.matrixU());
    };
    Eigen::MatrixXd Qu = orthonormalize(U);
    Eigen::MatrixXd Qv = orthonormalize(V);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(Qu.transpose() * Qv);
    const Index k = std::min(Qu.cols(), Qv.cols());
    Eigen::VectorXd angles(k);
    for (Index c = 0; c < k; ++c) {
        const double s = std::min(1.0, std::max(-1.0, svd.singularValues()(c)));
        angles(k - 1 - c) = std::acos(s); // singular values descend; angles ascend
    }
    return angles;
}

} // namespace localkernels

#endif
