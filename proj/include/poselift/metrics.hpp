#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>

#include "poselift/errors.hpp"
#include "poselift/pose.hpp"

namespace poselift {

/// Mean per-joint position error (mm). Inputs are taken as given; callers
/// root-center beforehand when comparing root-relative predictions.
inline double mpjpe(const Pose3D& pred, const Pose3D& gt) {
    if (pred.joints() != gt.joints()) throw SkeletonMismatch("mpjpe: joint count");
    double acc = 0.0;
    for (int j = 0; j < pred.joints(); ++j) {
        const double dx = pred.x(j) - gt.x(j);
        const double dy = pred.y(j) - gt.y(j);
        const double dz = pred.z(j) - gt.z(j);
        acc += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    return acc / pred.joints();
}

/// Optimal similarity transform (rotation, uniform scale, translation) of
/// pred onto gt in the least-squares sense, then the aligned pose.
inline Pose3D procrustes_align(const Pose3D& pred, const Pose3D& gt) {
    if (pred.joints() != gt.joints()) throw SkeletonMismatch("procrustes: joint count");
    const int n = pred.joints();
    Eigen::MatrixXd X(n, 3), Y(n, 3);
    for (int j = 0; j < n; ++j) {
        X.row(j) << pred.x(j), pred.y(j), pred.z(j);
        Y.row(j) << gt.x(j), gt.y(j), gt.z(j);
    }
    const Eigen::RowVector3d mx = X.colwise().mean();
    const Eigen::RowVector3d my = Y.colwise().mean();
    X.rowwise() -= mx;
    Y.rowwise() -= my;

    const double var_x = X.squaredNorm();
    const double var_y = Y.squaredNorm();
    if (var_y <= 0.0) throw DegeneratePose("procrustes: gt has zero spatial variance");
    if (var_x <= 0.0) throw DegeneratePose("procrustes: pred has zero spatial variance");

    // Umeyama: R from the SVD of the cross-covariance, with a reflection
    // guard; scale from the projected trace.
    const Eigen::Matrix3d H = X.transpose() * Y;
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d U = svd.matrixU();
    Eigen::Matrix3d V = svd.matrixV();
    Eigen::Vector3d S = svd.singularValues();
    Eigen::Vector3d d = Eigen::Vector3d::Ones();
    if ((V * U.transpose()).determinant() < 0) d(2) = -1.0;
    const Eigen::Matrix3d R = V * d.asDiagonal() * U.transpose();
    const double scale = (S.array() * d.array()).sum() / var_x;

    Pose3D out(n);
    for (int j = 0; j < n; ++j) {
        const Eigen::Vector3d p = scale * R * X.row(j).transpose() + my.transpose();
        out.x(j) = p(0);
        out.y(j) = p(1);
        out.z(j) = p(2);
    }
    return out;
}

/// MPJPE after Procrustes alignment of pred onto gt.
inline double pa_mpjpe(const Pose3D& pred, const Pose3D& gt) {
    return mpjpe(procrustes_align(pred, gt), gt);
}

}  // namespace poselift
