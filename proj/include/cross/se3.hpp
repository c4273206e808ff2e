#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>
#include <vector>

#include "cross/errors.hpp"

namespace cross {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat4 = Eigen::Matrix4d;

// Tangent vector in (rho, phi) order: translational part first, rotational
// part last. All 6x6 covariances and Jacobians use the same ordering.
using Twist = Vec6;
using Cov6 = Mat6;

constexpr double kSmallAngle = 1e-8;     // series fallback below this
constexpr double kLogBranchGuard = 1e-6; // log map refuses angles >= pi - guard

/// Rigid transform in SE(3). Value type, cheap to copy.
struct Pose {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  Pose() = default;
  Pose(const Mat3& rot, const Vec3& trans) : R(rot), t(trans) {}

  static Pose identity() { return Pose(); }

  Pose operator*(const Pose& other) const {
    return Pose(R * other.R, R * other.t + t);
  }

  Pose inverse() const { return Pose(R.transpose(), -(R.transpose() * t)); }

  Vec3 operator*(const Vec3& p) const { return R * p + t; }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = R;
    m.topRightCorner<3, 1>() = t;
    return m;
  }

  bool isApprox(const Pose& other, double tol = 1e-12) const {
    return R.isApprox(other.R, tol) && ((t - other.t).norm() <= tol);
  }
};

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

inline Vec3 vee(const Mat3& m) {
  return Vec3(m(2, 1), m(0, 2), m(1, 0));
}

// SO(3) pieces. exp is closed-form Rodrigues, log uses the principal branch
// and throws AngleNearPi within kLogBranchGuard of pi.
Mat3 so3_exp(const Vec3& phi);
Vec3 so3_log(const Mat3& R);
Mat3 so3_left_jacobian(const Vec3& phi);
Mat3 so3_left_jacobian_inv(const Vec3& phi);

Pose exp_map(const Twist& xi);
Twist log_map(const Pose& T);  // throws AngleNearPi

/// 6x6 adjoint of T: [R, [t]x R; 0, R] in (rho, phi) order.
/// Satisfies exp(Ad_T xi) = T exp(xi) T^-1.
Mat6 adjoint(const Pose& T);

/// SE(3) left Jacobian inverse at xi, and the right version
/// J_r^-1(xi) = J_l^-1(-xi). Used for analytic residual Jacobians.
Mat6 se3_left_jacobian_inv(const Twist& xi);
Mat6 se3_right_jacobian_inv(const Twist& xi);

/// || w .* log(a^-1 b) ||_2 with nonnegative diagonal weights w.
/// Symmetric because log(T^-1) = -log(T). Propagates AngleNearPi.
double weighted_distance(const Pose& a, const Pose& b, const Vec6& w_diag);

/// Weighted Riemannian mean via fixed-point iteration
///   mu <- mu * exp(sum_j wbar_j log(mu^-1 mu_j))
/// until the update norm drops below 1e-10 (at most 100 iterations).
/// Requires nonnegative weights with positive sum. Throws NoConvergence
/// when the iteration fails to settle.
Pose frechet_mean(const std::vector<Pose>& poses, const std::vector<double>& weights);

}  // namespace cross
