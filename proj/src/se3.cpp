#include "cross/se3.hpp"

#include <cmath>

namespace cross {

Mat3 so3_exp(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 K = skew(phi);
  if (theta < kSmallAngle) {
    return Mat3::Identity() + K + 0.5 * K * K;
  }
  const double s = std::sin(theta) / theta;
  const double c = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + s * K + c * K * K;
}

Vec3 so3_log(const Mat3& R) {
  const double cos_theta = std::clamp(0.5 * (R.trace() - 1.0), -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  if (theta >= M_PI - kLogBranchGuard) {
    throw AngleNearPi();
  }
  const Vec3 w = vee(R - R.transpose());
  if (theta < kSmallAngle) {
    return 0.5 * w;
  }
  return (theta / (2.0 * std::sin(theta))) * w;
}

Mat3 so3_left_jacobian(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 K = skew(phi);
  if (theta < kSmallAngle) {
    return Mat3::Identity() + 0.5 * K + (1.0 / 6.0) * K * K;
  }
  const double t2 = theta * theta;
  const double a = (1.0 - std::cos(theta)) / t2;
  const double b = (theta - std::sin(theta)) / (t2 * theta);
  return Mat3::Identity() + a * K + b * K * K;
}

Mat3 so3_left_jacobian_inv(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 K = skew(phi);
  double c;
  if (theta < 1e-4) {
    const double t2 = theta * theta;
    c = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    c = (1.0 - theta * std::sin(theta) / (2.0 * (1.0 - std::cos(theta)))) / (theta * theta);
  }
  return Mat3::Identity() - 0.5 * K + c * K * K;
}

Pose exp_map(const Twist& xi) {
  const Vec3 rho = xi.head<3>();
  const Vec3 phi = xi.tail<3>();
  // The translation factor of the SE(3) exponential is the SO(3) left Jacobian.
  return Pose(so3_exp(phi), so3_left_jacobian(phi) * rho);
}

Twist log_map(const Pose& T) {
  const Vec3 phi = so3_log(T.R);
  Twist xi;
  xi.tail<3>() = phi;
  xi.head<3>() = so3_left_jacobian_inv(phi) * T.t;
  return xi;
}

Mat6 adjoint(const Pose& T) {
  Mat6 ad = Mat6::Zero();
  ad.topLeftCorner<3, 3>() = T.R;
  ad.bottomRightCorner<3, 3>() = T.R;
  ad.topRightCorner<3, 3>() = skew(T.t) * T.R;
  return ad;
}

namespace {

// Translation-rotation coupling block of the SE(3) left Jacobian
// (the Q matrix in Barfoot's closed form).
Mat3 se3_q_matrix(const Vec3& rho, const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 P = skew(rho);
  const Mat3 K = skew(phi);

  double c1, c2, c3;
  if (theta < 1e-3) {
    const double t2 = theta * theta;
    c1 = 1.0 / 6.0 - t2 / 120.0;
    c2 = 1.0 / 24.0 - t2 / 720.0;
    // -(theta - sin(theta) - theta^3/6)/theta^5 = 1/120 - theta^2/5040 + ...
    c3 = 1.0 / 120.0 - t2 / 5040.0;
  } else {
    const double t2 = theta * theta;
    const double t4 = t2 * t2;
    const double st = std::sin(theta);
    const double ct = std::cos(theta);
    c1 = (theta - st) / (t2 * theta);
    c2 = (1.0 - 0.5 * t2 - ct) / t4;
    c3 = -(theta - st - t2 * theta / 6.0) / (t4 * theta);
  }

  Mat3 q = 0.5 * P;
  q += c1 * (K * P + P * K + K * P * K);
  q -= c2 * (K * K * P + P * K * K - 3.0 * K * P * K);
  q -= 0.5 * (c2 - 3.0 * c3) * (K * P * K * K + K * K * P * K);
  return q;
}

}  // namespace

Mat6 se3_left_jacobian_inv(const Twist& xi) {
  const Vec3 rho = xi.head<3>();
  const Vec3 phi = xi.tail<3>();
  const Mat3 jinv = so3_left_jacobian_inv(phi);
  const Mat3 q = se3_q_matrix(rho, phi);
  Mat6 out = Mat6::Zero();
  out.topLeftCorner<3, 3>() = jinv;
  out.bottomRightCorner<3, 3>() = jinv;
  out.topRightCorner<3, 3>() = -jinv * q * jinv;
  return out;
}

Mat6 se3_right_jacobian_inv(const Twist& xi) {
  return se3_left_jacobian_inv(-xi);
}

double weighted_distance(const Pose& a, const Pose& b, const Vec6& w_diag) {
  const Twist delta = log_map(a.inverse() * b);
  return w_diag.cwiseProduct(delta).norm();
}

Pose frechet_mean(const std::vector<Pose>& poses, const std::vector<double>& weights) {
  if (poses.empty() || poses.size() != weights.size()) {
    throw Error("frechet_mean: poses and weights must be nonempty and same length");
  }
  double total = 0.0;
  std::size_t seed = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw Error("frechet_mean: negative weight");
    total += weights[i];
    if (weights[i] > weights[seed]) seed = i;
  }
  if (total <= 0.0) throw Error("frechet_mean: total weight must be positive");

  Pose mu = poses[seed];
  for (int iter = 0; iter < 100; ++iter) {
    Twist step = Twist::Zero();
    const Pose mu_inv = mu.inverse();
    for (std::size_t i = 0; i < poses.size(); ++i) {
      if (weights[i] == 0.0) continue;
      step += (weights[i] / total) * log_map(mu_inv * poses[i]);
    }
    mu = mu * exp_map(step);
    if (step.norm() < 1e-10) {
      return mu;
    }
  }
  throw NoConvergence("frechet_mean did not converge in 100 iterations");
}

}  // namespace cross
