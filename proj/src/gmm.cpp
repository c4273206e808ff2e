#include "cross/gmm.hpp"

#include <cmath>

#include "cross/errors.hpp"

namespace cross {

double BeliefMixture::total_weight() const {
  double s = 0.0;
  for (const auto& c : components) s += c.weight;
  return s;
}

const GaussianComponent& BeliefMixture::dominant() const {
  if (components.empty()) throw Error("dominant() on empty mixture");
  std::size_t best = 0;
  for (std::size_t i = 1; i < components.size(); ++i) {
    if (components[i].weight > components[best].weight) best = i;
  }
  return components[best];
}

Cov6 regularize_cov(const Cov6& cov, double jitter) {
  Cov6 sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Cov6> es(sym);
  if (es.eigenvalues().minCoeff() < jitter) {
    sym += jitter * Cov6::Identity();
  }
  return sym;
}

BeliefMixture normalize(const BeliefMixture& m) {
  const double total = m.total_weight();
  if (total <= 1e-300) throw ZeroMass();
  BeliefMixture out = m;
  for (auto& c : out.components) c.weight /= total;
  return out;
}

Cov6 transport_cov(const Cov6& cov, const Pose& T) {
  const Mat6 ad = adjoint(T.inverse());
  Cov6 out = ad * cov * ad.transpose();
  return 0.5 * (out + out.transpose());
}

BeliefMixture predict(const BeliefMixture& m, const Pose& u, const Cov6& Q,
                      const FilterConfig& cfg) {
  bool shortcut = false;
  if (cfg.small_increment_predict) {
    try {
      shortcut = log_map(u).norm() < cfg.small_increment_thresh;
    } catch (const AngleNearPi&) {
      shortcut = false;
    }
  }
  BeliefMixture out = m;
  for (auto& c : out.components) {
    c.mean = c.mean * u;
    c.cov = regularize_cov((shortcut ? c.cov : transport_cov(c.cov, u)) + Q, cfg.cov_jitter);
  }
  return out;
}

Cov6 reconcile_cov(const GaussianComponent& a, const GaussianComponent& b) {
  const Pose delta = a.mean.inverse() * b.mean;
  const Mat6 ad = adjoint(delta.inverse());
  Cov6 out = ad * b.cov * ad.transpose();
  return 0.5 * (out + out.transpose());
}

namespace {

// delta and summed covariance of a pair, in a's chart. Throws AngleNearPi.
std::pair<Twist, Cov6> pair_gap(const GaussianComponent& a, const GaussianComponent& b) {
  const Twist delta = log_map(a.mean.inverse() * b.mean);
  const Cov6 s = regularize_cov(a.cov + reconcile_cov(a, b));
  return {delta, s};
}

}  // namespace

double gaussian_overlap(const GaussianComponent& a, const GaussianComponent& b) {
  Twist delta;
  Cov6 s;
  try {
    std::tie(delta, s) = pair_gap(a, b);
  } catch (const AngleNearPi&) {
    return 0.0;
  }
  Eigen::LLT<Cov6> llt(s);
  if (llt.info() != Eigen::Success) return 0.0;
  const double m2 = delta.dot(llt.solve(delta));
  double log_det = 0.0;
  for (int i = 0; i < 6; ++i) log_det += std::log(llt.matrixL()(i, i));
  // density = (2pi)^-3 det(S)^-1/2 exp(-m2/2); log_det above is of sqrt(det)
  const double log_density = -3.0 * std::log(2.0 * M_PI) - log_det - 0.5 * m2;
  return std::exp(log_density);
}

double normalized_overlap(const GaussianComponent& a, const GaussianComponent& b) {
  Twist delta;
  Cov6 s;
  try {
    std::tie(delta, s) = pair_gap(a, b);
  } catch (const AngleNearPi&) {
    return 0.0;
  }
  Eigen::LLT<Cov6> llt(s);
  if (llt.info() != Eigen::Success) return 0.0;
  const double m2 = delta.dot(llt.solve(delta));
  return std::exp(-0.5 * m2);
}

GaussianComponent moment_match_merge(const GaussianComponent& a,
                                     const GaussianComponent& b,
                                     bool* lossy) {
  // Merge in the chart of the heavier component (ties keep a's chart).
  const GaussianComponent& p = (b.weight > a.weight) ? b : a;
  const GaussianComponent& q = (b.weight > a.weight) ? a : b;
  const double wsum = p.weight + q.weight;
  if (wsum <= 0.0) throw Error("moment_match_merge: nonpositive total weight");

  const Twist delta = log_map(p.mean.inverse() * q.mean);
  if (lossy != nullptr) {
    *lossy = delta.tail<3>().norm() > 0.5;
  }
  const double wq = q.weight / wsum;
  const double wp = p.weight / wsum;
  const Twist mean_offset = wq * delta;

  const Cov6 q_cov = reconcile_cov(p, q);
  const Twist dp = -mean_offset;
  const Twist dq = delta - mean_offset;
  Cov6 cov = wp * (p.cov + dp * dp.transpose()) + wq * (q_cov + dq * dq.transpose());

  GaussianComponent out;
  out.mean = p.mean * exp_map(mean_offset);
  out.cov = regularize_cov(cov);
  out.weight = wsum;
  out.hyp_id = p.hyp_id;
  return out;
}

}  // namespace cross
