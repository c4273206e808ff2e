#pragma once

#include <vector>

#include "cross/config.hpp"
#include "cross/se3.hpp"

namespace cross {

/// One Gaussian on SE(3): mean pose plus a covariance in the right tangent
/// chart at the mean (x = mean * exp(xi), xi ~ N(0, cov)).
struct GaussianComponent {
  Pose mean;
  Cov6 cov = Cov6::Identity();
  double weight = 1.0;
  int hyp_id = 0;
};

/// Bounded weighted set of tangent-space Gaussians. Between filter steps this
/// is treated as an immutable value; operations return new mixtures.
struct BeliefMixture {
  std::vector<GaussianComponent> components;

  double total_weight() const;
  const GaussianComponent& dominant() const;  // highest weight, ties by order
  bool empty() const { return components.empty(); }
  std::size_t size() const { return components.size(); }
};

/// Symmetrize and push the minimum eigenvalue above zero with jitter.
Cov6 regularize_cov(const Cov6& cov, double jitter = 1e-12);

/// Scale weights to sum to one; order and ids preserved.
/// Throws ZeroMass when the total weight is <= 1e-300.
BeliefMixture normalize(const BeliefMixture& m);

/// First-order Gaussian transport across a right-composition by T:
/// Ad_{T^-1} cov Ad_{T^-1}^T, symmetrized.
Cov6 transport_cov(const Cov6& cov, const Pose& T);

/// Motion prediction: per component mean <- mean*u and
/// cov <- transport_cov(cov,u) + Q. Weights and hyp_ids are unchanged.
/// When cfg.small_increment_predict is set and ||log u|| is below the
/// threshold, the transport is skipped (cov <- cov + Q).
BeliefMixture predict(const BeliefMixture& m, const Pose& u, const Cov6& Q,
                      const FilterConfig& cfg = FilterConfig());

/// Transport b's covariance into a's tangent chart via the adjoint of the
/// inverse relative pose Delta = a^-1 b. Used by every cross-component
/// formula so that charts never silently mix.
Cov6 reconcile_cov(const GaussianComponent& a, const GaussianComponent& b);

/// Gaussian overlap of two components: the density of
/// delta = log(a.mean^-1 b.mean) under N(0, a.cov + b.cov') with b's
/// covariance reconciled into a's chart. Defined as 0 when the relative
/// pose leaves the chart.
double gaussian_overlap(const GaussianComponent& a, const GaussianComponent& b);

/// Scale-free variant: exp(-m^2/2) with m the Mahalanobis gap under the
/// summed covariance. Equals 1 for coincident means regardless of scale.
double normalized_overlap(const GaussianComponent& a, const GaussianComponent& b);

/// Moment-matched merge of two components in the higher-weight component's
/// chart. Weight is the sum; the covariance keeps the between-mean spread
/// terms. Sets *lossy when the mean separation exceeds 0.5 rad.
GaussianComponent moment_match_merge(const GaussianComponent& a,
                                     const GaussianComponent& b,
                                     bool* lossy = nullptr);

}  // namespace cross
