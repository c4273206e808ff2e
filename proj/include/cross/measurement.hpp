#pragma once

#include <set>
#include <vector>

#include "cross/config.hpp"
#include "cross/gmm.hpp"
#include "cross/graph.hpp"
#include "cross/se3.hpp"

namespace cross {

/// One retrieved keyframe with its VPR score and simulated PnP output.
struct MeasurementCandidate {
  int node_id = -1;
  double vpr_score = 0.0;  // pi(i) in [0,1]
  int inliers = 0;
  int max_features = 100;  // M
  Pose rel_pose;           // T_{i,t}: node frame -> current camera
  Cov6 rel_cov = Cov6::Identity();
};

/// Provider output for one step. true_pose is for evaluation only and must
/// never be read by an estimator.
struct Observation {
  int step = 0;
  std::vector<MeasurementCandidate> candidates;  // empty under occlusion
  Pose true_pose;
};

/// One reduced mode of the global measurement message.
struct ClusterSummary {
  Pose mean;
  Cov6 cov = Cov6::Identity();
  double weight = 0.0;
  std::vector<int> members;    // component indices in the raw message
  std::set<int> source_nodes;  // map nodes that contributed

  // Highest-weight contributing candidate, kept so a fused hypothesis can
  // record the corresponding visual constraint.
  int anchor_node = -1;
  Pose anchor_rel_pose;
  Cov6 anchor_rel_cov = Cov6::Identity();
};

/// Raw (unclustered) measurement message plus per-component provenance.
struct MeasurementMessage {
  BeliefMixture mixture;
  std::vector<int> source_node;   // aligned with mixture.components
  std::vector<Pose> source_rel;   // the candidate's T_{i,t}
  std::vector<Cov6> source_rel_cov;
};

/// Drop candidates whose inlier count is below the floor (simulated RANSAC
/// failure).
std::vector<MeasurementCandidate> filter_candidates(
    const std::vector<MeasurementCandidate>& cands, int inlier_floor);

/// P(i) = softmax_i( pi(i) * inliers(i) / M / temperature ).
/// Throws EmptyCandidates on an empty list.
std::vector<double> association_probs(const std::vector<MeasurementCandidate>& cands,
                                      double temperature = 1.0);

/// Global measurement message: for every candidate i and node component k,
/// mean = mu_i^(k) * T_{i,t}, cov = transport_cov(Sigma_i^(k), T_{i,t}) + rel_cov,
/// weight = P(i) * w_i^(k). Zero-weight components are dropped and the
/// message is normalized. Throws UnknownNode.
MeasurementMessage build_measurement_message(const std::vector<MeasurementCandidate>& cands,
                                             const std::vector<double>& probs,
                                             const TopoGraph& graph,
                                             const FilterConfig& cfg = FilterConfig());

/// SE(3)-aware DBSCAN over the message components followed by per-cluster
/// moment aggregation (Frechet mean, transported covariances plus spread).
/// Noise points become singleton clusters; the top k_max clusters above the
/// weight floor are kept and renormalized.
std::vector<ClusterSummary> cluster_measurements(const MeasurementMessage& msg, double eps,
                                                 int min_pts, const Vec6& metric_weights,
                                                 const FilterConfig& cfg = FilterConfig());

}  // namespace cross
