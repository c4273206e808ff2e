#include "cross/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cross/errors.hpp"

namespace cross {

std::vector<MeasurementCandidate> filter_candidates(
    const std::vector<MeasurementCandidate>& cands, int inlier_floor) {
  std::vector<MeasurementCandidate> out;
  out.reserve(cands.size());
  for (const auto& c : cands) {
    if (c.inliers >= inlier_floor) out.push_back(c);
  }
  return out;
}

std::vector<double> association_probs(const std::vector<MeasurementCandidate>& cands,
                                      double temperature) {
  if (cands.empty()) throw EmptyCandidates();
  std::vector<double> logits(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const double m = std::max(1, cands[i].max_features);
    logits[i] = cands[i].vpr_score * static_cast<double>(cands[i].inliers) / m / temperature;
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double& l : logits) {
    l = std::exp(l - top);
    z += l;
  }
  for (double& l : logits) l /= z;
  return logits;
}

MeasurementMessage build_measurement_message(const std::vector<MeasurementCandidate>& cands,
                                             const std::vector<double>& probs,
                                             const TopoGraph& graph, const FilterConfig& cfg) {
  if (cands.size() != probs.size()) {
    throw Error("build_measurement_message: candidate/probability size mismatch");
  }
  MeasurementMessage msg;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    const MapNode& n = graph.node(cands[i].node_id);
    for (const auto& comp : n.pose_mixture.components) {
      GaussianComponent g;
      g.mean = comp.mean * cands[i].rel_pose;
      g.cov = regularize_cov(transport_cov(comp.cov, cands[i].rel_pose) + cands[i].rel_cov,
                             cfg.cov_jitter);
      g.weight = probs[i] * comp.weight;
      g.hyp_id = comp.hyp_id;
      if (g.weight <= 0.0) continue;
      msg.mixture.components.push_back(std::move(g));
      msg.source_node.push_back(cands[i].node_id);
      msg.source_rel.push_back(cands[i].rel_pose);
      msg.source_rel_cov.push_back(cands[i].rel_cov);
    }
  }
  if (!msg.mixture.components.empty()) {
    msg.mixture = normalize(msg.mixture);
  }
  return msg;
}

namespace {

// Pairwise distances with the chart-invalid case treated as "far".
double safe_distance(const Pose& a, const Pose& b, const Vec6& w) {
  try {
    return weighted_distance(a, b, w);
  } catch (const AngleNearPi&) {
    return std::numeric_limits<double>::infinity();
  }
}

ClusterSummary summarize_cluster(const MeasurementMessage& msg, std::vector<int> members) {
  std::sort(members.begin(), members.end());
  const auto& comps = msg.mixture.components;

  std::vector<Pose> poses;
  std::vector<double> alphas;
  double beta = 0.0;
  for (int j : members) {
    poses.push_back(comps[static_cast<std::size_t>(j)].mean);
    alphas.push_back(comps[static_cast<std::size_t>(j)].weight);
    beta += comps[static_cast<std::size_t>(j)].weight;
  }

  Pose mu;
  try {
    mu = frechet_mean(poses, alphas);
  } catch (const NoConvergence&) {
    // pathological spread: fall back to the heaviest member
    std::size_t best = 0;
    for (std::size_t k = 1; k < alphas.size(); ++k) {
      if (alphas[k] > alphas[best]) best = k;
    }
    mu = poses[best];
  }

  Cov6 cov = Cov6::Zero();
  const Pose mu_inv = mu.inverse();
  for (std::size_t k = 0; k < members.size(); ++k) {
    const auto& c = comps[static_cast<std::size_t>(members[k])];
    const Pose d = mu_inv * c.mean;
    const Mat6 ad = adjoint(d);
    const Twist xi = log_map(d);
    const Cov6 transported = ad * c.cov * ad.transpose();
    cov += (alphas[k] / beta) * (transported + xi * xi.transpose());
  }

  ClusterSummary cs;
  cs.mean = mu;
  cs.cov = regularize_cov(cov);
  cs.weight = beta;
  cs.members = members;
  double best_w = -1.0;
  for (int j : members) {
    const auto idx = static_cast<std::size_t>(j);
    const auto& c = comps[idx];
    cs.source_nodes.insert(msg.source_node[idx]);
    if (c.weight > best_w) {
      best_w = c.weight;
      cs.anchor_node = msg.source_node[idx];
      cs.anchor_rel_pose = msg.source_rel[idx];
      cs.anchor_rel_cov = msg.source_rel_cov[idx];
    }
  }
  return cs;
}

}  // namespace

std::vector<ClusterSummary> cluster_measurements(const MeasurementMessage& msg, double eps,
                                                 int min_pts, const Vec6& metric_weights,
                                                 const FilterConfig& cfg) {
  const auto& comps = msg.mixture.components;
  const int n = static_cast<int>(comps.size());
  if (n == 0) return {};

  // Region queries on component means, members sorted by index so the
  // result is permutation-invariant.
  std::vector<std::vector<int>> neighbors(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (safe_distance(comps[static_cast<std::size_t>(i)].mean,
                        comps[static_cast<std::size_t>(j)].mean, metric_weights) <= eps) {
        neighbors[static_cast<std::size_t>(i)].push_back(j);
      }
    }
  }

  std::vector<int> label(static_cast<std::size_t>(n), -1);  // cluster id, -1 unvisited
  int next_label = 0;
  for (int i = 0; i < n; ++i) {
    if (label[static_cast<std::size_t>(i)] >= 0) continue;
    if (static_cast<int>(neighbors[static_cast<std::size_t>(i)].size()) < min_pts) {
      // noise point: becomes its own singleton cluster
      label[static_cast<std::size_t>(i)] = next_label++;
      continue;
    }
    // expand a new cluster from core point i
    const int cluster = next_label++;
    std::vector<int> frontier{i};
    label[static_cast<std::size_t>(i)] = cluster;
    while (!frontier.empty()) {
      const int v = frontier.back();
      frontier.pop_back();
      if (static_cast<int>(neighbors[static_cast<std::size_t>(v)].size()) < min_pts) continue;
      for (int w : neighbors[static_cast<std::size_t>(v)]) {
        if (label[static_cast<std::size_t>(w)] < 0) {
          label[static_cast<std::size_t>(w)] = cluster;
          frontier.push_back(w);
        }
      }
    }
  }

  std::vector<std::vector<int>> groups(static_cast<std::size_t>(next_label));
  for (int i = 0; i < n; ++i) {
    groups[static_cast<std::size_t>(label[static_cast<std::size_t>(i)])].push_back(i);
  }

  std::vector<ClusterSummary> clusters;
  clusters.reserve(groups.size());
  for (auto& g : groups) {
    clusters.push_back(summarize_cluster(msg, g));
  }

  // Keep the top k_max clusters whose normalized weight clears the floor.
  double total = 0.0;
  for (const auto& c : clusters) total += c.weight;
  if (total <= 0.0) return {};
  std::vector<int> order(clusters.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return clusters[static_cast<std::size_t>(a)].weight >
           clusters[static_cast<std::size_t>(b)].weight;
  });
  std::vector<ClusterSummary> kept;
  for (int idx : order) {
    if (static_cast<int>(kept.size()) >= cfg.k_max) break;
    auto& c = clusters[static_cast<std::size_t>(idx)];
    if (c.weight / total <= cfg.cluster_weight_floor) continue;
    kept.push_back(std::move(c));
  }
  double kept_total = 0.0;
  for (const auto& c : kept) kept_total += c.weight;
  for (auto& c : kept) c.weight /= kept_total;
  return kept;
}

}  // namespace cross
