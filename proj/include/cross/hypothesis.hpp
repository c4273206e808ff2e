#pragma once

#include <map>
#include <optional>
#include <vector>

#include "cross/config.hpp"
#include "cross/gmm.hpp"
#include "cross/measurement.hpp"

namespace cross {

/// A visual constraint between two map nodes, valid for one hypothesis.
struct VisualConstraint {
  int from_node = -1;
  int to_node = -1;
  Pose rel_pose;
  Cov6 cov = Cov6::Identity();
  int step = 0;
};

/// A surviving mixture component with its history. The component label
/// ("key") is the index l carried by belief and node mixture components;
/// it never changes during the hypothesis's life. The tracked branch is
/// the null hypothesis and reports public id 0.
struct Hypothesis {
  int key = 0;
  bool is_null = false;
  int birth_step = 0;
  double weight = 0.0;
  std::vector<int> steps;
  std::vector<Pose> trajectory;
  std::vector<Cov6> traj_covs;
  std::vector<VisualConstraint> visual_constraints;
  int last_matched_step = -1;
  double final_weight = 0.0;  // weight at archive time

  int id() const { return is_null ? 0 : key; }
};

struct UpdateEvents {
  std::vector<std::pair<int, int>> fused;  // (hyp key, cluster index)
  std::vector<int> missed;                 // kept on prediction only
  std::vector<std::pair<int, int>> born;   // (hyp key, cluster index)
  std::vector<int> pruned;                 // removed this step
};

/// Information-form fusion of a motion component with a measurement cluster,
/// carried out in the motion component's tangent chart. The returned weight
/// is mot.weight * cluster.weight * gaussian_overlap. Throws ChartInvalid
/// when the relative pose leaves the chart.
GaussianComponent fuse(const GaussianComponent& mot, const ClusterSummary& cluster,
                       const FilterConfig& cfg = FilterConfig());

/// Owns hypothesis records and the belief update that fuses the predicted
/// mixture with the clustered measurement message. Single writer.
class HypothesisManager {
 public:
  explicit HypothesisManager(const FilterConfig& cfg) : cfg_(cfg) {}

  /// Root hypothesis (key 0, null). Returns the initial belief.
  BeliefMixture init(const Pose& mean, const Cov6& cov, int step);

  /// Fusion / birth / prune / truncate / normalize. `predicted` must be the
  /// normalized motion mixture. Birth hypotheses receive fresh keys and
  /// epsilon mass split proportional to cluster weights.
  BeliefMixture update_step(const BeliefMixture& predicted,
                            const std::vector<ClusterSummary>& clusters, int step,
                            UpdateEvents* events = nullptr);

  /// Append posterior states to trajectories, record visual constraints for
  /// fused components (when a map node exists for this step), refresh
  /// weights, archive the dead.
  void bookkeep(const BeliefMixture& posterior, int step,
                const std::vector<ClusterSummary>& clusters, const UpdateEvents& ev,
                std::optional<int> current_node);

  bool has(int key) const { return live_.count(key) > 0; }
  const Hypothesis& hypothesis(int key) const { return live_.at(key); }
  Hypothesis& hypothesis_mutable(int key) { return live_.at(key); }
  const std::map<int, Hypothesis>& live() const { return live_; }
  const std::vector<Hypothesis>& archived() const { return archived_; }

  bool null_alive() const;
  int null_key() const;  // throws NullDead when no null exists

  /// Heaviest survivor becomes the tracked branch. Returns its key.
  int promote_null();

  /// Remove a hypothesis merged into the null branch (archives it).
  void absorb(int key);

  int peek_next_key() const { return next_key_; }

 private:
  FilterConfig cfg_;
  std::map<int, Hypothesis> live_;
  std::vector<Hypothesis> archived_;
  int next_key_ = 0;

  void archive(int key, double final_weight);
};

}  // namespace cross
