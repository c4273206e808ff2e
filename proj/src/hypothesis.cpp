#include "cross/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cross/errors.hpp"

namespace cross {

namespace {

GaussianComponent cluster_as_component(const ClusterSummary& c) {
  GaussianComponent g;
  g.mean = c.mean;
  g.cov = c.cov;
  g.weight = c.weight;
  g.hyp_id = -1;
  return g;
}

}  // namespace

GaussianComponent fuse(const GaussianComponent& mot, const ClusterSummary& cluster,
                       const FilterConfig& cfg) {
  Twist delta;
  try {
    delta = log_map(mot.mean.inverse() * cluster.mean);
  } catch (const AngleNearPi&) {
    throw ChartInvalid();
  }

  const GaussianComponent cg = cluster_as_component(cluster);
  const Cov6 cluster_cov = regularize_cov(reconcile_cov(mot, cg), cfg.cov_jitter);

  const Eigen::LLT<Cov6> llt_mot(regularize_cov(mot.cov, cfg.cov_jitter));
  const Eigen::LLT<Cov6> llt_clu(cluster_cov);
  if (llt_mot.info() != Eigen::Success || llt_clu.info() != Eigen::Success) {
    throw ChartInvalid();
  }

  const Cov6 info = llt_mot.solve(Cov6::Identity()) + llt_clu.solve(Cov6::Identity());
  const Cov6 fused_cov = regularize_cov(info.llt().solve(Cov6::Identity()), cfg.cov_jitter);
  const Twist offset = fused_cov * llt_clu.solve(delta);

  GaussianComponent out;
  out.mean = mot.mean * exp_map(offset);
  out.cov = fused_cov;
  out.hyp_id = mot.hyp_id;
  out.weight = mot.weight * cluster.weight * gaussian_overlap(mot, cg);
  return out;
}

BeliefMixture HypothesisManager::init(const Pose& mean, const Cov6& cov, int step) {
  live_.clear();
  archived_.clear();
  next_key_ = 0;

  Hypothesis h;
  h.key = next_key_++;
  h.is_null = true;
  h.birth_step = step;
  h.weight = 1.0;
  h.steps.push_back(step);
  h.trajectory.push_back(mean);
  h.traj_covs.push_back(cov);
  live_[h.key] = std::move(h);

  BeliefMixture belief;
  GaussianComponent c;
  c.mean = mean;
  c.cov = regularize_cov(cov, cfg_.cov_jitter);
  c.weight = 1.0;
  c.hyp_id = 0;
  belief.components.push_back(std::move(c));
  return belief;
}

BeliefMixture HypothesisManager::update_step(const BeliefMixture& predicted,
                                             const std::vector<ClusterSummary>& clusters,
                                             int step, UpdateEvents* events) {
  UpdateEvents ev;
  const auto& mots = predicted.components;
  const int n_mot = static_cast<int>(mots.size());
  const int n_clu = static_cast<int>(clusters.size());

  // Scale-free overlap gate per pair; the same value ranks the greedy
  // one-to-one assignment.
  std::vector<std::vector<double>> gate(static_cast<std::size_t>(n_mot),
                                        std::vector<double>(static_cast<std::size_t>(n_clu), 0.0));
  struct PairRank {
    double overlap;
    int i, c;
  };
  std::vector<PairRank> ranked;
  for (int i = 0; i < n_mot; ++i) {
    for (int c = 0; c < n_clu; ++c) {
      const double o =
          normalized_overlap(mots[static_cast<std::size_t>(i)],
                             cluster_as_component(clusters[static_cast<std::size_t>(c)]));
      gate[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] = o;
      if (o > cfg_.overlap_gate) ranked.push_back({o, i, c});
    }
  }
  std::sort(ranked.begin(), ranked.end(), [](const PairRank& a, const PairRank& b) {
    if (a.overlap != b.overlap) return a.overlap > b.overlap;
    if (a.i != b.i) return a.i < b.i;
    return a.c < b.c;
  });

  std::vector<int> mot_match(static_cast<std::size_t>(n_mot), -1);
  std::vector<int> clu_match(static_cast<std::size_t>(n_clu), -1);
  for (const auto& p : ranked) {
    if (mot_match[static_cast<std::size_t>(p.i)] >= 0 ||
        clu_match[static_cast<std::size_t>(p.c)] >= 0) {
      continue;
    }
    mot_match[static_cast<std::size_t>(p.i)] = p.c;
    clu_match[static_cast<std::size_t>(p.c)] = p.i;
  }

  // Motion block: fused state for matched components, decayed prediction
  // for unmatched ones. Weights here are dimensionless; the Gaussian
  // overlap acts as gate and ranking only.
  BeliefMixture post;
  for (int i = 0; i < n_mot; ++i) {
    const auto& m = mots[static_cast<std::size_t>(i)];
    const int c = mot_match[static_cast<std::size_t>(i)];
    if (c >= 0) {
      GaussianComponent g;
      try {
        g = fuse(m, clusters[static_cast<std::size_t>(c)], cfg_);
        g.weight = m.weight * clusters[static_cast<std::size_t>(c)].weight;
        ev.fused.emplace_back(m.hyp_id, c);
      } catch (const ChartInvalid&) {
        g = m;
        g.weight = m.weight * cfg_.miss_factor;
        ev.missed.push_back(m.hyp_id);
      }
      post.components.push_back(std::move(g));
    } else {
      GaussianComponent g = m;
      g.weight = m.weight * cfg_.miss_factor;
      ev.missed.push_back(m.hyp_id);
      post.components.push_back(std::move(g));
    }
  }

  // Birth block: clusters that overlap no motion component above the gate.
  std::vector<int> birth_clusters;
  for (int c = 0; c < n_clu; ++c) {
    double best = 0.0;
    for (int i = 0; i < n_mot; ++i) {
      best = std::max(best, gate[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]);
    }
    if (best <= cfg_.overlap_gate) birth_clusters.push_back(c);
  }

  if (!birth_clusters.empty()) {
    double motion_mass = 0.0;
    for (const auto& g : post.components) motion_mass += g.weight;
    double birth_mass = 0.0;
    for (int c : birth_clusters) birth_mass += clusters[static_cast<std::size_t>(c)].weight;

    // Restart kernel: survivors share (1-eps), births share eps in
    // proportion to cluster weight.
    if (motion_mass > 0.0) {
      for (auto& g : post.components) {
        g.weight *= (1.0 - cfg_.birth_prior) / motion_mass;
      }
    }
    for (int c : birth_clusters) {
      const auto& cl = clusters[static_cast<std::size_t>(c)];
      Hypothesis h;
      h.key = next_key_++;
      h.birth_step = step;
      live_[h.key] = h;

      GaussianComponent g;
      g.mean = cl.mean;
      g.cov = regularize_cov(cl.cov, cfg_.cov_jitter);
      g.weight = cfg_.birth_prior * cl.weight / birth_mass;
      g.hyp_id = h.key;
      post.components.push_back(std::move(g));
      ev.born.emplace_back(h.key, c);
    }
  }

  post = normalize(post);

  // Prune by normalized weight, then truncate to k_max, then renormalize.
  BeliefMixture kept;
  for (auto& g : post.components) {
    if (g.weight < cfg_.prune_threshold) {
      ev.pruned.push_back(g.hyp_id);
    } else {
      kept.components.push_back(std::move(g));
    }
  }
  if (static_cast<int>(kept.components.size()) > cfg_.k_max) {
    std::vector<int> order(kept.components.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return kept.components[static_cast<std::size_t>(a)].weight >
             kept.components[static_cast<std::size_t>(b)].weight;
    });
    std::vector<bool> keep_flag(kept.components.size(), false);
    for (int k = 0; k < cfg_.k_max; ++k) {
      keep_flag[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = true;
    }
    BeliefMixture truncated;
    for (std::size_t i = 0; i < kept.components.size(); ++i) {
      if (keep_flag[i]) {
        truncated.components.push_back(std::move(kept.components[i]));
      } else {
        ev.pruned.push_back(kept.components[i].hyp_id);
      }
    }
    kept = std::move(truncated);
  }
  kept = normalize(kept);

  if (events != nullptr) *events = ev;
  return kept;
}

void HypothesisManager::bookkeep(const BeliefMixture& posterior, int step,
                                 const std::vector<ClusterSummary>& clusters,
                                 const UpdateEvents& ev, std::optional<int> current_node) {
  // Archive hypotheses that no longer appear in the posterior (pruned this
  // step, or born and immediately pruned).
  std::vector<int> dead;
  for (const auto& [key, h] : live_) {
    bool present = false;
    for (const auto& g : posterior.components) {
      if (g.hyp_id == key) {
        present = true;
        break;
      }
    }
    if (!present) dead.push_back(key);
  }
  for (int key : dead) archive(key, live_.at(key).weight);

  for (const auto& g : posterior.components) {
    auto it = live_.find(g.hyp_id);
    if (it == live_.end()) continue;
    Hypothesis& h = it->second;
    h.steps.push_back(step);
    h.trajectory.push_back(g.mean);
    h.traj_covs.push_back(g.cov);
    h.weight = g.weight;
  }

  if (current_node.has_value()) {
    for (const auto& [key, cidx] : ev.fused) {
      auto it = live_.find(key);
      if (it == live_.end()) continue;
      const auto& cl = clusters[static_cast<std::size_t>(cidx)];
      if (cl.anchor_node < 0 || cl.anchor_node == *current_node) continue;
      VisualConstraint vc;
      vc.from_node = cl.anchor_node;
      vc.to_node = *current_node;
      vc.rel_pose = cl.anchor_rel_pose;
      vc.cov = cl.anchor_rel_cov;
      vc.step = step;
      it->second.visual_constraints.push_back(vc);
    }
  }
  for (const auto& [key, cidx] : ev.fused) {
    auto it = live_.find(key);
    if (it != live_.end()) it->second.last_matched_step = step;
  }
}

bool HypothesisManager::null_alive() const {
  for (const auto& [key, h] : live_) {
    if (h.is_null) return true;
  }
  return false;
}

int HypothesisManager::null_key() const {
  for (const auto& [key, h] : live_) {
    if (h.is_null) return key;
  }
  throw NullDead();
}

int HypothesisManager::promote_null() {
  if (live_.empty()) throw NullDead();
  int best = -1;
  double best_w = -1.0;
  for (const auto& [key, h] : live_) {
    if (h.weight > best_w) {
      best_w = h.weight;
      best = key;
    }
  }
  for (auto& [key, h] : live_) h.is_null = (key == best);
  return best;
}

void HypothesisManager::absorb(int key) {
  if (live_.count(key) == 0) return;
  archive(key, live_.at(key).weight);
}

void HypothesisManager::archive(int key, double final_weight) {
  auto it = live_.find(key);
  if (it == live_.end()) return;
  it->second.final_weight = final_weight;
  archived_.push_back(std::move(it->second));
  live_.erase(it);
}

}  // namespace cross
