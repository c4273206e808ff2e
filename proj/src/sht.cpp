#include "cross/sht.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cross/errors.hpp"
#include "cross/pgo.hpp"

namespace cross {

std::map<int, double> log_odds(const HypothesisManager& mgr) {
  if (!mgr.null_alive()) throw NullDead();
  const int null_key = mgr.null_key();
  const double w0 = mgr.hypothesis(null_key).weight;
  if (w0 <= 0.0) throw NullDead();

  std::map<int, double> odds;
  for (const auto& [key, h] : mgr.live()) {
    if (key == null_key) continue;
    odds[key] = std::log(h.weight / w0);
  }
  return odds;
}

std::vector<int> ShtMonitor::window_update(const std::map<int, double>& odds, int step) {
  // Windows of dead hypotheses go away.
  for (auto it = windows_.begin(); it != windows_.end();) {
    if (odds.count(it->first) == 0) {
      it = windows_.erase(it);
    } else {
      ++it;
    }
  }

  std::vector<int> accepted;
  for (const auto& [key, l] : odds) {
    auto [it, inserted] = windows_.try_emplace(key);
    if (inserted) {
      it->second.window = cfg_.sht_window;
      it->second.accept = cfg_.sht_accept;
    }
    it->second.push(l > 0.0);
    if (it->second.accepted()) accepted.push_back(key);

    std::ostringstream line;
    line << "LOOP step=" << step << " l=" << key << " odds=" << l << " window=";
    for (bool b : it->second.signs) line << (b ? '+' : '-');
    line << " count=" << it->second.positives() << " r=" << it->second.accept
         << " status=" << (it->second.accepted() ? "accepted" : "pending");
    events_.push_back(line.str());
  }

  std::stable_sort(accepted.begin(), accepted.end(), [&](int a, int b) {
    return odds.at(a) > odds.at(b);
  });
  return accepted;
}

const OddsWindow* ShtMonitor::window(int key) const {
  auto it = windows_.find(key);
  return it == windows_.end() ? nullptr : &it->second;
}

std::vector<int> hypothesis_overlap(const TopoGraph& graph, const Hypothesis& a,
                                    const Hypothesis& b) {
  std::vector<int> overlap;
  for (const auto& n : graph.nodes()) {
    if (n.has_component(a.key) && n.has_component(b.key)) overlap.push_back(n.id);
  }
  return overlap;
}

MergeReport ShtMonitor::merge(HypothesisManager& mgr, BeliefMixture& belief, TopoGraph& graph,
                              int other_key, int step) {
  MergeReport rep;
  rep.merged_key = other_key;
  const int null_key = mgr.null_key();
  Hypothesis& h0 = mgr.hypothesis_mutable(null_key);
  Hypothesis& hl = mgr.hypothesis_mutable(other_key);
  rep.weight_before = h0.weight + hl.weight;

  const std::vector<int> overlap = hypothesis_overlap(graph, h0, hl);
  if (!overlap.empty()) {
    // Align the duplicated branch poses before collapsing them.
    try {
      smooth_hypothesis(graph, h0, cfg_);
      smooth_hypothesis(graph, hl, cfg_);
      joint_loop_pgo(graph, h0, hl, overlap, cfg_);
      rep.pgo_ran = true;
    } catch (const Error&) {
      // deferred one window: evidence must re-accumulate
      windows_.erase(other_key);
      rep.deferred = true;
      std::ostringstream line;
      line << "LOOP step=" << step << " l=" << other_key << " status=deferred";
      events_.push_back(line.str());
      return rep;
    }
  }

  // The accepted branch's current state becomes the tracked state; the null
  // keeps its identity (component key and public id 0).
  GaussianComponent* c0 = nullptr;
  GaussianComponent* cl = nullptr;
  for (auto& c : belief.components) {
    if (c.hyp_id == null_key) c0 = &c;
    if (c.hyp_id == other_key) cl = &c;
  }
  if (c0 == nullptr || cl == nullptr) {
    throw Error("merge: belief is missing a hypothesis component");
  }
  c0->mean = cl->mean;
  c0->cov = cl->cov;
  c0->weight += cl->weight;
  belief.components.erase(
      std::remove_if(belief.components.begin(), belief.components.end(),
                     [&](const GaussianComponent& c) { return c.hyp_id == other_key; }),
      belief.components.end());

  // Splice trajectories: the null's history up to the branch point, the
  // accepted branch afterwards.
  std::vector<int> steps;
  std::vector<Pose> traj;
  std::vector<Cov6> covs;
  for (std::size_t i = 0; i < h0.steps.size(); ++i) {
    if (h0.steps[i] < hl.birth_step) {
      steps.push_back(h0.steps[i]);
      traj.push_back(h0.trajectory[i]);
      covs.push_back(h0.traj_covs[i]);
    }
  }
  steps.insert(steps.end(), hl.steps.begin(), hl.steps.end());
  traj.insert(traj.end(), hl.trajectory.begin(), hl.trajectory.end());
  covs.insert(covs.end(), hl.traj_covs.begin(), hl.traj_covs.end());
  h0.steps = std::move(steps);
  h0.trajectory = std::move(traj);
  h0.traj_covs = std::move(covs);

  h0.weight += hl.weight;
  h0.visual_constraints.insert(h0.visual_constraints.end(), hl.visual_constraints.begin(),
                               hl.visual_constraints.end());
  rep.weight_after = h0.weight;

  mgr.absorb(other_key);
  windows_.erase(other_key);

  std::ostringstream line;
  line << "LOOP step=" << step << " l=" << other_key << " status=merged"
       << " pgo=" << (rep.pgo_ran ? "yes" : "no") << " w0=" << h0.weight;
  events_.push_back(line.str());
  return rep;
}

}  // namespace cross
