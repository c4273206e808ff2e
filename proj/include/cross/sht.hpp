#pragma once

#include <deque>
#include <map>
#include <string>
#include <vector>

#include "cross/config.hpp"
#include "cross/graph.hpp"
#include "cross/hypothesis.hpp"

namespace cross {

/// Per-hypothesis ring buffer of sign indicators over the last W steps.
struct OddsWindow {
  std::deque<bool> signs;
  int window = 10;  // W
  int accept = 7;   // r

  void push(bool positive) {
    signs.push_back(positive);
    while (static_cast<int>(signs.size()) > window) signs.pop_front();
  }
  int positives() const {
    int n = 0;
    for (bool b : signs) n += b ? 1 : 0;
    return n;
  }
  bool accepted() const { return positives() >= accept; }
};

/// Log posterior odds of every alternative hypothesis against the tracked
/// (null) branch: l -> log(w_l / w_0). Throws NullDead when the null is
/// pruned; callers promote the heaviest survivor first.
std::map<int, double> log_odds(const HypothesisManager& mgr);

struct MergeReport {
  int merged_key = -1;
  bool pgo_ran = false;
  bool deferred = false;
  double weight_before = 0.0;
  double weight_after = 0.0;
};

/// Drives loop-closure decisions: window bookkeeping, acceptance, and
/// at most one merge per step.
class ShtMonitor {
 public:
  explicit ShtMonitor(const FilterConfig& cfg) : cfg_(cfg) {}

  /// Push indicators for every live alternative and return the keys whose
  /// windows reach the acceptance count, sorted by descending odds.
  std::vector<int> window_update(const std::map<int, double>& odds, int step);

  /// Merge hl into the null branch: joint PGO over the node overlap when one
  /// exists, weight aggregation, trajectory splice, constraint union. On PGO
  /// failure the merge is deferred for one window (the buffer is cleared).
  MergeReport merge(HypothesisManager& mgr, BeliefMixture& belief, TopoGraph& graph,
                    int other_key, int step);

  void drop(int key) { windows_.erase(key); }
  const OddsWindow* window(int key) const;
  const std::vector<std::string>& event_log() const { return events_; }
  std::vector<std::string>& event_log() { return events_; }

 private:
  FilterConfig cfg_;
  std::map<int, OddsWindow> windows_;
  std::vector<std::string> events_;
};

/// Node ids whose mixtures carry components for both hypotheses (the part of
/// the map built while both branches were alive).
std::vector<int> hypothesis_overlap(const TopoGraph& graph, const Hypothesis& a,
                                    const Hypothesis& b);

}  // namespace cross
