#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cross/gmm.hpp"
#include "cross/se3.hpp"

namespace cross {

enum class EdgeKind { Odometry, Proximity, Visual, Loop };

const char* edge_kind_name(EdgeKind k);

/// Posed keyframe: appearance descriptor plus a mixture pose over the
/// keyframe camera pose. Nodes are append-only.
struct MapNode {
  int id = -1;
  Eigen::VectorXd descriptor;  // unit norm
  BeliefMixture pose_mixture;
  int created_step = 0;
  std::string session_tag;

  /// Component mean for hypothesis key, falling back to the dominant
  /// component when the node predates that hypothesis.
  const GaussianComponent& component_for(int key) const;
  bool has_component(int key) const;
};

struct MapEdge {
  EdgeKind kind = EdgeKind::Odometry;
  int from = -1;
  int to = -1;
  Pose rel_pose;
  Cov6 cov = Cov6::Identity();
  int hyp_key = -1;  // visual edges are per-hypothesis
};

/// Pose-aware topological map. Single writer; readers take snapshots
/// between steps.
class TopoGraph {
 public:
  /// Creates a node when the best appearance similarity falls strictly below
  /// beta. The node copies the current belief as its pose mixture.
  std::optional<int> maybe_create_node(double max_similarity, double beta,
                                       const BeliefMixture& belief,
                                       const Eigen::VectorXd& descriptor, int step,
                                       const std::string& session_tag);

  /// Adds the odometry edge to the session's previous node (rel_pose is the
  /// accumulated odometry since that node) plus proximity edges to every
  /// existing node whose dominant mean is within radius_d (translation only).
  std::vector<MapEdge> add_edges(int new_node, const Pose& odo_since_last,
                                 const Cov6& odo_cov, double radius_d);

  void add_visual_edge(int from, int to, const Pose& rel, const Cov6& cov, int hyp_key);
  void add_loop_edge(int from, int to, const Pose& rel, const Cov6& cov);

  /// argmin over nodes of weighted_distance(pose, dominant mean); ties go to
  /// the lowest id. Throws EmptyGraph.
  int nearest_node(const Pose& pose_estimate, const Vec6& metric_weights) const;

  const MapNode& node(int id) const;  // throws UnknownNode
  MapNode& node_mutable(int id);
  bool has_node(int id) const { return id >= 0 && id < static_cast<int>(nodes_.size()); }
  const std::vector<MapNode>& nodes() const { return nodes_; }
  const std::vector<MapEdge>& edges() const { return edges_; }
  std::size_t num_nodes() const { return nodes_.size(); }

  std::vector<MapEdge> odometry_edges() const;

  /// Unweighted hop distances from a source node (BFS over all edges).
  std::vector<int> hop_distances(int from) const;

  void save(std::ostream& os) const;
  static TopoGraph load(std::istream& is);

 private:
  std::vector<MapNode> nodes_;
  std::vector<MapEdge> edges_;
  // session tag -> id of the session's latest node
  std::vector<std::pair<std::string, int>> session_tail_;
};

}  // namespace cross
