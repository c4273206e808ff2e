#include "cross/graph.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <deque>
#include <istream>
#include <ostream>
#include <sstream>

#include <Eigen/Geometry>

#include "cross/errors.hpp"

namespace cross {

const char* edge_kind_name(EdgeKind k) {
  switch (k) {
    case EdgeKind::Odometry: return "odometry";
    case EdgeKind::Proximity: return "proximity";
    case EdgeKind::Visual: return "visual";
    case EdgeKind::Loop: return "loop";
  }
  return "?";
}

const GaussianComponent& MapNode::component_for(int key) const {
  for (const auto& c : pose_mixture.components) {
    if (c.hyp_id == key) return c;
  }
  return pose_mixture.dominant();
}

bool MapNode::has_component(int key) const {
  for (const auto& c : pose_mixture.components) {
    if (c.hyp_id == key) return true;
  }
  return false;
}

std::optional<int> TopoGraph::maybe_create_node(double max_similarity, double beta,
                                                const BeliefMixture& belief,
                                                const Eigen::VectorXd& descriptor, int step,
                                                const std::string& session_tag) {
  if (max_similarity >= beta) return std::nullopt;
  MapNode n;
  n.id = static_cast<int>(nodes_.size());
  n.descriptor = descriptor;
  n.pose_mixture = belief;  // inherits the belief's mixture structure
  n.created_step = step;
  n.session_tag = session_tag;
  nodes_.push_back(std::move(n));
  return nodes_.back().id;
}

std::vector<MapEdge> TopoGraph::add_edges(int new_node, const Pose& odo_since_last,
                                          const Cov6& odo_cov, double radius_d) {
  const MapNode& nn = node(new_node);
  std::vector<MapEdge> added;

  int prev = -1;
  bool session_known = false;
  for (auto& [tag, tail] : session_tail_) {
    if (tag == nn.session_tag) {
      prev = tail;
      tail = new_node;
      session_known = true;
      break;
    }
  }
  if (!session_known) {
    session_tail_.emplace_back(nn.session_tag, new_node);
  }

  if (prev >= 0) {
    MapEdge e;
    e.kind = EdgeKind::Odometry;
    e.from = prev;
    e.to = new_node;
    e.rel_pose = odo_since_last;
    e.cov = odo_cov;
    edges_.push_back(e);
    added.push_back(e);
  }

  // Proximity: translation-only distance between dominant means.
  const Pose& mean_new = nn.pose_mixture.dominant().mean;
  for (const auto& other : nodes_) {
    if (other.id == new_node || other.id == prev) continue;
    const double d = (mean_new.t - other.pose_mixture.dominant().mean.t).norm();
    if (d <= radius_d) {
      MapEdge e;
      e.kind = EdgeKind::Proximity;
      e.from = other.id;
      e.to = new_node;
      e.rel_pose = other.pose_mixture.dominant().mean.inverse() * mean_new;
      e.cov = Cov6::Identity();
      edges_.push_back(e);
      added.push_back(e);
    }
  }
  return added;
}

void TopoGraph::add_visual_edge(int from, int to, const Pose& rel, const Cov6& cov,
                                int hyp_key) {
  MapEdge e;
  e.kind = EdgeKind::Visual;
  e.from = from;
  e.to = to;
  e.rel_pose = rel;
  e.cov = cov;
  e.hyp_key = hyp_key;
  edges_.push_back(e);
}

void TopoGraph::add_loop_edge(int from, int to, const Pose& rel, const Cov6& cov) {
  MapEdge e;
  e.kind = EdgeKind::Loop;
  e.from = from;
  e.to = to;
  e.rel_pose = rel;
  e.cov = cov;
  edges_.push_back(e);
}

int TopoGraph::nearest_node(const Pose& pose_estimate, const Vec6& metric_weights) const {
  if (nodes_.empty()) throw EmptyGraph();
  int best = -1;
  double best_d = 0.0;
  for (const auto& n : nodes_) {
    double d;
    try {
      d = weighted_distance(pose_estimate, n.pose_mixture.dominant().mean, metric_weights);
    } catch (const AngleNearPi&) {
      d = (pose_estimate.t - n.pose_mixture.dominant().mean.t).norm() +
          metric_weights.tail<3>().norm() * M_PI;
    }
    if (best < 0 || d < best_d) {  // strict: ties keep the lowest id
      best = n.id;
      best_d = d;
    }
  }
  return best;
}

const MapNode& TopoGraph::node(int id) const {
  if (!has_node(id)) throw UnknownNode(id);
  return nodes_[static_cast<std::size_t>(id)];
}

MapNode& TopoGraph::node_mutable(int id) {
  if (!has_node(id)) throw UnknownNode(id);
  return nodes_[static_cast<std::size_t>(id)];
}

std::vector<MapEdge> TopoGraph::odometry_edges() const {
  std::vector<MapEdge> out;
  for (const auto& e : edges_) {
    if (e.kind == EdgeKind::Odometry) out.push_back(e);
  }
  return out;
}

std::vector<int> TopoGraph::hop_distances(int from) const {
  std::vector<int> dist(nodes_.size(), -1);
  if (!has_node(from)) return dist;
  std::vector<std::vector<int>> adj(nodes_.size());
  for (const auto& e : edges_) {
    adj[static_cast<std::size_t>(e.from)].push_back(e.to);
    adj[static_cast<std::size_t>(e.to)].push_back(e.from);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());
  std::deque<int> queue{from};
  dist[static_cast<std::size_t>(from)] = 0;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int w : adj[static_cast<std::size_t>(v)]) {
      if (dist[static_cast<std::size_t>(w)] < 0) {
        dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

namespace {

void print_double(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}

void print_pose(std::ostream& os, const Pose& p) {
  const Eigen::Quaterniond q(p.R);
  for (int i = 0; i < 3; ++i) {
    print_double(os, p.t[i]);
    os << ' ';
  }
  print_double(os, q.x());
  os << ' ';
  print_double(os, q.y());
  os << ' ';
  print_double(os, q.z());
  os << ' ';
  print_double(os, q.w());
}

Pose parse_pose(std::istringstream& ss) {
  double tx, ty, tz, qx, qy, qz, qw;
  ss >> tx >> ty >> tz >> qx >> qy >> qz >> qw;
  const Eigen::Quaterniond q(qw, qx, qy, qz);
  return Pose(q.toRotationMatrix(), Vec3(tx, ty, tz));
}

}  // namespace

void TopoGraph::save(std::ostream& os) const {
  for (const auto& n : nodes_) {
    os << "NODE " << n.id << ' ' << n.session_tag << ' ' << n.created_step;
    for (int i = 0; i < n.descriptor.size(); ++i) {
      os << ' ';
      print_double(os, n.descriptor[i]);
    }
    os << '\n';
  }
  for (const auto& e : edges_) {
    os << "EDGE " << edge_kind_name(e.kind);
    if (e.kind == EdgeKind::Visual) os << '(' << e.hyp_key << ')';
    os << ' ' << e.from << ' ' << e.to << ' ';
    print_pose(os, e.rel_pose);
    for (int i = 0; i < 6; ++i) {
      os << ' ';
      print_double(os, e.cov(i, i));
    }
    os << '\n';
  }
}

TopoGraph TopoGraph::load(std::istream& is) {
  TopoGraph g;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "NODE") {
      MapNode n;
      ss >> n.id >> n.session_tag >> n.created_step;
      std::vector<double> vals;
      double v;
      while (ss >> v) vals.push_back(v);
      n.descriptor = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<long>(vals.size()));
      // Serialized graphs carry no mixtures; give the node a unit placeholder
      // so nearest-node queries on a loaded graph stay well-defined.
      GaussianComponent c;
      n.pose_mixture.components.push_back(c);
      g.nodes_.push_back(std::move(n));
    } else if (tag == "EDGE") {
      std::string kind;
      ss >> kind;
      MapEdge e;
      if (kind == "odometry") {
        e.kind = EdgeKind::Odometry;
      } else if (kind == "proximity") {
        e.kind = EdgeKind::Proximity;
      } else if (kind == "loop") {
        e.kind = EdgeKind::Loop;
      } else if (kind.rfind("visual", 0) == 0) {
        e.kind = EdgeKind::Visual;
        const auto open = kind.find('(');
        const auto close = kind.find(')');
        if (open != std::string::npos && close != std::string::npos && close > open + 1) {
          e.hyp_key = std::stoi(kind.substr(open + 1, close - open - 1));
        }
      } else {
        throw ConfigError("unknown edge kind: " + kind);
      }
      ss >> e.from >> e.to;
      e.rel_pose = parse_pose(ss);
      e.cov = Cov6::Zero();
      for (int i = 0; i < 6; ++i) {
        double d;
        ss >> d;
        e.cov(i, i) = d;
      }
      g.edges_.push_back(e);
    }
  }
  return g;
}

}  // namespace cross
