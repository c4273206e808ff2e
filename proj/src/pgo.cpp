#include "cross/pgo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>

#include <Eigen/Cholesky>
#include <Eigen/Geometry>

#include "cross/errors.hpp"

namespace cross {

Twist pgo_residual(const PgoFactor& f, const Pose& mu_i, const Pose& mu_j) {
  return log_map(f.measured.inverse() * mu_i.inverse() * mu_j);
}

void factor_jacobians_numeric(const PgoFactor& f, const Pose& mu_i, const Pose& mu_j,
                              Mat6& j_from, Mat6& j_to) {
  constexpr double h = 1e-6;
  for (int k = 0; k < 6; ++k) {
    Twist d = Twist::Zero();
    d[k] = h;
    const Pose dp = exp_map(d);
    const Pose dm = exp_map(Twist(-d));
    j_from.col(k) = (pgo_residual(f, mu_i * dp, mu_j) - pgo_residual(f, mu_i * dm, mu_j)) / (2 * h);
    j_to.col(k) = (pgo_residual(f, mu_i, mu_j * dp) - pgo_residual(f, mu_i, mu_j * dm)) / (2 * h);
  }
}

void factor_jacobians_analytic(const PgoFactor& f, const Pose& mu_i, const Pose& mu_j,
                               Mat6& j_from, Mat6& j_to) {
  const Twist r = pgo_residual(f, mu_i, mu_j);
  j_to = se3_right_jacobian_inv(r);
  j_from = -se3_left_jacobian_inv(r) * adjoint(f.measured.inverse());
}

namespace {

struct Linearization {
  Eigen::MatrixXd jtj;
  Eigen::VectorXd jtr;
  double cost = 0.0;
};

double evaluate_cost(const PgoProblem& p, const std::map<int, Pose>& vals) {
  double cost = 0.0;
  for (const auto& f : p.factors) {
    try {
      const Twist r = pgo_residual(f, vals.at(f.from), vals.at(f.to));
      cost += r.dot(f.information * r);
    } catch (const AngleNearPi&) {
      // chart-singular factor contributes nothing this evaluation
    }
  }
  return cost;
}

Linearization linearize(const PgoProblem& p, const std::map<int, Pose>& vals,
                        const std::map<int, int>& index, bool analytic) {
  const int dim = 6 * static_cast<int>(index.size());
  Linearization lin;
  lin.jtj = Eigen::MatrixXd::Zero(dim, dim);
  lin.jtr = Eigen::VectorXd::Zero(dim);

  for (const auto& f : p.factors) {
    Twist r;
    try {
      r = pgo_residual(f, vals.at(f.from), vals.at(f.to));
    } catch (const AngleNearPi&) {
      continue;  // robust-weighted to zero for this iteration
    }
    lin.cost += r.dot(f.information * r);

    Mat6 j_from, j_to;
    if (analytic) {
      factor_jacobians_analytic(f, vals.at(f.from), vals.at(f.to), j_from, j_to);
    } else {
      factor_jacobians_numeric(f, vals.at(f.from), vals.at(f.to), j_from, j_to);
    }

    const auto it_from = index.find(f.from);
    const auto it_to = index.find(f.to);
    const Mat6 w = f.information;
    if (it_from != index.end()) {
      const int a = 6 * it_from->second;
      lin.jtj.block<6, 6>(a, a) += j_from.transpose() * w * j_from;
      lin.jtr.segment<6>(a) += j_from.transpose() * w * r;
    }
    if (it_to != index.end()) {
      const int b = 6 * it_to->second;
      lin.jtj.block<6, 6>(b, b) += j_to.transpose() * w * j_to;
      lin.jtr.segment<6>(b) += j_to.transpose() * w * r;
    }
    if (it_from != index.end() && it_to != index.end()) {
      const int a = 6 * it_from->second;
      const int b = 6 * it_to->second;
      const Mat6 cross_block = j_from.transpose() * w * j_to;
      lin.jtj.block<6, 6>(a, b) += cross_block;
      lin.jtj.block<6, 6>(b, a) += cross_block.transpose();
    }
  }
  return lin;
}

}  // namespace

PgoResult optimize(const PgoProblem& p, int max_iters, double tol, const FilterConfig& cfg) {
  for (const auto& f : p.factors) {
    if (p.variables.count(f.from) == 0 || p.variables.count(f.to) == 0) {
      throw Error("pgo: factor references missing variable");
    }
  }

  // Free-variable index blocks in sorted id order.
  std::map<int, int> index;
  int next = 0;
  for (const auto& [id, pose] : p.variables) {
    if (p.fixed.count(id) == 0 && id != p.gauge) {
      index[id] = next++;
    }
  }

  PgoResult res;
  res.poses = p.variables;
  res.final_cost = evaluate_cost(p, res.poses);
  res.cost_trace.push_back(res.final_cost);
  if (index.empty()) return res;

  double lambda = cfg.lm_lambda_init;
  for (int iter = 0; iter < max_iters; ++iter) {
    const Linearization lin = linearize(p, res.poses, index, cfg.pgo_analytic_jacobians);
    res.iterations = iter + 1;

    double decrease = 0.0;
    while (true) {
      Eigen::MatrixXd damped = lin.jtj;
      damped.diagonal().array() += lambda;
      const Eigen::VectorXd step = damped.ldlt().solve(-lin.jtr);
      if (!step.allFinite()) {
        lambda *= 10.0;
        if (lambda > cfg.lm_lambda_max) throw SingularNormalEquations();
        continue;
      }
      if (step.norm() < 1e-14) {
        // stationary point: accept the no-op and terminate below
        decrease = 0.0;
        break;
      }

      std::map<int, Pose> candidate = res.poses;
      for (const auto& [id, col] : index) {
        candidate[id] = candidate[id] * exp_map(step.segment<6>(6 * col));
      }
      const double new_cost = evaluate_cost(p, candidate);
      if (std::isfinite(new_cost) && new_cost <= lin.cost) {
        decrease = lin.cost - new_cost;
        res.poses = std::move(candidate);
        res.final_cost = new_cost;
        res.cost_trace.push_back(new_cost);
        lambda = std::max(lambda / 10.0, 1e-12);
        break;
      }
      lambda *= 10.0;
      if (lambda > cfg.lm_lambda_max) throw SingularNormalEquations();
    }

    if (decrease < tol) break;
  }
  return res;
}

namespace {

// Builds the per-branch problem pieces for one hypothesis: variables over
// nodes carrying the component, factors from odometry edges and the
// hypothesis's visual constraints. Endpoints outside the variable set enter
// as fixed constants at their fallback mean. `offset` maps node ids into the
// shared variable space of a joint problem.
void build_branch(const TopoGraph& graph, const Hypothesis& hyp,
                  const std::function<int(int)>& var_id, PgoProblem& p) {
  std::set<int> in_set;
  for (const auto& n : graph.nodes()) {
    if (n.has_component(hyp.key)) in_set.insert(n.id);
  }

  auto ensure_variable = [&](int node_id) {
    const int vid = var_id(node_id);
    if (p.variables.count(vid) == 0) {
      p.variables[vid] = graph.node(node_id).component_for(hyp.key).mean;
      if (in_set.count(node_id) == 0) p.fixed.insert(vid);  // constant endpoint
    }
    return vid;
  };

  for (const auto& e : graph.edges()) {
    if (e.kind != EdgeKind::Odometry) continue;
    if (in_set.count(e.from) == 0 && in_set.count(e.to) == 0) continue;
    PgoFactor f;
    f.from = ensure_variable(e.from);
    f.to = ensure_variable(e.to);
    f.measured = e.rel_pose;
    f.information = regularize_cov(e.cov).llt().solve(Cov6::Identity());
    f.kind = EdgeKind::Odometry;
    p.factors.push_back(f);
  }
  for (const auto& vc : hyp.visual_constraints) {
    if (!graph.has_node(vc.from_node) || !graph.has_node(vc.to_node)) continue;
    if (in_set.count(vc.from_node) == 0 && in_set.count(vc.to_node) == 0) continue;
    PgoFactor f;
    f.from = ensure_variable(vc.from_node);
    f.to = ensure_variable(vc.to_node);
    f.measured = vc.rel_pose;
    f.information = regularize_cov(vc.cov).llt().solve(Cov6::Identity());
    f.kind = EdgeKind::Visual;
    p.factors.push_back(f);
  }
}

void write_back(TopoGraph& graph, const Hypothesis& hyp, const PgoProblem& p,
                const PgoResult& res, const std::function<int(int)>& var_id) {
  for (const auto& n : graph.nodes()) {
    if (!n.has_component(hyp.key)) continue;
    const int vid = var_id(n.id);
    const auto it = res.poses.find(vid);
    if (it == res.poses.end() || p.fixed.count(vid) > 0) continue;
    MapNode& node = graph.node_mutable(n.id);
    for (auto& c : node.pose_mixture.components) {
      if (c.hyp_id == hyp.key) c.mean = it->second;
    }
  }
}

}  // namespace

PgoResult smooth_hypothesis(TopoGraph& graph, const Hypothesis& hyp, const FilterConfig& cfg) {
  PgoProblem p;
  const auto ident = [](int id) { return id; };
  build_branch(graph, hyp, ident, p);
  if (p.factors.empty() || p.variables.size() < 2) return PgoResult{};

  // Anchor the earliest free variable unless a constant endpoint already
  // pins the gauge.
  if (p.fixed.empty()) {
    p.gauge = p.variables.begin()->first;
    p.fixed.insert(p.gauge);
  }

  PgoResult res = optimize(p, cfg.pgo_max_iters, cfg.pgo_tol, cfg);
  write_back(graph, hyp, p, res, ident);
  return res;
}

PgoResult joint_loop_pgo(TopoGraph& graph, const Hypothesis& h0, const Hypothesis& hl,
                         const std::vector<int>& overlap, const FilterConfig& cfg) {
  if (overlap.empty()) throw Error("joint_loop_pgo: empty overlap");

  const auto branch0 = [](int id) { return 2 * id; };
  const auto branch1 = [](int id) { return 2 * id + 1; };

  PgoProblem p;
  build_branch(graph, h0, branch0, p);
  build_branch(graph, hl, branch1, p);

  const double loop_info = 1.0 / (cfg.loop_sigma * cfg.loop_sigma);
  for (int node_id : overlap) {
    PgoFactor f;
    f.from = branch0(node_id);
    f.to = branch1(node_id);
    if (p.variables.count(f.from) == 0 || p.variables.count(f.to) == 0) continue;
    f.measured = Pose::identity();
    f.information = loop_info * Mat6::Identity();
    f.kind = EdgeKind::Loop;
    p.factors.push_back(f);
    graph.add_loop_edge(node_id, node_id, Pose::identity(),
                        (cfg.loop_sigma * cfg.loop_sigma) * Cov6::Identity());
  }

  if (p.fixed.empty()) {
    p.gauge = p.variables.begin()->first;
    p.fixed.insert(p.gauge);
  }

  PgoResult res = optimize(p, cfg.pgo_max_iters, cfg.pgo_tol, cfg);
  write_back(graph, h0, p, res, branch0);
  write_back(graph, hl, p, res, branch1);
  return res;
}

void dump_problem(const PgoProblem& p, std::ostream& os) {
  char buf[64];
  for (const auto& f : p.factors) {
    os << "FACTOR " << edge_kind_name(f.kind) << ' ' << f.from << ' ' << f.to;
    const Eigen::Quaterniond q(f.measured.R);
    const double vals[13] = {f.measured.t.x(),       f.measured.t.y(),
                             f.measured.t.z(),       q.x(),
                             q.y(),                  q.z(),
                             q.w(),                  f.information(0, 0),
                             f.information(1, 1),    f.information(2, 2),
                             f.information(3, 3),    f.information(4, 4),
                             f.information(5, 5)};
    for (double v : vals) {
      std::snprintf(buf, sizeof(buf), " %.17g", v);
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace cross
