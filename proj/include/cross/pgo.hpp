#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <vector>

#include "cross/config.hpp"
#include "cross/graph.hpp"
#include "cross/hypothesis.hpp"
#include "cross/se3.hpp"

namespace cross {

struct PgoFactor {
  int from = -1;
  int to = -1;
  Pose measured;
  Mat6 information = Mat6::Identity();
  EdgeKind kind = EdgeKind::Odometry;
};

/// Nonlinear least squares over SE(3) variables with relative-pose factors.
/// Variables listed in `fixed` (always including the gauge anchor) are held
/// constant.
struct PgoProblem {
  std::map<int, Pose> variables;
  std::set<int> fixed;
  std::vector<PgoFactor> factors;
  int gauge = -1;
};

struct PgoResult {
  std::map<int, Pose> poses;
  double final_cost = 0.0;
  int iterations = 0;
  std::vector<double> cost_trace;  // accepted costs, monotone non-increasing
};

/// log(measured^-1 mu_i^-1 mu_j). Throws AngleNearPi out of chart.
Twist pgo_residual(const PgoFactor& f, const Pose& mu_i, const Pose& mu_j);

/// Levenberg-Marquardt with right-perturbation Jacobians. Numeric central
/// differences (step 1e-6) by default; the analytic path must agree with the
/// numeric one to 1e-5 and is enabled via cfg.pgo_analytic_jacobians.
/// Throws SingularNormalEquations when damping escalates past the limit.
PgoResult optimize(const PgoProblem& p, int max_iters, double tol,
                   const FilterConfig& cfg = FilterConfig());

/// Jacobian blocks of one factor residual w.r.t. right perturbations of the
/// two endpoints. Exposed for the numeric-vs-analytic agreement checks.
void factor_jacobians_numeric(const PgoFactor& f, const Pose& mu_i, const Pose& mu_j,
                              Mat6& j_from, Mat6& j_to);
void factor_jacobians_analytic(const PgoFactor& f, const Pose& mu_i, const Pose& mu_j,
                               Mat6& j_from, Mat6& j_to);

/// Per-hypothesis smoothing: odometry edges plus the hypothesis's visual
/// constraints over component-l means. Optimized means are written back into
/// component l of each touched node; other components are untouched.
/// Returns the optimizer result (empty when there is nothing to optimize).
PgoResult smooth_hypothesis(TopoGraph& graph, const Hypothesis& hyp,
                            const FilterConfig& cfg = FilterConfig());

/// Joint optimization over both branches with identity residuals tying the
/// overlap nodes (information (1/loop_sigma)^2 I). Writes both components
/// back. Throws on empty overlap.
PgoResult joint_loop_pgo(TopoGraph& graph, const Hypothesis& h0, const Hypothesis& hl,
                         const std::vector<int>& overlap,
                         const FilterConfig& cfg = FilterConfig());

/// FACTOR lines for debugging dumps, alongside the graph serialization.
void dump_problem(const PgoProblem& p, std::ostream& os);

}  // namespace cross
