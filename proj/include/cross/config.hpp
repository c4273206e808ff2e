#pragma once

#include "cross/se3.hpp"

namespace cross {

/// Tuning knobs for the filter and map-management pipeline. Defaults are the
/// values the test suite pins; scenario configs may override any of them.
struct FilterConfig {
  // Mixture bookkeeping
  int k_max = 5;
  double cov_jitter = 1e-12;

  // Prediction: full adjoint transport by default; the cov+Q shortcut is an
  // opt-in fast path gated on the increment size.
  bool small_increment_predict = false;
  double small_increment_thresh = 0.05;

  // Measurement message
  double softmax_temperature = 1.0;
  int inlier_floor = 8;
  double dbscan_eps = 1.0;
  int dbscan_min_pts = 1;
  Vec6 metric_weights = (Vec6() << 1, 1, 1, 2, 2, 2).finished();
  double cluster_weight_floor = 1e-3;

  // Hypothesis management
  double birth_prior = 0.05;    // restart prior epsilon
  double overlap_gate = 1e-3;   // floor on exp(-m^2/2), m = Mahalanobis gap
  double miss_factor = 0.5;     // per-step decay of unmatched components
  double prune_threshold = 1e-3;

  // Map management
  double node_create_beta = 0.55;
  double proximity_radius = 0.5;

  // Pose-graph optimization
  double lm_lambda_init = 1e-4;
  double lm_lambda_max = 1e8;
  int pgo_max_iters = 100;
  double pgo_tol = 1e-12;
  bool pgo_analytic_jacobians = false;
  int smooth_every = 25;
  double loop_sigma = 1e-4;

  // Sequential hypothesis testing
  int sht_window = 10;  // W
  int sht_accept = 7;   // r

  // Query-mode initial uncertainty (unlocalized start)
  double init_pos_sigma_query = 50.0;
  double init_rot_sigma_query = 0.5;
  double init_pos_sigma_map = 1e-3;
  double init_rot_sigma_map = 1e-3;
};

/// Knobs for the simulated perception front-end.
struct SimConfig {
  double sensing_radius = 8.0;
  int top_n = 5;
  int descriptor_dim = 64;
  int max_features = 100;  // M in the association score
  Vec6 rel_cov_diag =
      (Vec6() << 0.05 * 0.05, 0.05 * 0.05, 0.05 * 0.05, 0.02 * 0.02, 0.02 * 0.02, 0.02 * 0.02)
          .finished();
  double blur_sigma_mult = 10.0;
  double blur_inlier_factor = 0.5;
  double outlier_ball_radius = 5.0;  // meters; rotation angle drawn up to pi
};

}  // namespace cross
