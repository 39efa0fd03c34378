#pragma once

#include <string>
#include <vector>

#include "snapjump/surrogate.hpp"

namespace snapjump {

// Image of the controllable-parameter rectangle (δα, ε) under the surrogate
// at fixed environment (m̄, μ): predicted apexes on an m x n midpoint grid
// plus the image of the rectangle's perimeter as a closed polygon.
struct ReachableRegion {
  double mbar = 0.0;
  double mu = 0.0;
  DesignRanges ranges;
  int m = 0;  // δα blocks
  int n = 0;  // ε blocks
  Eigen::MatrixXd pred_x;  // m x n
  Eigen::MatrixXd pred_y;  // m x n
  // Perimeter image, counter-clockwise in parameter space, not closed
  // (last != first); closure is implicit.
  std::vector<Vec2> polygon;
  // False when the perimeter image self-intersects; membership tests then
  // fall back to nearest-grid-image distance.
  bool polygon_simple = true;

  double dalpha_at(int i) const;  // block midpoint, i in [0, m)
  double eps_at(int j) const;     // block midpoint, j in [0, n)
};

ReachableRegion reachable_region(const SurrogateModel& model, double mbar,
                                 double mu, int m = 50, int n = 50,
                                 const DesignRanges& ranges = {});

// Even-odd ray cast with a horizontal ray toward +x. Points within `band`
// of an edge count as inside. The polygon is implicitly closed.
bool point_in_polygon(const Vec2& point, const std::vector<Vec2>& polygon,
                      double band = 1e-9);

bool polygon_is_simple(const std::vector<Vec2>& polygon);

bool is_reachable(const Vec2& target, const ReachableRegion& region);

struct SolveOptions {
  int max_iterations = 500;
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double cost_tol = 1e-8;       // stop when J < cost_tol
  double step_tol = 1e-10;      // stop when the accepted step is tiny
  int multi_starts = 5;
  double residual_warn = 1e-3;  // J above this flags a near-boundary warning
};

struct InverseSolution {
  bool reachable = false;
  double dalpha = 0.0;
  double eps = 0.0;
  Vec2 predicted{0.0, 0.0};
  double cost = 0.0;  // J = |prediction - target|^2
  int iterations = 0;
  double wall_time = 0.0;  // s
  bool near_boundary_warning = false;
};

// Minimizes J(δα, ε) = ||model(δα, ε, m̄, μ) - target||² with the surrogate's
// input gradient, iterates projected to the controllable box. Multi-start
// from the grid midpoints whose predictions are nearest the target; best
// cost wins, ties by smaller δα. `region` is computed on the fly when null.
InverseSolution solve_inverse(const Vec2& target, double mbar, double mu,
                              const SurrogateModel& model,
                              const ReachableRegion* region = nullptr,
                              const SolveOptions& options = {});

struct ValidationCase {
  double mbar = 0.0, mu = 0.0;
  Vec2 target{0.0, 0.0};
  InverseSolution solution;
  Vec2 simulated{0.0, 0.0};  // physics apex (m), absolute units
  double apex_error = 0.0;   // m
};

struct ValidationStats {
  std::vector<ValidationCase> cases;
  double mean_error = 0.0;  // m
  double std_error = 0.0;   // m
  double mean_solve_time = 0.0;  // s
};

// Samples `trials` random environments, picks a random reachable target in
// each region, solves, and re-simulates the solution with the physics
// engine. Targets are drawn in normalized units and compared in meters.
ValidationStats validate_inverse(int trials, const SurrogateModel& model,
                                 const MountingRule& rule,
                                 const JumpOptions& sim_options,
                                 unsigned seed = 1,
                                 const SolveOptions& solve_options = {});

}  // namespace snapjump
