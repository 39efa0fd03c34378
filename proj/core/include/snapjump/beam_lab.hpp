#pragma once

#include <string>
#include <vector>

#include "snapjump/elastic.hpp"
#include "snapjump/stepper.hpp"
#include "snapjump/types.hpp"

namespace snapjump {

// Pre-compressed clamped-clamped beam. Rest length L, clamp separation
// l1 = L (1 - eps). Defaults follow the steel-strip hardware scale.
struct BeamSpec {
  double length = 0.02;      // L, m
  double eps = 0.2;          // pre-compression ratio, (0, 0.5)
  double width = 0.01;       // w, m
  double thickness = 5e-5;   // b, m
  double youngs = 200e9;     // E, Pa
  double density = 5000.0;   // rho, kg/m^3
  int num_nodes = 100;

  double span() const { return length * (1.0 - eps); }  // l1
  double axial_stiffness() const { return youngs * width * thickness; }
  double bending_stiffness() const {
    return youngs * width * thickness * thickness * thickness / 12.0;
  }
  double mass_per_length() const { return density * width * thickness; }
  double edge_length() const { return length / (num_nodes - 1); }
};

enum class BucklingBranch { kUp, kDown };

// Straight-rest-shape chain of spec.num_nodes nodes with uniform elements
// and lumped masses.
DiscreteStructure make_beam_structure(const BeamSpec& spec);

// Clamp DOF values for end-tangent angles: the first edge leaves the left
// clamp along (cos(-alpha_left), sin(-alpha_left)) and the last edge enters
// the right clamp along (cos(alpha_right), sin(alpha_right)), so equal
// angles keep the configuration mirror-symmetric while driving the arch
// toward the down branch. Returns (dof index, value) pairs for the four
// clamp nodes.
std::vector<std::pair<int, double>> clamp_dofs(const BeamSpec& spec,
                                               double alpha_left,
                                               double alpha_right);

// Equilibrium of the beam buckled into the requested branch with horizontal
// clamps (alpha = 0), seeded with the first clamped-clamped buckling mode.
DofVector make_buckled_beam(const BeamSpec& spec, BucklingBranch branch);

// Height of the beam midpoint (mid-edge average) divided by L.
double midpoint_height_ratio(const BeamSpec& spec, const DofVector& q);

// Tangent angle of the edge nearest the arclength midpoint, measured from
// the clamp line.
double midpoint_angle(const BeamSpec& spec, const DofVector& q);

// E^ela * L / EI.
double normalized_energy(const BeamSpec& spec, const DiscreteStructure& s,
                         const DofVector& q);

struct StaticSweepResult {
  std::vector<double> alpha;     // rad, sampled clamp rotation
  std::vector<double> ybar_mid;  // midpoint height / L
  std::vector<double> ebar;      // E^ela L / EI
  double snap_alpha = 0.0;       // alpha*, rad
  double released_energy = 0.0;  // dEbar across the branch jump
  DofVector pre_snap_q;          // last up-branch equilibrium
  DofVector post_snap_q;         // down-branch equilibrium at alpha*
};

struct StaticSweepOptions {
  double alpha_max = 1.5;        // rad
  double alpha_step = 1e-2;      // rad, coarse continuation step
  double alpha_refine = 1e-3;    // rad, step used to localize the fold
};

// Quasi-static continuation in the symmetric clamp rotation alpha starting
// from the up branch. Throws ConvergenceError when no snap occurs before
// alpha_max.
StaticSweepResult static_sweep(const BeamSpec& spec,
                               const StaticSweepOptions& opts = {});

// Maximum downward excursions below the clamp line of the last pre-snap
// equilibrium (h1) and of the post-snap equilibrium at alpha* (h2).
std::pair<double, double> critical_heights(const StaticSweepResult& sweep);
std::pair<double, double> critical_heights(const BeamSpec& spec);

struct DynamicSnapResult {
  double theta_max = 0.0;  // rad, max |midpoint angle| over the run
  double snap_time = 0.0;  // s, first midpoint sign flip
  bool snapped = false;
  std::vector<SystemState> trajectory;
};

struct DynamicSnapOptions {
  double rate = 20.0;        // alpha_dot, rad/s
  double mismatch = 0.0;     // dalpha, rad
  double dt = 1e-3;          // s
  double settle_after = 0.05;  // s of extra integration past the snap
  int record_stride = 1;     // 0 keeps only diagnostics
};

// Dynamic snap of the world-clamped beam: alpha_L = rate*t,
// alpha_R = max(rate*t - mismatch, 0); gravity and contact off.
DynamicSnapResult dynamic_snap(const BeamSpec& spec,
                               const DynamicSnapOptions& opts);

// Optimal-mounting table h1 = f(eps) (plus h2 for the no-jump bound),
// linearly interpolated and clamped at the tabulated ends.
struct MountingRule {
  std::vector<double> eps;  // ascending
  std::vector<double> h1;   // m
  std::vector<double> h2;   // m

  double height_for(double eps_query) const;
  double upper_height_for(double eps_query) const;

  void save_csv(const std::string& path) const;
  static MountingRule load_csv(const std::string& path);
};

// Tabulates critical heights over a uniform eps grid using `base` for all
// non-eps beam parameters.
MountingRule build_mounting_rule(const BeamSpec& base, double eps_min = 0.05,
                                 double eps_max = 0.35, int count = 31);

}  // namespace snapjump
