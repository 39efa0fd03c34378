#include "snapjump/beam_lab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace snapjump {

namespace {

void check_spec(const BeamSpec& spec) {
  if (spec.num_nodes < 3)
    throw AssemblyError("beam needs at least 3 nodes");
  if (!(spec.eps > 0.0 && spec.eps < 0.5))
    throw AssemblyError("pre-compression ratio must lie in (0, 0.5)");
  if (!(spec.length > 0.0))
    throw AssemblyError("beam length must be positive");
}

int mid_edge_index(int num_nodes) { return (num_nodes - 1) / 2; }

DofVector buckling_mode_seed(const BeamSpec& spec, double sign) {
  const int n = spec.num_nodes;
  const double l1 = spec.span();
  const double delta_length = spec.eps * spec.length;
  // First clamped-clamped mode with amplitude chosen so the curve's
  // arclength matches the rest length to leading order.
  const double amplitude = 2.0 * std::sqrt(delta_length * l1) / M_PI;
  DofVector q(2 * n);
  for (int i = 0; i < n; ++i) {
    const double x = l1 * i / (n - 1);
    const double y =
        sign * 0.5 * amplitude * (1.0 - std::cos(2.0 * M_PI * x / l1));
    set_node_pos(q, i, {x, y});
  }
  return q;
}

struct SweepPoint {
  double alpha;
  DofVector q;
  // Newton either converged on a branch or fell off the fold entirely.
  enum { kUp, kDown, kFold } where;
};

// One continuation step from the warm up-branch start. A Newton failure is
// the fold signature: the up branch has ceased to exist.
SweepPoint continue_up(const BeamSpec& spec, const DiscreteStructure& s,
                       double alpha, const DofVector& warm) {
  const auto fixed = clamp_dofs(spec, alpha, alpha);
  try {
    DofVector q = static_solve(warm, s, fixed);
    const bool down = midpoint_height_ratio(spec, q) < 0.0;
    return {alpha, q, down ? SweepPoint::kDown : SweepPoint::kUp};
  } catch (const ConvergenceError&) {
    return {alpha, {}, SweepPoint::kFold};
  }
}

// Down-branch equilibria are found by continuation from alpha = 0 (the
// branch is far from its own fold for alpha >= 0, so every step is benign);
// seeding directly at large alpha stalls in the clamp boundary layers.
class DownBranch {
 public:
  DownBranch(const BeamSpec& spec, const DiscreteStructure& s, double step)
      : spec_(spec), s_(s), step_(step) {}

  DofVector at(double alpha) {
    if (q_.size() == 0) q_ = make_buckled_beam(spec_, BucklingBranch::kDown);
    while (alpha_ < alpha - 1e-15) {
      alpha_ = std::min(alpha_ + step_, alpha);
      q_ = static_solve(q_, s_, clamp_dofs(spec_, alpha_, alpha_));
    }
    if (alpha >= alpha_ - 1e-15) return q_;
    // Behind the frontier: one short backward step off the cached state.
    return static_solve(q_, s_, clamp_dofs(spec_, alpha, alpha));
  }

 private:
  const BeamSpec& spec_;
  const DiscreteStructure& s_;
  double step_;
  double alpha_ = 0.0;
  DofVector q_;
};

}  // namespace

DiscreteStructure make_beam_structure(const BeamSpec& spec) {
  check_spec(spec);
  DiscreteStructure s;
  s.num_nodes = spec.num_nodes;
  const double edge = spec.edge_length();
  const double ea = spec.axial_stiffness();
  const double ei = spec.bending_stiffness();
  s.stretches.reserve(spec.num_nodes - 1);
  for (int i = 0; i + 1 < spec.num_nodes; ++i)
    s.stretches.push_back({i, i + 1, edge, ea});
  s.hinges.reserve(spec.num_nodes - 2);
  for (int i = 1; i + 1 < spec.num_nodes; ++i)
    s.hinges.push_back({i - 1, i, i + 1, edge, 0.0, ei});
  s.node_mass = lumped_masses(s.num_nodes, s.stretches, spec.mass_per_length());
  s.validate();
  return s;
}

std::vector<std::pair<int, double>> clamp_dofs(const BeamSpec& spec,
                                               double alpha_left,
                                               double alpha_right) {
  const int n = spec.num_nodes;
  const double l1 = spec.span();
  const double edge = spec.edge_length();
  const Vec2 left_inner{edge * std::cos(alpha_left),
                        -edge * std::sin(alpha_left)};
  const Vec2 right_inner{l1 - edge * std::cos(alpha_right),
                         -edge * std::sin(alpha_right)};
  return {
      {0, 0.0},
      {1, 0.0},
      {2, left_inner.x()},
      {3, left_inner.y()},
      {2 * (n - 2), right_inner.x()},
      {2 * (n - 2) + 1, right_inner.y()},
      {2 * (n - 1), l1},
      {2 * (n - 1) + 1, 0.0},
  };
}

DofVector make_buckled_beam(const BeamSpec& spec, BucklingBranch branch) {
  check_spec(spec);
  const DiscreteStructure s = make_beam_structure(spec);
  const double sign = branch == BucklingBranch::kUp ? 1.0 : -1.0;
  return static_solve(buckling_mode_seed(spec, sign), s,
                      clamp_dofs(spec, 0.0, 0.0));
}

double midpoint_height_ratio(const BeamSpec& spec, const DofVector& q) {
  const int m = mid_edge_index(spec.num_nodes);
  return 0.5 * (q[2 * m + 1] + q[2 * (m + 1) + 1]) / spec.length;
}

double midpoint_angle(const BeamSpec& spec, const DofVector& q) {
  const int m = mid_edge_index(spec.num_nodes);
  const Vec2 e = node_pos(q, m + 1) - node_pos(q, m);
  return std::atan2(e.y(), e.x());
}

double normalized_energy(const BeamSpec& spec, const DiscreteStructure& s,
                         const DofVector& q) {
  return total_energy(s, q) * spec.length / spec.bending_stiffness();
}

StaticSweepResult static_sweep(const BeamSpec& spec,
                               const StaticSweepOptions& opts) {
  const DiscreteStructure s = make_beam_structure(spec);
  StaticSweepResult out;
  auto record = [&](double alpha, const DofVector& q) {
    out.alpha.push_back(alpha);
    out.ybar_mid.push_back(midpoint_height_ratio(spec, q));
    out.ebar.push_back(normalized_energy(spec, s, q));
  };

  SweepPoint pre{0.0, make_buckled_beam(spec, BucklingBranch::kUp),
                 SweepPoint::kUp};
  record(pre.alpha, pre.q);

  // Coarse continuation until the up branch folds (Newton failure) or the
  // solver falls onto the down branch on its own.
  double snap_hi = -1.0;
  for (double alpha = opts.alpha_step; alpha <= opts.alpha_max + 1e-12;
       alpha += opts.alpha_step) {
    SweepPoint next = continue_up(spec, s, alpha, pre.q);
    if (next.where != SweepPoint::kUp) {
      snap_hi = alpha;
      break;
    }
    record(next.alpha, next.q);
    pre = next;
  }
  if (snap_hi < 0.0)
    throw ConvergenceError("no snap-through before alpha_max = " +
                           std::to_string(opts.alpha_max));

  // Localize alpha* inside (pre.alpha, snap_hi] with the fine step.
  double snap_alpha = snap_hi;
  for (double alpha = pre.alpha + opts.alpha_refine; alpha < snap_hi - 1e-12;
       alpha += opts.alpha_refine) {
    SweepPoint next = continue_up(spec, s, alpha, pre.q);
    if (next.where != SweepPoint::kUp) {
      snap_alpha = alpha;
      break;
    }
    record(next.alpha, next.q);
    pre = next;
  }

  DownBranch down(spec, s, opts.alpha_step);
  out.snap_alpha = snap_alpha;
  out.pre_snap_q = pre.q;
  out.post_snap_q = down.at(snap_alpha);
  out.released_energy = normalized_energy(spec, s, pre.q) -
                        normalized_energy(spec, s, out.post_snap_q);
  record(snap_alpha, out.post_snap_q);
  return out;
}

std::pair<double, double> critical_heights(const StaticSweepResult& sweep) {
  auto depth = [](const DofVector& q) {
    double min_y = 0.0;
    for (int i = 1; i < q.size(); i += 2) min_y = std::min(min_y, q[i]);
    return -min_y;
  };
  return {depth(sweep.pre_snap_q), depth(sweep.post_snap_q)};
}

std::pair<double, double> critical_heights(const BeamSpec& spec) {
  return critical_heights(static_sweep(spec));
}

DynamicSnapResult dynamic_snap(const BeamSpec& spec,
                               const DynamicSnapOptions& opts) {
  const DiscreteStructure s = make_beam_structure(spec);

  SystemState state;
  state.q = make_buckled_beam(spec, BucklingBranch::kUp);
  state.qdot = DofVector::Zero(s.num_dofs());
  state.t = 0.0;

  const double rate = opts.rate;
  const double mismatch = opts.mismatch;
  auto alpha_left = [rate](double t) { return rate * t; };
  auto alpha_right = [rate, mismatch](double t) {
    return std::max(rate * t - mismatch, 0.0);
  };

  const int n = spec.num_nodes;
  const double l1 = spec.span();
  const double edge = spec.edge_length();
  BoundarySpec boundary;
  boundary.fix_node(0, {0.0, 0.0});
  boundary.prescribe_node(1, [=](double t) {
    const double a = alpha_left(t);
    return Vec2{edge * std::cos(a), -edge * std::sin(a)};
  });
  boundary.prescribe_node(n - 2, [=](double t) {
    const double a = alpha_right(t);
    return Vec2{l1 - edge * std::cos(a), -edge * std::sin(a)};
  });
  boundary.fix_node(n - 1, {l1, 0.0});

  StepperConfig cfg;
  cfg.dt = opts.dt;
  cfg.gravity = 0.0;

  // theta_max is taken over the branch traversal itself (midpoint between
  // 80% of the up height and 80% of the down height); the free ringing
  // after the snap is not part of the transition.
  DynamicSnapResult out;
  const double y_up = midpoint_height_ratio(spec, state.q);
  const double band = 0.8 * y_up;
  double stop_time = -1.0;
  bool traversed = false;
  double window_max = 0.0;
  SimulateOptions sim;
  sim.record_stride = opts.record_stride;
  sim.observe = [&](const SystemState& st) {
    const double ybar = midpoint_height_ratio(spec, st.q);
    if (!traversed) {
      if (ybar >= band) {
        window_max = 0.0;  // still (or back) on the up side; restart window
      } else {
        window_max =
            std::max(window_max, std::abs(midpoint_angle(spec, st.q)));
        if (ybar <= -band) {
          traversed = true;
          out.theta_max = window_max;
        }
      }
    }
    if (!out.snapped && ybar < 0.0) {
      out.snapped = true;
      out.snap_time = st.t;
      stop_time = st.t + opts.settle_after;
    }
    return stop_time < 0.0 || st.t < stop_time;
  };

  const double duration = (1.5 + mismatch) / rate + opts.settle_after;
  out.trajectory = simulate(state, s, nullptr, boundary, cfg, duration, sim);
  if (!out.snapped)
    throw ConvergenceError("no dynamic snap within the actuation budget");
  if (!traversed) out.theta_max = window_max;
  return out;
}

double MountingRule::height_for(double eps_query) const {
  if (eps.empty()) throw AssemblyError("empty mounting table");
  if (eps_query <= eps.front()) return h1.front();
  if (eps_query >= eps.back()) return h1.back();
  const auto it = std::upper_bound(eps.begin(), eps.end(), eps_query);
  const size_t k = it - eps.begin();
  const double w = (eps_query - eps[k - 1]) / (eps[k] - eps[k - 1]);
  return (1.0 - w) * h1[k - 1] + w * h1[k];
}

double MountingRule::upper_height_for(double eps_query) const {
  if (eps.empty()) throw AssemblyError("empty mounting table");
  if (eps_query <= eps.front()) return h2.front();
  if (eps_query >= eps.back()) return h2.back();
  const auto it = std::upper_bound(eps.begin(), eps.end(), eps_query);
  const size_t k = it - eps.begin();
  const double w = (eps_query - eps[k - 1]) / (eps[k] - eps[k - 1]);
  return (1.0 - w) * h2[k - 1] + w * h2[k];
}

void MountingRule::save_csv(const std::string& path) const {
  std::ofstream file(path);
  if (!file) throw AssemblyError("cannot open " + path + " for writing");
  file << "eps,h1,h2\n";
  char line[128];
  for (size_t k = 0; k < eps.size(); ++k) {
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g\n", eps[k], h1[k],
                  h2[k]);
    file << line;
  }
}

MountingRule MountingRule::load_csv(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw AssemblyError("cannot open " + path);
  MountingRule rule;
  std::string line;
  std::getline(file, line);  // header
  while (std::getline(file, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    double vals[3];
    for (double& v : vals) {
      if (!std::getline(ss, field, ','))
        throw AssemblyError("malformed mounting table row: " + line);
      v = std::stod(field);
    }
    rule.eps.push_back(vals[0]);
    rule.h1.push_back(vals[1]);
    rule.h2.push_back(vals[2]);
  }
  if (rule.eps.empty()) throw AssemblyError("empty mounting table: " + path);
  return rule;
}

MountingRule build_mounting_rule(const BeamSpec& base, double eps_min,
                                 double eps_max, int count) {
  if (count < 2 || !(eps_min < eps_max))
    throw AssemblyError("invalid mounting-table grid");
  MountingRule rule;
  rule.eps.reserve(count);
  for (int k = 0; k < count; ++k) {
    BeamSpec spec = base;
    spec.eps = eps_min + (eps_max - eps_min) * k / (count - 1);
    const auto [h1, h2] = critical_heights(spec);
    rule.eps.push_back(spec.eps);
    rule.h1.push_back(h1);
    rule.h2.push_back(h2);
  }
  return rule;
}

}  // namespace snapjump
