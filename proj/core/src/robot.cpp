#include "snapjump/robot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace snapjump {

namespace {

constexpr double kGravity = 10.0;  // m/s^2, magnitude

// Static resting gap of the bottom bar: total weight balanced by the
// barrier force shared over the bar nodes.
double resting_gap(double weight_per_node, const ContactModel& contact) {
  double lo = 1e-6 * contact.barrier_distance;
  double hi = contact.barrier_distance;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    // normal_force_magnitude is monotone decreasing on (0, d~).
    (normal_force_magnitude(mid, contact) > weight_per_node ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

int segment_edges(double length, double target_edge) {
  return std::max(1, static_cast<int>(std::lround(length / target_edge)));
}

}  // namespace

double mass_from_mbar(const BeamSpec& beam, double mbar,
                      double gravity_magnitude) {
  return mbar * beam.bending_stiffness() /
         (gravity_magnitude * beam.length * beam.length);
}

RobotAssembly assemble_robot(const RobotDesign& design,
                             const ContactModel& contact) {
  const BeamSpec& beam = design.beam;
  const double l1 = beam.span();
  const double l2 = design.frame_height;
  const double h = design.mounting_height;
  if (!(h > 0.0 && h < l2))
    throw AssemblyError("mounting height must lie inside (0, l2)");
  if (design.frame_nodes < 10)
    throw AssemblyError("frame needs at least 10 nodes");

  const int nb = beam.num_nodes;
  const int frame_edges = design.frame_nodes - 1;

  // Split the frame chain into five segments (upper legs, lower legs, bar)
  // with mirror-symmetric edge counts summing to frame_edges.
  const double target_edge = (2.0 * l2 + l1) / frame_edges;
  int n_upper = segment_edges(l2 - h, target_edge);
  int n_lower = segment_edges(h, target_edge);
  int n_bar = frame_edges - 2 * (n_upper + n_lower);
  while (n_bar < 1) {
    if (n_upper > n_lower && n_upper > 1)
      --n_upper;
    else if (n_lower > 1)
      --n_lower;
    else
      throw AssemblyError("frame too coarse for the requested geometry");
    n_bar = frame_edges - 2 * (n_upper + n_lower);
  }

  const double weight_per_node =
      design.total_mass * kGravity / (n_bar + 1);
  const double gap = resting_gap(weight_per_node, contact);
  if (h <= gap + 1e-4)
    throw AssemblyError("mounting height " + std::to_string(h) +
                        " m sits below the resting bar");

  // Beam nodes [0, nb): the up-branch equilibrium raised to height h.
  DofVector q_beam = make_buckled_beam(beam, BucklingBranch::kUp);
  const int num_nodes = nb + design.frame_nodes - 2;
  DofVector q0(2 * num_nodes);
  for (int i = 0; i < nb; ++i)
    set_node_pos(q0, i, node_pos(q_beam, i) + Vec2{0.0, h});

  // Frame chain node ids in order, reusing the beam ends as the junctions.
  const int left_junction = 0;
  const int right_junction = nb - 1;
  std::vector<int> chain;
  chain.reserve(design.frame_nodes);
  int next_id = nb;
  // end_id < 0 allocates a fresh node for the segment end.
  auto add_segment = [&](const Vec2& from, const Vec2& to, int edges,
                         int end_id) {
    for (int k = 1; k < edges; ++k) {
      const double w = static_cast<double>(k) / edges;
      set_node_pos(q0, next_id, (1.0 - w) * from + w * to);
      chain.push_back(next_id++);
    }
    if (end_id < 0) end_id = next_id++;
    set_node_pos(q0, end_id, to);
    chain.push_back(end_id);
  };
  // Top-left start.
  set_node_pos(q0, next_id, {0.0, l2});
  chain.push_back(next_id++);
  add_segment({0.0, l2}, {0.0, h}, n_upper, left_junction);
  add_segment({0.0, h}, {0.0, gap}, n_lower, -1);
  add_segment({0.0, gap}, {l1, gap}, n_bar, -1);
  add_segment({l1, gap}, {l1, h}, n_lower, right_junction);
  add_segment({l1, h}, {l1, l2}, n_upper, -1);
  if (static_cast<int>(chain.size()) != design.frame_nodes ||
      next_id != num_nodes)
    throw AssemblyError("frame chain bookkeeping mismatch");

  DiscreteStructure s;
  s.num_nodes = num_nodes;
  const double ea = beam.axial_stiffness();
  const double ei = beam.bending_stiffness();
  const double ea_f = design.frame_stiffening * ea;
  const double ei_f = design.frame_stiffening * ei;
  const double beam_edge = beam.edge_length();

  for (int i = 0; i + 1 < nb; ++i)
    s.stretches.push_back({i, i + 1, beam_edge, ea});
  for (int i = 1; i + 1 < nb; ++i)
    s.hinges.push_back({i - 1, i, i + 1, beam_edge, 0.0, ei});

  // Frame elements; rest lengths from the assembled straight geometry.
  std::vector<double> frame_edge_rest(chain.size() - 1);
  for (size_t k = 0; k + 1 < chain.size(); ++k) {
    const double rest =
        (node_pos(q0, chain[k + 1]) - node_pos(q0, chain[k])).norm();
    frame_edge_rest[k] = rest;
    s.stretches.push_back({chain[k], chain[k + 1], rest, ea_f});
  }
  for (size_t k = 1; k + 1 < chain.size(); ++k) {
    const Vec2 e1 = node_pos(q0, chain[k]) - node_pos(q0, chain[k - 1]);
    const Vec2 e2 = node_pos(q0, chain[k + 1]) - node_pos(q0, chain[k]);
    const double rest_angle = std::atan2(cross2(e1, e2), e1.dot(e2));
    s.hinges.push_back({chain[k - 1], chain[k], chain[k + 1],
                        0.5 * (frame_edge_rest[k - 1] + frame_edge_rest[k]),
                        rest_angle, ei_f});
  }

  // Actuated junction hinges clamp the beam tangent to the upper leg
  // direction: natural angle pi/2 - alpha_L on the left, alpha_R - pi/2 on
  // the right (alpha = 0 at assembly).
  const int above_left = chain[n_upper - 1];
  const int above_right = chain[chain.size() - n_upper];
  const double upper_edge = frame_edge_rest[n_upper - 1];
  RobotAssembly assembly;
  assembly.left_hinge = static_cast<int>(s.hinges.size());
  s.hinges.push_back({above_left, left_junction, 1,
                      0.5 * (upper_edge + beam_edge), M_PI / 2.0, ei_f});
  assembly.right_hinge = static_cast<int>(s.hinges.size());
  s.hinges.push_back({above_right, right_junction, nb - 2,
                      0.5 * (upper_edge + beam_edge), -M_PI / 2.0, ei_f});

  // Lumped masses: beam at natural density, frame scaled so the total mass
  // matches the design.
  const double rho_line = beam.mass_per_length();
  const double beam_mass = rho_line * beam.length;
  double frame_length = 0.0;
  for (double rest : frame_edge_rest) frame_length += rest;
  const double frame_scale =
      (design.total_mass - beam_mass) / (rho_line * frame_length);
  if (frame_scale <= 0.0)
    throw AssemblyError("total mass below the beam's own mass");
  s.node_mass = Eigen::VectorXd::Zero(num_nodes);
  for (int i = 0; i + 1 < nb; ++i) {
    s.node_mass[i] += 0.5 * rho_line * beam_edge;
    s.node_mass[i + 1] += 0.5 * rho_line * beam_edge;
  }
  for (size_t k = 0; k + 1 < chain.size(); ++k) {
    const double half = 0.5 * frame_scale * rho_line * frame_edge_rest[k];
    s.node_mass[chain[k]] += half;
    s.node_mass[chain[k + 1]] += half;
  }
  s.validate();

  assembly.structure = std::move(s);
  assembly.q0 = std::move(q0);
  assembly.left_junction = left_junction;
  assembly.right_junction = right_junction;
  assembly.beam_nodes = nb;
  assembly.ground_gap = gap;
  return assembly;
}

JumpResult simulate_jump(const RobotDesign& design,
                         const ActuationProtocol& protocol,
                         const ContactModel& contact_in,
                         const JumpOptions& options) {
  ContactModel contact = contact_in;
  contact.friction = design.friction;
  RobotAssembly assembly = assemble_robot(design, contact);
  DiscreteStructure& s = assembly.structure;
  const double L = design.beam.length;
  const int nb = assembly.beam_nodes;
  const double total_mass = s.node_mass.sum();

  StepperConfig cfg;
  cfg.dt = options.dt;
  cfg.gravity = -kGravity;

  const double t0 = options.settle_time;
  double hold_until = std::numeric_limits<double>::infinity();
  auto prepare = [&](double t) {
    const double a = std::min(
        protocol.rate * std::max(std::min(t, hold_until) - t0, 0.0),
        protocol.alpha_cap);
    const double a_right = std::max(a - protocol.mismatch, 0.0);
    s.hinges[assembly.left_hinge].rest_angle = M_PI / 2.0 - a;
    s.hinges[assembly.right_hinge].rest_angle = a_right - M_PI / 2.0;
  };

  auto com = [&](const DofVector& q) {
    Vec2 c{0.0, 0.0};
    for (int i = 0; i < s.num_nodes; ++i)
      c += s.node_mass[i] * node_pos(q, i);
    return Vec2{c / total_mass};
  };
  auto com_velocity = [&](const DofVector& qdot) {
    Vec2 c{0.0, 0.0};
    for (int i = 0; i < s.num_nodes; ++i)
      c += s.node_mass[i] * node_pos(qdot, i);
    return Vec2{c / total_mass};
  };
  auto min_height = [&](const DofVector& q) {
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < s.num_nodes; ++i) m = std::min(m, q[2 * i + 1]);
    return m;
  };
  auto midpoint_below = [&](const DofVector& q) {
    const Vec2 jl = node_pos(q, assembly.left_junction);
    const Vec2 jr = node_pos(q, assembly.right_junction);
    const Vec2 mid = 0.5 * (node_pos(q, nb / 2 - 1) + node_pos(q, nb / 2));
    return cross2(jr - jl, mid - jl) < 0.0;
  };

  SystemState state;
  state.q = assembly.q0;
  state.qdot = DofVector::Zero(s.num_dofs());
  state.t = 0.0;

  JumpResult out;
  BoundarySpec boundary;
  bool snapped = false;
  double snap_time = 0.0;
  bool airborne = false;
  double liftoff_time = 0.0;
  double start_x = com(state.q).x();
  double start_y = com(state.q).y();
  bool start_recorded = false;

  const double ramp_budget =
      (protocol.alpha_cap + protocol.mismatch) / protocol.rate;
  const double t_max = t0 + ramp_budget + options.post_snap_budget;
  const long max_steps =
      std::lround((t_max + options.post_snap_budget) / options.dt);

  auto ballistic_apex = [&](const SystemState& st) {
    const Vec2 c = com(st.q);
    const Vec2 v = com_velocity(st.qdot);
    out.apex_time = st.t + v.y() / kGravity;
    out.apex_y = c.y() + 0.5 * v.y() * v.y() / kGravity;
    out.apex_x = c.x() + v.x() * v.y() / kGravity - start_x;
  };

  Stepper session(s, &contact, boundary, cfg);
  for (long k = 1; k <= max_steps; ++k) {
    state = session.step(state, prepare);
    if (options.record_stride > 0 && k % options.record_stride == 0) {
      const Vec2 c = com(state.q);
      out.com_trajectory.push_back({state.t, c.x(), c.y()});
    }
    if (!start_recorded && state.t >= t0) {
      const Vec2 c = com(state.q);
      start_x = c.x();
      start_y = c.y();
      start_recorded = true;
    }
    if (!snapped && midpoint_below(state.q)) {
      snapped = true;
      snap_time = state.t;
      hold_until = state.t + protocol.hold_margin;
    }
    // Pre-snap loading can levitate the robot quasi-statically when the
    // beam's dip presses the ground early; only the post-snap departure
    // counts as liftoff.
    const bool clear =
        snapped && min_height(state.q) >= contact.barrier_distance;
    if (clear && !airborne) {
      airborne = true;
      liftoff_time = state.t;
    } else if (!clear) {
      airborne = false;
    }
    if (airborne && state.t - liftoff_time >= options.flight_confirm &&
        com_velocity(state.qdot).y() > 0.0) {
      out.jumped = true;
      out.liftoff_time = liftoff_time;
      if (options.exact_flight) {
        out.exact_flight = true;
        ballistic_apex(state);
        break;
      }
      // Integrate the flight out to the velocity zero crossing.
      SystemState prev = state;
      while (com_velocity(state.qdot).y() > 0.0) {
        prev = state;
        state = session.step(state, prepare);
        if (options.record_stride > 0) {
          const Vec2 c = com(state.q);
          out.com_trajectory.push_back({state.t, c.x(), c.y()});
        }
      }
      ballistic_apex(prev);
      break;
    }
    if (snapped && state.t > snap_time + options.post_snap_budget) break;
    if (state.t > t_max) break;
  }

  if (!out.jumped) {
    out.apex_x = 0.0;
    out.apex_y = start_y;
    out.apex_time = t0;
  }
  out.xbar = out.apex_x / L;
  out.ybar = out.apex_y / L;
  return out;
}

JumpResult forward_model(const NormalizedParams& params,
                         const MountingRule& rule,
                         const JumpOptions& options) {
  RobotDesign design;
  design.beam.eps = params.eps;
  design.mounting_height = rule.height_for(params.eps);
  design.total_mass = mass_from_mbar(design.beam, params.mbar);
  design.friction = params.mu;
  ActuationProtocol protocol;
  protocol.mismatch = params.dalpha;
  ContactModel contact;
  return simulate_jump(design, protocol, contact, options);
}

}  // namespace snapjump
