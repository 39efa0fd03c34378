#pragma once

#include <array>
#include <vector>

#include "snapjump/beam_lab.hpp"
#include "snapjump/contact.hpp"
#include "snapjump/elastic.hpp"
#include "snapjump/stepper.hpp"
#include "snapjump/types.hpp"

namespace snapjump {

// Jumping robot: a stiff U-shaped frame (two legs of height l2 on a ground
// bar of span l1) carrying the pre-compressed beam between the legs at
// mounting height h.
struct RobotDesign {
  BeamSpec beam;                  // beam.num_nodes defaults to the robot budget
  double frame_height = 0.01;     // l2, m
  double mounting_height = 2e-3;  // h, m; 0 < h < l2
  double total_mass = 4e-3;       // m, kg
  double friction = 0.3;          // mu, forwarded into the contact model
  int frame_nodes = 72;           // chain nodes, junctions included
  double frame_stiffening = 1000.0;

  RobotDesign() { beam.num_nodes = 120; }
};

struct ActuationProtocol {
  double rate = 20.0;       // alpha_dot, rad/s
  double mismatch = 0.0;    // dalpha, rad
  double hold_margin = 5e-3;  // s past snap completion before freezing alpha
  double alpha_cap = 1.5;   // rad, safety cap on the ramp
};

// Dimensionless coordinates of the design space.
struct NormalizedParams {
  double dalpha = 0.1;  // rad
  double eps = 0.2;
  double mbar = 0.768;  // m g L^2 / EI
  double mu = 0.3;
};

struct JumpResult {
  bool jumped = false;
  double liftoff_time = 0.0;  // s, first instant with every node gap >= d~
  double apex_time = 0.0;     // s
  double apex_x = 0.0;        // m, COM displacement since actuation start
  double apex_y = 0.0;        // m, absolute COM height
  double xbar = 0.0;          // apex_x / L
  double ybar = 0.0;          // apex_y / L
  bool exact_flight = false;  // apex extrapolated along the ballistic arc
  std::vector<std::array<double, 3>> com_trajectory;  // rows (t, x, y)
};

struct RobotAssembly {
  DiscreteStructure structure;
  DofVector q0;
  int left_hinge = 0;   // actuated junction hinges, indices into hinges
  int right_hinge = 0;
  int left_junction = 0;   // node ids (also the beam's end nodes)
  int right_junction = 0;
  int beam_nodes = 0;      // beam chain is nodes [0, beam_nodes)
  double ground_gap = 0.0;  // initial bar-to-ground gap, m
};

// Builds the 190-node structure in its resting pose: bar at the static
// contact-equilibrium gap, legs vertical, beam buckled up between the
// junctions at height h. Node masses are scaled on the frame so the total
// equals design.total_mass.
RobotAssembly assemble_robot(const RobotDesign& design,
                             const ContactModel& contact);

struct JumpOptions {
  double dt = 1e-5;             // s
  double settle_time = 0.02;    // s of pre-actuation dynamics
  double flight_confirm = 2e-3;  // s of contact-free flight before
                                 // extrapolating the apex
  bool exact_flight = true;      // closed-form ballistic apex
  double post_snap_budget = 0.1;  // s after the snap to achieve liftoff
  int record_stride = 0;          // COM trajectory sampling (0 = none)
};

// Full jump: settle, ramp the junction natural angles, snap, strike,
// liftoff, apex. Friction comes from design.friction (contact.friction is
// overridden). No liftoff within budget returns jumped = false with the
// resting COM height as the apex.
JumpResult simulate_jump(const RobotDesign& design,
                         const ActuationProtocol& protocol,
                         const ContactModel& contact,
                         const JumpOptions& options = {});

// Normalized forward map (xbar_c, ybar_c) = F(dalpha, eps, mbar, mu) with
// the mounting height fixed by the optimal rule h = f(eps).
JumpResult forward_model(const NormalizedParams& params,
                         const MountingRule& rule,
                         const JumpOptions& options = {});

// Total mass realizing mbar for the given beam constants.
double mass_from_mbar(const BeamSpec& beam, double mbar,
                      double gravity_magnitude = 10.0);

}  // namespace snapjump
