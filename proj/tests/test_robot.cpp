#include <doctest.h>

#include <cmath>

#include "snapjump/robot.hpp"

using namespace snapjump;

TEST_CASE("assembly: node budget, mass, and resting pose") {
  RobotDesign design;
  ContactModel contact;
  contact.friction = design.friction;
  const RobotAssembly a = assemble_robot(design, contact);

  CHECK(a.structure.num_nodes == 190);  // 120 beam + 72 frame - 2 shared
  CHECK(a.beam_nodes == 120);
  CHECK(a.left_junction == 0);
  CHECK(a.right_junction == a.beam_nodes - 1);

  CHECK(a.structure.node_mass.sum() ==
        doctest::Approx(design.total_mass).epsilon(1e-12));

  // Junction hinge indices address hinges pinned at the junction nodes.
  CHECK(a.structure.hinges[a.left_hinge].b == a.left_junction);
  CHECK(a.structure.hinges[a.right_hinge].b == a.right_junction);

  // Resting bar floats at the static contact gap, inside the barrier range.
  CHECK(a.ground_gap > 0.0);
  CHECK(a.ground_gap < contact.barrier_distance);
  double min_y = 1e9;
  for (int i = 0; i < a.structure.num_nodes; ++i)
    min_y = std::min(min_y, a.q0[2 * i + 1]);
  CHECK(min_y == doctest::Approx(a.ground_gap).epsilon(1e-9));

  // The beam midpoint arches above the mounting height.
  double max_y = -1e9;
  for (int i = 0; i < a.beam_nodes; ++i)
    max_y = std::max(max_y, a.q0[2 * i + 1]);
  CHECK(max_y > design.mounting_height);

  // Junctions sit at the mounting height, measured from the ground plane.
  CHECK(a.q0[2 * a.left_junction + 1] ==
        doctest::Approx(design.mounting_height).epsilon(1e-12));
  CHECK(a.q0[2 * a.right_junction + 1] ==
        doctest::Approx(design.mounting_height).epsilon(1e-12));
  CHECK(design.mounting_height > a.ground_gap);
}

TEST_CASE("assembly rejects an unmountable height") {
  RobotDesign design;
  ContactModel contact;
  design.mounting_height = design.frame_height;  // h must stay below l2
  CHECK_THROWS_AS(assemble_robot(design, contact), AssemblyError);
  design.mounting_height = 0.0;
  CHECK_THROWS_AS(assemble_robot(design, contact), AssemblyError);
}

TEST_CASE("mass_from_mbar inverts the normalization") {
  BeamSpec beam;  // EI = 2.0833e-5, L = 0.02
  // mbar = m g L^2 / EI; the hardware point mbar = 0.768 -> 4 g.
  CHECK(mass_from_mbar(beam, 0.768) == doctest::Approx(4e-3).epsilon(1e-12));
  const double m = mass_from_mbar(beam, 1.3);
  CHECK(m * 10.0 * beam.length * beam.length / beam.bending_stiffness() ==
        doctest::Approx(1.3).epsilon(1e-12));
}

TEST_CASE("symmetric actuation jumps straight up") {
  RobotDesign design;
  design.beam.eps = 0.2;
  design.mounting_height = 1.6e-3;
  design.friction = 0.3;

  ActuationProtocol protocol;
  protocol.mismatch = 0.0;

  ContactModel contact;
  JumpOptions opts;
  opts.dt = 1e-4;  // coarse but adequate for the symmetry check

  const JumpResult r = simulate_jump(design, protocol, contact, opts);
  CHECK(r.jumped);
  CHECK(std::abs(r.xbar) < 1e-6);
  CHECK(r.ybar > 1.0);  // clears several body lengths even at coarse dt
  CHECK(r.apex_time > r.liftoff_time);
  CHECK(r.exact_flight);
}

TEST_CASE("asymmetric actuation drifts toward +x") {
  RobotDesign design;
  design.beam.eps = 0.2;
  design.mounting_height = 1.6e-3;

  ActuationProtocol protocol;
  protocol.mismatch = 0.1;

  ContactModel contact;
  JumpOptions opts;
  opts.dt = 1e-4;

  const JumpResult r = simulate_jump(design, protocol, contact, opts);
  CHECK(r.jumped);
  CHECK(r.xbar > 0.1);
}

TEST_CASE("mounting too high for the post-snap shape yields no jump") {
  RobotDesign design;
  design.beam.eps = 0.2;
  design.mounting_height = 6.4e-3;  // beyond h2 ~ 5.33 mm: no strike
  ActuationProtocol protocol;
  ContactModel contact;
  JumpOptions opts;
  opts.dt = 1e-4;
  opts.post_snap_budget = 0.05;

  const JumpResult r = simulate_jump(design, protocol, contact, opts);
  CHECK_FALSE(r.jumped);
  // Apex falls back to the resting COM height, well under one body length.
  CHECK(r.ybar < 0.5);
}

TEST_CASE("trajectory recording covers actuation through apex") {
  RobotDesign design;
  design.beam.eps = 0.2;
  design.mounting_height = 1.6e-3;
  ActuationProtocol protocol;
  protocol.mismatch = 0.05;
  ContactModel contact;
  JumpOptions opts;
  opts.dt = 1e-4;
  opts.record_stride = 5;
  opts.exact_flight = false;  // integrate the whole flight numerically

  const JumpResult r = simulate_jump(design, protocol, contact, opts);
  CHECK(r.jumped);
  CHECK_FALSE(r.exact_flight);
  REQUIRE(r.com_trajectory.size() > 10);
  // Time increases strictly and the peak recorded height matches the apex.
  double peak = 0.0;
  for (size_t k = 0; k < r.com_trajectory.size(); ++k) {
    if (k) CHECK(r.com_trajectory[k][0] > r.com_trajectory[k - 1][0]);
    peak = std::max(peak, r.com_trajectory[k][2]);
  }
  CHECK(peak == doctest::Approx(r.apex_y).epsilon(5e-2));
}
