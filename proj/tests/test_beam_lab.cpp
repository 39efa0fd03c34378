#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "snapjump/beam_lab.hpp"

using namespace snapjump;

TEST_CASE("beam structure geometry, stiffness, and mass") {
  BeamSpec spec;  // L = 20 mm steel strip defaults
  const DiscreteStructure s = make_beam_structure(spec);

  CHECK(s.num_nodes == 100);
  CHECK(s.stretches.size() == 99);
  CHECK(s.hinges.size() == 98);

  CHECK(spec.axial_stiffness() == doctest::Approx(1e5).epsilon(1e-12));
  CHECK(spec.bending_stiffness() ==
        doctest::Approx(2.0833333333333333e-5).epsilon(1e-12));

  for (const auto& e : s.stretches) {
    CHECK(e.ea == doctest::Approx(spec.axial_stiffness()));
    CHECK(e.rest_length == doctest::Approx(spec.edge_length()));
  }
  for (const auto& h : s.hinges) {
    CHECK(h.ei == doctest::Approx(spec.bending_stiffness()));
    CHECK(h.rest_angle == 0.0);
    CHECK(h.voronoi_length == doctest::Approx(spec.edge_length()));
  }

  // Lumped masses add up to rho * w * b * L exactly; ends carry half.
  CHECK(s.node_mass.sum() ==
        doctest::Approx(spec.mass_per_length() * spec.length).epsilon(1e-12));
  CHECK(s.node_mass[0] == doctest::Approx(0.5 * s.node_mass[1]).epsilon(1e-12));
  CHECK(s.node_mass[s.num_nodes - 1] ==
        doctest::Approx(0.5 * s.node_mass[1]).epsilon(1e-12));
}

TEST_CASE("clamp DOFs pin both end edges at the requested angles") {
  BeamSpec spec;
  const auto fixed = clamp_dofs(spec, 0.3, 0.1);
  REQUIRE(fixed.size() == 8);  // 4 nodes x 2 DOFs

  DofVector q = DofVector::Zero(2 * spec.num_nodes);
  for (const auto& [dof, val] : fixed) q[dof] = val;

  const double le = spec.edge_length();
  const int n = spec.num_nodes;

  // Left clamp at the origin, first edge leaving along -alpha_left.
  CHECK(q[0] == 0.0);
  CHECK(q[1] == 0.0);
  CHECK(q[2] == doctest::Approx(le * std::cos(0.3)).epsilon(1e-14));
  CHECK(q[3] == doctest::Approx(-le * std::sin(0.3)).epsilon(1e-14));

  // Right clamp at span, last edge arriving along +alpha_right.
  CHECK(q[2 * (n - 1)] == doctest::Approx(spec.span()).epsilon(1e-14));
  CHECK(q[2 * (n - 1) + 1] == 0.0);
  CHECK(q[2 * (n - 2)] ==
        doctest::Approx(spec.span() - le * std::cos(0.1)).epsilon(1e-14));
  CHECK(q[2 * (n - 2) + 1] ==
        doctest::Approx(-le * std::sin(0.1)).epsilon(1e-14));
}

TEST_CASE("buckled branches arch to opposite sides, mirror-symmetric") {
  BeamSpec spec;
  const DofVector up = make_buckled_beam(spec, BucklingBranch::kUp);
  const DofVector down = make_buckled_beam(spec, BucklingBranch::kDown);

  const double y_up = midpoint_height_ratio(spec, up);
  const double y_down = midpoint_height_ratio(spec, down);
  CHECK(y_up > 0.05);
  CHECK(y_down < -0.05);
  CHECK(y_up == doctest::Approx(-y_down).epsilon(1e-6));

  // Left-right symmetry of the up branch about the span midline.
  const int n = spec.num_nodes;
  const double mid = 0.5 * spec.span();
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    CHECK(up[2 * i] - mid ==
          doctest::Approx(-(up[2 * j] - mid)).epsilon(1e-6));
    CHECK(up[2 * i + 1] == doctest::Approx(up[2 * j + 1]).epsilon(1e-6));
  }

  // Arch rise for eps = 0.2 sits near a quarter of the rest length.
  CHECK(y_up > 0.2);
  CHECK(y_up < 0.35);
}

TEST_CASE("static sweep: fold location and released energy") {
  BeamSpec spec;  // eps = 0.2
  const StaticSweepResult sweep = static_sweep(spec);

  // Values frozen from this implementation at num_nodes = 100; the fold
  // angle lands near 0.91 rad and the branch jump releases ~16.6 EI/L.
  CHECK(sweep.snap_alpha == doctest::Approx(0.914).epsilon(2e-3));
  CHECK(sweep.released_energy ==
        doctest::Approx(16.645215641734268).epsilon(1e-9));

  CHECK(sweep.alpha.size() == sweep.ybar_mid.size());
  CHECK(sweep.alpha.size() == sweep.ebar.size());
  CHECK(sweep.alpha.front() == 0.0);
  CHECK(sweep.alpha.back() == doctest::Approx(sweep.snap_alpha));

  // ybar starts at the up-branch rise and decreases monotonically through
  // the branch jump; stored energy grows along the up branch and the final
  // drop is exactly the released energy (same samples).
  CHECK(sweep.ybar_mid.front() > 0.15);
  for (size_t k = 1; k < sweep.ybar_mid.size(); ++k)
    CHECK(sweep.ybar_mid[k] <= sweep.ybar_mid[k - 1] + 1e-12);
  const size_t n = sweep.ebar.size();
  for (size_t k = 1; k + 1 < n; ++k)
    CHECK(sweep.ebar[k] >= sweep.ebar[k - 1] - 1e-12);
  CHECK(sweep.ebar[n - 2] - sweep.ebar[n - 1] ==
        doctest::Approx(sweep.released_energy).epsilon(1e-12));

  // Post-snap state is on the down branch.
  CHECK(midpoint_height_ratio(spec, sweep.post_snap_q) < 0.0);
  CHECK(midpoint_height_ratio(spec, sweep.pre_snap_q) > 0.0);
}

TEST_CASE("critical heights at eps = 0.2") {
  BeamSpec spec;
  const auto [h1, h2] = critical_heights(spec);
  // Frozen from this implementation (fold at alpha* = 0.914).
  CHECK(h1 == doctest::Approx(1.612523491871886e-3).epsilon(1e-9));
  CHECK(h2 == doctest::Approx(5.32572004722385e-3).epsilon(1e-9));
  CHECK(h2 > h1);
  CHECK(h1 > 0.0);
}

TEST_CASE("mounting rule interpolation and CSV round-trip") {
  MountingRule rule;
  rule.eps = {0.1, 0.2, 0.3};
  rule.h1 = {1.0e-3, 1.6e-3, 1.9e-3};
  rule.h2 = {3.0e-3, 5.3e-3, 7.0e-3};

  CHECK(rule.height_for(0.2) == doctest::Approx(1.6e-3));
  CHECK(rule.height_for(0.15) == doctest::Approx(1.3e-3).epsilon(1e-12));
  CHECK(rule.upper_height_for(0.25) ==
        doctest::Approx(6.15e-3).epsilon(1e-12));
  // Clamped beyond the tabulated range.
  CHECK(rule.height_for(0.05) == doctest::Approx(1.0e-3));
  CHECK(rule.height_for(0.99) == doctest::Approx(1.9e-3));

  const std::string path =
      (std::filesystem::temp_directory_path() / "snapjump_rule_test.csv")
          .string();
  rule.save_csv(path);
  const MountingRule back = MountingRule::load_csv(path);
  std::remove(path.c_str());

  REQUIRE(back.eps.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(back.eps[i] == rule.eps[i]);
    CHECK(back.h1[i] == rule.h1[i]);
    CHECK(back.h2[i] == rule.h2[i]);
  }
}

TEST_CASE("dynamic snap with mismatched clamps flips the midpoint") {
  BeamSpec spec;
  spec.eps = 0.1;
  spec.num_nodes = 60;  // coarse: smoke-level check only

  DynamicSnapOptions opts;
  opts.mismatch = 0.1;
  opts.dt = 1e-4;
  opts.record_stride = 0;

  const DynamicSnapResult r = dynamic_snap(spec, opts);
  CHECK(r.snapped);
  CHECK(r.snap_time > 0.0);
  // Snap can't precede the fold angle being reached at alpha_dot = 20.
  CHECK(r.snap_time > 0.5 / opts.rate);
  CHECK(r.theta_max > 0.1);
  CHECK(r.theta_max < 1.5);
}

TEST_CASE("symmetric quasi-static actuation does not snap early") {
  BeamSpec spec;
  spec.eps = 0.1;
  spec.num_nodes = 60;

  DynamicSnapOptions opts;
  opts.mismatch = 0.0;
  opts.dt = 1e-4;
  opts.record_stride = 0;

  // With dalpha = 0 the beam still folds (at the static fold angle), but the
  // rotation it accumulates afterwards stays tiny compared with the
  // mismatched case.
  const DynamicSnapResult sym = dynamic_snap(spec, opts);
  opts.mismatch = 0.1;
  const DynamicSnapResult mis = dynamic_snap(spec, opts);
  CHECK(sym.theta_max < mis.theta_max);
}
