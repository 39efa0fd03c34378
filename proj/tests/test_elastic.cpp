#include <doctest.h>

#include <cmath>
#include <random>

#include "snapjump/elastic.hpp"
#include "test_util.hpp"

using namespace snapjump;
using namespace snapjump::testutil;

TEST_CASE("stretch strain and energy") {
  StretchElement e{0, 1, 2.0, 100.0};
  DofVector q(4);
  q << 0.0, 0.0, 3.0, 0.0;  // length 3, rest 2
  CHECK(stretch_strain(q, e) == doctest::Approx(0.5).epsilon(1e-14));
  // E = 1/2 * 100 * 0.25 * 2 = 25
  CHECK(stretch_energy(q, e) == doctest::Approx(25.0).epsilon(1e-14));

  q << 1.0, 1.0, 1.0, 1.0;  // coincident nodes
  CHECK_THROWS_AS(stretch_strain(q, e), SingularGeometryError);
}

TEST_CASE("turning angle sign and range") {
  HingeElement h{0, 1, 2, 1.0, 0.0, 1.0};
  DofVector q(6);
  q << 0, 0, 1, 0, 2, 0;  // collinear
  CHECK(turning_angle(q, h) == doctest::Approx(0.0));

  q << 0, 0, 1, 0, 1, 1;  // left turn (counter-clockwise)
  CHECK(turning_angle(q, h) == doctest::Approx(M_PI / 2).epsilon(1e-14));

  q << 0, 0, 1, 0, 1, -1;  // right turn
  CHECK(turning_angle(q, h) == doctest::Approx(-M_PI / 2).epsilon(1e-14));

  q << 0, 0, 1, 0, 0, 0;  // fold-over
  CHECK_THROWS_AS(turning_angle(q, h), SingularGeometryError);
}

TEST_CASE("curvature and bending energy") {
  CHECK(curvature(0.0, 1.0) == 0.0);
  // kappa = 2 tan(phi/2) / dl
  CHECK(curvature(M_PI / 2, 0.5) ==
        doctest::Approx(2.0 * std::tan(M_PI / 4) / 0.5).epsilon(1e-14));

  HingeElement h{0, 1, 2, 0.5, 0.2, 3.0};
  DofVector q(6);
  q << 0, 0, 1, 0, 2, 0;  // straight, so kappa = 0 and only kappa_hat remains
  const double kap_hat = h.rest_curvature();
  CHECK(bend_energy(q, h) ==
        doctest::Approx(0.5 * 3.0 * kap_hat * kap_hat * 0.5).epsilon(1e-12));
}

TEST_CASE("elastic force matches finite-difference energy gradient") {
  std::mt19937 rng(11);
  for (int rep = 0; rep < 25; ++rep) {
    const int n = 4 + static_cast<int>(rng() % 8);
    const DiscreteStructure s = random_chain(n, rng);
    const DofVector q = random_chain_config(n, rng);
    const DofVector f = elastic_force(s, q);
    const DofVector g = fd_energy_gradient(s, q);
    const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
    CHECK((f + g).cwiseAbs().maxCoeff() / scale < 1e-6);
  }
}

TEST_CASE("elastic hessian matches finite-difference force jacobian") {
  std::mt19937 rng(13);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 4 + static_cast<int>(rng() % 6);
    const DiscreteStructure s = random_chain(n, rng);
    const DofVector q = random_chain_config(n, rng);
    const Eigen::MatrixXd h = Eigen::MatrixXd(elastic_hessian(s, q));
    const Eigen::MatrixXd fd = -fd_force_jacobian(s, q);
    const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
    CHECK((h - fd).cwiseAbs().maxCoeff() / scale < 1e-5);
    CHECK((h - h.transpose()).cwiseAbs().maxCoeff() / scale < 1e-12);
  }
}

TEST_CASE("energy is invariant under rigid motions") {
  std::mt19937 rng(17);
  const int n = 9;
  const DiscreteStructure s = random_chain(n, rng);
  const DofVector q = random_chain_config(n, rng);
  const double e0 = total_energy(s, q);

  const double c = std::cos(0.7), sn = std::sin(0.7);
  DofVector qr(q.size());
  for (int i = 0; i < n; ++i) {
    const double x = q[2 * i], y = q[2 * i + 1];
    qr[2 * i] = c * x - sn * y + 3.2;
    qr[2 * i + 1] = sn * x + c * y - 1.7;
  }
  CHECK(total_energy(s, qr) == doctest::Approx(e0).epsilon(1e-12));
}

TEST_CASE("lumped masses split edges between endpoints") {
  std::vector<StretchElement> st = {{0, 1, 2.0, 1.0}, {1, 2, 4.0, 1.0}};
  const Eigen::VectorXd m = lumped_masses(3, st, 0.5);
  CHECK(m[0] == doctest::Approx(0.5));       // half of 2.0 * 0.5
  CHECK(m[1] == doctest::Approx(0.5 + 1.0));
  CHECK(m[2] == doctest::Approx(1.0));
  CHECK(m.sum() == doctest::Approx(0.5 * (2.0 + 4.0)));
}

TEST_CASE("structure validation rejects bad inputs") {
  DiscreteStructure s;
  s.num_nodes = 3;
  s.node_mass = Eigen::VectorXd::Constant(3, 1.0);
  s.stretches.push_back({0, 3, 1.0, 1.0});  // index out of range
  CHECK_THROWS_AS(s.validate(), AssemblyError);

  s.stretches = {{0, 1, -1.0, 1.0}};  // non-positive rest length
  CHECK_THROWS_AS(s.validate(), AssemblyError);

  s.stretches = {{0, 1, 1.0, 1.0}, {1, 2, 1.0, 1.0}};
  s.hinges = {{0, 1, 1, 1.0, 0.0, 1.0}};  // repeated node
  CHECK_THROWS_AS(s.validate(), AssemblyError);

  s.hinges = {{0, 1, 2, 1.0, 0.0, 1.0}};
  CHECK_NOTHROW(s.validate());
}
