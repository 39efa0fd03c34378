#include "snapjump/elastic.hpp"

#include <cmath>
#include <string>

namespace snapjump {

namespace {

constexpr double kFoldOverMargin = 1e-9;  // rad away from |phi| = pi

Vec2 edge(const DofVector& q, int from, int to) {
  return node_pos(q, to) - node_pos(q, from);
}

// Hessian of theta(e) = atan2(e.y, e.x) with respect to the edge vector.
Eigen::Matrix2d angle_hessian(const Vec2& e) {
  const double x = e.x(), y = e.y();
  const double r2 = x * x + y * y;
  const double r4 = r2 * r2;
  Eigen::Matrix2d h;
  h(0, 0) = 2.0 * x * y / r4;
  h(0, 1) = (y * y - x * x) / r4;
  h(1, 0) = h(0, 1);
  h(1, 1) = -2.0 * x * y / r4;
  return h;
}

void add_block(std::vector<Eigen::Triplet<double>>& out, int node_row,
               int node_col, const Eigen::Matrix2d& block) {
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      out.emplace_back(2 * node_row + r, 2 * node_col + c, block(r, c));
}

struct HingeGeometry {
  Vec2 e1, e2;
  double phi;
  // dphi/dx for nodes a, b, c.
  Vec2 ga, gb, gc;
};

HingeGeometry hinge_geometry(const DofVector& q, const HingeElement& h) {
  HingeGeometry g;
  g.e1 = edge(q, h.a, h.b);
  g.e2 = edge(q, h.b, h.c);
  const double n1 = g.e1.squaredNorm();
  const double n2 = g.e2.squaredNorm();
  if (n1 == 0.0 || n2 == 0.0)
    throw SingularGeometryError("hinge with zero-length edge at node " +
                                std::to_string(h.b));
  g.phi = std::atan2(cross2(g.e1, g.e2), g.e1.dot(g.e2));
  if (std::abs(g.phi) >= M_PI - kFoldOverMargin)
    throw SingularGeometryError("fold-over at hinge node " +
                                std::to_string(h.b) +
                                " (turning angle at +-pi)");
  const Vec2 a = perp(g.e1) / n1;
  const Vec2 b = perp(g.e2) / n2;
  g.ga = a;
  g.gb = -a - b;
  g.gc = b;
  return g;
}

}  // namespace

void DiscreteStructure::validate() const {
  auto check_node = [&](int i) {
    if (i < 0 || i >= num_nodes)
      throw AssemblyError("element node index " + std::to_string(i) +
                          " out of range");
  };
  for (const auto& e : stretches) {
    check_node(e.i);
    check_node(e.j);
    if (e.i == e.j) throw AssemblyError("stretch element on a single node");
    if (!(e.rest_length > 0.0)) throw AssemblyError("non-positive rest length");
    if (!(e.ea > 0.0)) throw AssemblyError("non-positive EA");
  }
  for (const auto& h : hinges) {
    check_node(h.a);
    check_node(h.b);
    check_node(h.c);
    if (h.a == h.b || h.b == h.c)
      throw AssemblyError("degenerate hinge node triple");
    if (!(h.voronoi_length > 0.0))
      throw AssemblyError("non-positive Voronoi length");
    if (!(h.ei > 0.0)) throw AssemblyError("non-positive EI");
    if (!(std::abs(h.rest_angle) < M_PI))
      throw AssemblyError("natural turning angle outside (-pi, pi)");
  }
  if (node_mass.size() != num_nodes)
    throw AssemblyError("node mass vector length mismatch");
  if (num_nodes > 0 && node_mass.minCoeff() <= 0.0)
    throw AssemblyError("non-positive lumped mass");
}

Eigen::VectorXd lumped_masses(int num_nodes,
                              const std::vector<StretchElement>& stretches,
                              double mass_per_length) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(num_nodes);
  for (const auto& e : stretches) {
    const double half = 0.5 * mass_per_length * e.rest_length;
    m[e.i] += half;
    m[e.j] += half;
  }
  return m;
}

double stretch_strain(const DofVector& q, const StretchElement& e) {
  const double len = edge(q, e.i, e.j).norm();
  if (len == 0.0)
    throw SingularGeometryError("zero-length edge between nodes " +
                                std::to_string(e.i) + " and " +
                                std::to_string(e.j));
  return len / e.rest_length - 1.0;
}

double stretch_energy(const DofVector& q, const StretchElement& e) {
  const double xi = stretch_strain(q, e);
  return 0.5 * e.ea * xi * xi * e.rest_length;
}

double turning_angle(const DofVector& q, const HingeElement& h) {
  return hinge_geometry(q, h).phi;
}

double curvature(double phi, double voronoi_length) {
  if (std::abs(phi) >= M_PI - kFoldOverMargin)
    throw SingularGeometryError("curvature unbounded as |phi| -> pi");
  return 2.0 * std::tan(0.5 * phi) / voronoi_length;
}

double bend_energy(const DofVector& q, const HingeElement& h) {
  const double kappa = curvature(turning_angle(q, h), h.voronoi_length);
  const double dk = kappa - h.rest_curvature();
  return 0.5 * h.ei * dk * dk * h.voronoi_length;
}

double total_energy(const DiscreteStructure& s, const DofVector& q) {
  double e = 0.0;
  for (const auto& se : s.stretches) e += stretch_energy(q, se);
  for (const auto& he : s.hinges) e += bend_energy(q, he);
  return e;
}

void accumulate_elastic_force(const DiscreteStructure& s, const DofVector& q,
                              DofVector& force) {
  for (const auto& e : s.stretches) {
    const Vec2 d = edge(q, e.i, e.j);
    const double len = d.norm();
    if (len == 0.0)
      throw SingularGeometryError("zero-length edge between nodes " +
                                  std::to_string(e.i) + " and " +
                                  std::to_string(e.j));
    const double xi = len / e.rest_length - 1.0;
    // dE/dx_j = EA * xi * u
    const Vec2 f = (e.ea * xi / len) * d;
    force.segment<2>(2 * e.i) += f;
    force.segment<2>(2 * e.j) -= f;
  }
  for (const auto& h : s.hinges) {
    const HingeGeometry g = hinge_geometry(q, h);
    const double t = std::tan(0.5 * g.phi);
    const double kappa = 2.0 * t / h.voronoi_length;
    const double dk = kappa - h.rest_curvature();
    // dE/dphi = EI * (kappa - kappa_hat) * (1 + tan^2(phi/2))
    const double de_dphi = h.ei * dk * (1.0 + t * t);
    force.segment<2>(2 * h.a) -= de_dphi * g.ga;
    force.segment<2>(2 * h.b) -= de_dphi * g.gb;
    force.segment<2>(2 * h.c) -= de_dphi * g.gc;
  }
}

DofVector elastic_force(const DiscreteStructure& s, const DofVector& q) {
  DofVector f = DofVector::Zero(q.size());
  accumulate_elastic_force(s, q, f);
  return f;
}

void accumulate_elastic_hessian(const DiscreteStructure& s, const DofVector& q,
                                std::vector<Eigen::Triplet<double>>& triplets) {
  for (const auto& e : s.stretches) {
    const Vec2 d = edge(q, e.i, e.j);
    const double len = d.norm();
    if (len == 0.0)
      throw SingularGeometryError("zero-length edge between nodes " +
                                  std::to_string(e.i) + " and " +
                                  std::to_string(e.j));
    const Vec2 u = d / len;
    const double xi = len / e.rest_length - 1.0;
    const Eigen::Matrix2d uu = u * u.transpose();
    const Eigen::Matrix2d block =
        (e.ea / e.rest_length) * uu +
        (e.ea * xi / len) * (Eigen::Matrix2d::Identity() - uu);
    add_block(triplets, e.i, e.i, block);
    add_block(triplets, e.j, e.j, block);
    add_block(triplets, e.i, e.j, -block);
    add_block(triplets, e.j, e.i, -block);
  }
  for (const auto& h : s.hinges) {
    const HingeGeometry g = hinge_geometry(q, h);
    const double t = std::tan(0.5 * g.phi);
    const double sec2 = 1.0 + t * t;
    const double kappa = 2.0 * t / h.voronoi_length;
    const double dk = kappa - h.rest_curvature();
    const double de_dphi = h.ei * dk * sec2;
    // d2E/dphi2 = EI [ sec^4 / dl + (kappa - kappa_hat) tan(phi/2) sec^2 ]
    const double d2e_dphi2 =
        h.ei * (sec2 * sec2 / h.voronoi_length + dk * t * sec2);

    const int nodes[3] = {h.a, h.b, h.c};
    const Vec2 grads[3] = {g.ga, g.gb, g.gc};
    // Outer-product part: d2E/dphi2 * grad phi grad phi^T.
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        add_block(triplets, nodes[r], nodes[c],
                  d2e_dphi2 * (grads[r] * grads[c].transpose()));

    // Curvature-of-the-angle part: dE/dphi * d2phi/dq2. The angle splits as
    // phi = theta(e2) - theta(e1), so there is no e1-e2 cross term.
    const Eigen::Matrix2d m1 = -angle_hessian(g.e1);
    const Eigen::Matrix2d m2 = angle_hessian(g.e2);
    add_block(triplets, h.a, h.a, de_dphi * m1);
    add_block(triplets, h.a, h.b, -de_dphi * m1);
    add_block(triplets, h.b, h.a, -de_dphi * m1);
    add_block(triplets, h.b, h.b, de_dphi * (m1 + m2));
    add_block(triplets, h.b, h.c, -de_dphi * m2);
    add_block(triplets, h.c, h.b, -de_dphi * m2);
    add_block(triplets, h.c, h.c, de_dphi * m2);
  }
}

Eigen::SparseMatrix<double> elastic_hessian(const DiscreteStructure& s,
                                            const DofVector& q) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(16 * s.stretches.size() + 64 * s.hinges.size());
  accumulate_elastic_hessian(s, q, triplets);
  Eigen::SparseMatrix<double> h(q.size(), q.size());
  h.setFromTriplets(triplets.begin(), triplets.end());
  return h;
}

}  // namespace snapjump
