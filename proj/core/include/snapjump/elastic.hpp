#pragma once

#include <cmath>
#include <vector>

#include <Eigen/SparseCore>

#include "snapjump/types.hpp"

namespace snapjump {

// Axial spring between nodes i and j with natural length rest_length and
// stretching stiffness EA = E*w*b.
struct StretchElement {
  int i = 0;
  int j = 0;
  double rest_length = 0.0;  // m, > 0
  double ea = 0.0;           // N, > 0
};

// Discrete bending element over nodes (a, b, c), edges e1 = x_b - x_a and
// e2 = x_c - x_b. The natural shape is stored as the rest turning angle
// phi_hat, so the natural curvature is kappa_hat = 2 tan(phi_hat/2) / dl.
// For chain interiors (a, b, c) are consecutive; actuated junctions may span
// two chains.
struct HingeElement {
  int a = 0;
  int b = 0;
  int c = 0;
  double voronoi_length = 0.0;  // m, > 0
  double rest_angle = 0.0;      // rad, |phi_hat| < pi
  double ei = 0.0;              // N m^2, > 0

  double rest_curvature() const {
    return 2.0 * std::tan(0.5 * rest_angle) / voronoi_length;
  }
};

// Planar assembly of stretch and hinge elements with lumped nodal masses.
// Immutable during force/Hessian evaluation; evaluations are pure functions
// of (structure, q).
struct DiscreteStructure {
  int num_nodes = 0;
  std::vector<StretchElement> stretches;
  std::vector<HingeElement> hinges;
  Eigen::VectorXd node_mass;  // kg, one entry per node

  int num_dofs() const { return 2 * num_nodes; }

  // Throws AssemblyError on invalid indices or non-positive parameters.
  void validate() const;
};

// Lumped mass from adjacent half edges: each stretch element contributes
// half of mass_per_length * rest_length to either endpoint.
Eigen::VectorXd lumped_masses(int num_nodes,
                              const std::vector<StretchElement>& stretches,
                              double mass_per_length);

// xi = |x_j - x_i| / rest_length - 1. Throws SingularGeometryError on a
// zero-length edge.
double stretch_strain(const DofVector& q, const StretchElement& e);

// E_s = 1/2 * EA * xi^2 * rest_length.
double stretch_energy(const DofVector& q, const StretchElement& e);

// Signed turning angle between the two hinge edges, in (-pi, pi); positive
// when the second edge is rotated counter-clockwise from the first.
// Throws SingularGeometryError on degenerate edges, and a fold-over error
// when the edges are anti-parallel (|phi| -> pi).
double turning_angle(const DofVector& q, const HingeElement& h);

// kappa = 2 tan(phi/2) / voronoi_length; requires |phi| < pi.
double curvature(double phi, double voronoi_length);

// E_b = 1/2 * EI * (kappa - kappa_hat)^2 * voronoi_length.
double bend_energy(const DofVector& q, const HingeElement& h);

// Sum of all stretching and bending energies.
double total_energy(const DiscreteStructure& s, const DofVector& q);

// F = -dE/dq, assembled analytically element by element.
DofVector elastic_force(const DiscreteStructure& s, const DofVector& q);

// d2E/dq2, exact and symmetric by construction. Note the elastic force
// Jacobian is -H.
Eigen::SparseMatrix<double> elastic_hessian(const DiscreteStructure& s,
                                            const DofVector& q);

// Accumulating variants used by the time stepper to avoid re-allocation.
void accumulate_elastic_force(const DiscreteStructure& s, const DofVector& q,
                              DofVector& force);
void accumulate_elastic_hessian(const DiscreteStructure& s, const DofVector& q,
                                std::vector<Eigen::Triplet<double>>& triplets);

}  // namespace snapjump
