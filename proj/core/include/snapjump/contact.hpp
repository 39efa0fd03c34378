#pragma once

#include <vector>

#include <Eigen/SparseCore>

#include "snapjump/types.hpp"

namespace snapjump {

// Barrier contact and velocity-smoothed Coulomb friction against the rigid
// substrate y = 0 with outward normal n = (0, 1).
struct ContactModel {
  double stiffness = 1e4;          // K_c, N/m
  double barrier_distance = 5e-4;  // d_tilde, m
  double velocity_smoothing = 1e-4;  // eps_v, m/s
  double friction = 0.0;           // mu, >= 0

  static Vec2 normal() { return {0.0, 1.0}; }
};

// Repulsive barrier magnitude, zero for d >= d_tilde, unbounded as d -> 0+.
// Throws PenetrationError for d <= 0.
double normal_force_magnitude(double d, const ContactModel& m);

// d/dd of the magnitude above (continuous through d = d_tilde).
double normal_force_slope(double d, const ContactModel& m);

// Force on a node at x_i, along +n.
Vec2 normal_contact_force(const Vec2& x, const ContactModel& m);

// v - (v . n) n.
Vec2 tangential_velocity(const Vec2& v, const ContactModel& m);

// Smoothed Coulomb friction given the nodal velocity and normal force.
// |F_t| = mu |F_n| for |v_t| >= eps_v and ramps C^1-smoothly to 0 below.
Vec2 friction_force(const Vec2& v, const Vec2& normal_force,
                    const ContactModel& m);

struct ContactSystemForce {
  DofVector force;
  // d(force)/d(q_new) with the velocity dependence chained through the
  // integrator's update v = (q_new - q_k)/dt, i.e. dF/dq + dv_dq * dF/dv.
  std::vector<Eigen::Triplet<double>> jacobian;
};

// Assembles the frictional contact force over all nodes and its Jacobian for
// the Newton solver. Pass dv_dq = 1/dt for the implicit velocity coupling, or
// 0 to treat velocities as constants.
ContactSystemForce contact_force_and_jacobian(const DofVector& q,
                                              const DofVector& v,
                                              const ContactModel& m,
                                              double dv_dq);

}  // namespace snapjump
