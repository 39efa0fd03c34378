#include "snapjump/contact.hpp"

#include <cmath>
#include <string>

namespace snapjump {

namespace {

// Odd smoothed direction factor g(u) with u the tangential speed component:
// g = sign(u) for |u| >= eps_v, C^1 ramp 2u/eps_v - u|u|/eps_v^2 below.
double friction_ramp(double u, double eps_v) {
  const double a = std::abs(u);
  if (a >= eps_v) return u > 0.0 ? 1.0 : -1.0;
  return u * (2.0 / eps_v - a / (eps_v * eps_v));
}

double friction_ramp_slope(double u, double eps_v) {
  const double a = std::abs(u);
  if (a >= eps_v) return 0.0;
  return 2.0 / eps_v - 2.0 * a / (eps_v * eps_v);
}

}  // namespace

double normal_force_magnitude(double d, const ContactModel& m) {
  if (d <= 0.0)
    throw PenetrationError("contact distance " + std::to_string(d) +
                           " is not positive");
  const double dt = m.barrier_distance;
  if (d >= dt) return 0.0;
  const double gap = d - dt;
  return m.stiffness * (2.0 * gap * std::log(d / dt) + gap * gap / d);
}

double normal_force_slope(double d, const ContactModel& m) {
  if (d <= 0.0)
    throw PenetrationError("contact distance " + std::to_string(d) +
                           " is not positive");
  const double dt = m.barrier_distance;
  if (d >= dt) return 0.0;
  const double gap = d - dt;
  return m.stiffness *
         (2.0 * std::log(d / dt) + 2.0 * gap / d + gap * (d + dt) / (d * d));
}

Vec2 normal_contact_force(const Vec2& x, const ContactModel& m) {
  const double d = x.dot(ContactModel::normal());
  return normal_force_magnitude(d, m) * ContactModel::normal();
}

Vec2 tangential_velocity(const Vec2& v, const ContactModel& m) {
  (void)m;
  const Vec2 n = ContactModel::normal();
  return v - v.dot(n) * n;
}

Vec2 friction_force(const Vec2& v, const Vec2& normal_force,
                    const ContactModel& m) {
  const Vec2 vt = tangential_velocity(v, m);
  // Ground tangent is the x axis; vt = (vx, 0).
  const double g = friction_ramp(vt.x(), m.velocity_smoothing);
  return {-m.friction * normal_force.norm() * g, 0.0};
}

ContactSystemForce contact_force_and_jacobian(const DofVector& q,
                                              const DofVector& v,
                                              const ContactModel& m,
                                              double dv_dq) {
  const int n = static_cast<int>(q.size()) / 2;
  ContactSystemForce out;
  out.force = DofVector::Zero(q.size());
  for (int i = 0; i < n; ++i) {
    const double d = q[2 * i + 1];
    if (d <= 0.0)
      throw PenetrationError("node " + std::to_string(i) +
                             " penetrates the substrate (d = " +
                             std::to_string(d) + ")");
    if (d >= m.barrier_distance) continue;

    const double p = normal_force_magnitude(d, m);
    const double dp = normal_force_slope(d, m);
    const double vx = v[2 * i];
    const double g = friction_ramp(vx, m.velocity_smoothing);
    const double dg = friction_ramp_slope(vx, m.velocity_smoothing);

    const int ix = 2 * i, iy = 2 * i + 1;
    out.force[iy] += p;
    out.force[ix] += -m.friction * p * g;

    out.jacobian.emplace_back(iy, iy, dp);
    out.jacobian.emplace_back(ix, iy, -m.friction * dp * g);
    out.jacobian.emplace_back(ix, ix, -m.friction * p * dg * dv_dq);
  }
  return out;
}

}  // namespace snapjump
