#pragma once

#include <Eigen/Core>
#include <stdexcept>

namespace snapjump {

using Vec2 = Eigen::Vector2d;

// Flat DOF vector, layout [x0, y0, x1, y1, ...].
using DofVector = Eigen::VectorXd;

// Zero-length edge or a hinge folded onto itself (|phi| -> pi).
struct SingularGeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A node at or below the substrate (d <= 0). The integrator reacts by
// shrinking the time step; reaching the user is a step-size failure.
struct PenetrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Newton failed to converge within the configured retries.
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AssemblyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 90-degree counter-clockwise rotation.
inline Vec2 perp(const Vec2& v) { return {-v.y(), v.x()}; }

// Scalar 2D cross product a x b.
inline double cross2(const Vec2& a, const Vec2& b) {
  return a.x() * b.y() - a.y() * b.x();
}

inline Vec2 node_pos(const DofVector& q, int node) {
  return q.segment<2>(2 * node);
}

inline void set_node_pos(DofVector& q, int node, const Vec2& p) {
  q.segment<2>(2 * node) = p;
}

}  // namespace snapjump
