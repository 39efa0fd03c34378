#pragma once

#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "snapjump/contact.hpp"
#include "snapjump/elastic.hpp"
#include "snapjump/types.hpp"

namespace snapjump {

struct SystemState {
  DofVector q;
  DofVector qdot;  // m/s
  double t = 0.0;  // s
};

struct StepperConfig {
  double dt = 1e-3;           // s
  double newton_tol = 1e-3;   // N, residual 2-norm over free DOFs
  int max_newton_iters = 50;
  int max_step_halvings = 6;
  double gravity = -10.0;     // m/s^2, signed, applied to y components
};

// Time-varying Dirichlet conditions: a set of DOF indices each driven by a
// function of time. Prescribed positions are set exactly; prescribed
// velocities follow by backward difference.
class BoundarySpec {
 public:
  void prescribe(int dof, std::function<double(double)> value);
  void prescribe_node(int node, std::function<Vec2(double)> value);
  // Convenience for constants.
  void fix(int dof, double value);
  void fix_node(int node, const Vec2& value);

  bool empty() const { return entries_.empty(); }
  bool is_prescribed(int dof) const { return entries_.count(dof) > 0; }
  std::vector<int> prescribed_dofs() const;
  void apply(DofVector& q, double t) const;

 private:
  std::map<int, std::function<double(double)>> entries_;
};

// Implicit Euler residual at the trial configuration q_new:
//   r = (M/dt^2) (q_new - q_k - dt qdot_k) - F_ela(q_new) - F_gra
//       - F_con(q_new, (q_new - q_k)/dt),
// restricted to free DOFs when a boundary is given. contact may be null.
DofVector residual(const DofVector& q_new, const SystemState& state,
                   const DiscreteStructure& s, const ContactModel* contact,
                   const StepperConfig& cfg,
                   const BoundarySpec* boundary = nullptr);

// Hook invoked with the target time before every attempted (sub)step; used to
// drive time-varying natural angles on the structure.
using PreStepHook = std::function<void(double)>;

// Advances one full time step with Newton-Raphson. Diverging steps are
// retried at halved dt (recovering the full interval); penetration triggers
// the same path. Throws ConvergenceError when the halving budget runs out.
SystemState step(const SystemState& state, const DiscreteStructure& s,
                 const ContactModel* contact, const BoundarySpec& boundary,
                 const StepperConfig& cfg, const PreStepHook& prepare = {});

// Reusable integrator for stepping the same structure many times: keeps the
// DOF reduction and the symbolic sparse factorization alive across steps
// (the sparsity pattern is fixed by the element topology). The referenced
// structure/contact/boundary must outlive the session; element rest
// quantities may be mutated between or during steps (e.g. actuated hinges),
// node masses and the boundary layout must not.
class Stepper {
 public:
  Stepper(const DiscreteStructure& s, const ContactModel* contact,
          const BoundarySpec& boundary, const StepperConfig& cfg);
  ~Stepper();
  Stepper(Stepper&&) noexcept;
  Stepper& operator=(Stepper&&) noexcept;

  SystemState step(const SystemState& state, const PreStepHook& prepare = {});

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Returns false to request early termination.
using Observer = std::function<bool(const SystemState&)>;

struct SimulateOptions {
  PreStepHook prepare;
  Observer observe;
  // Record every k-th accepted state (0 = record nothing; initial state is
  // always first when recording).
  int record_stride = 1;
};

std::vector<SystemState> simulate(const SystemState& initial,
                                  const DiscreteStructure& s,
                                  const ContactModel* contact,
                                  const BoundarySpec& boundary,
                                  const StepperConfig& cfg, double duration,
                                  const SimulateOptions& opts = {});

struct StaticOptions {
  double tol = 1e-5;       // N, force residual 2-norm over free DOFs
  int max_iters = 100;
  int max_backtracks = 25;
  double gravity = 0.0;    // 0 disables gravity
};

// Newton solve of F_ela (+ gravity) = 0 on the free DOFs. fixed_dofs holds
// (dof index, value) pairs. Throws ConvergenceError on failure.
DofVector static_solve(const DofVector& q_guess, const DiscreteStructure& s,
                       const std::vector<std::pair<int, double>>& fixed_dofs,
                       const StaticOptions& opts = {});

}  // namespace snapjump
