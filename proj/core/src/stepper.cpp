#include "snapjump/stepper.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <string>

namespace snapjump {

namespace {

struct DofMap {
  std::vector<int> full_to_free;  // -1 for prescribed
  std::vector<int> free_to_full;

  explicit DofMap(int num_dofs, const std::vector<int>& prescribed) {
    full_to_free.assign(num_dofs, 0);
    for (int dof : prescribed) {
      if (dof < 0 || dof >= num_dofs)
        throw AssemblyError("prescribed DOF index " + std::to_string(dof) +
                            " out of range");
      full_to_free[dof] = -1;
    }
    free_to_full.reserve(num_dofs - prescribed.size());
    for (int i = 0; i < num_dofs; ++i) {
      if (full_to_free[i] == 0) {
        full_to_free[i] = static_cast<int>(free_to_full.size());
        free_to_full.push_back(i);
      }
    }
  }

  Eigen::VectorXd restrict_vec(const DofVector& full) const {
    Eigen::VectorXd out(free_to_full.size());
    for (size_t k = 0; k < free_to_full.size(); ++k)
      out[k] = full[free_to_full[k]];
    return out;
  }
};

// Reduced sparse solver with symbolic analysis reuse across calls with an
// identical sparsity pattern.
class ReducedSolver {
 public:
  explicit ReducedSolver(int free_count) : mat_(free_count, free_count) {}

  bool factorize(const std::vector<Eigen::Triplet<double>>& full_triplets,
                 const DofMap& map) {
    reduced_.clear();
    reduced_.reserve(full_triplets.size());
    for (const auto& t : full_triplets) {
      const int r = map.full_to_free[t.row()];
      const int c = map.full_to_free[t.col()];
      if (r >= 0 && c >= 0) reduced_.emplace_back(r, c, t.value());
    }
    mat_.setFromTriplets(reduced_.begin(), reduced_.end());
    if (!analyzed_) {
      lu_.analyzePattern(mat_);
      analyzed_ = true;
    }
    lu_.factorize(mat_);
    if (lu_.info() != Eigen::Success) {
      // Pattern may legitimately change (e.g. first contact); retry once
      // with a fresh symbolic analysis before giving up.
      lu_.analyzePattern(mat_);
      lu_.factorize(mat_);
    }
    return lu_.info() == Eigen::Success;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) { return lu_.solve(rhs); }

 private:
  Eigen::SparseMatrix<double> mat_;
  std::vector<Eigen::Triplet<double>> reduced_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  bool analyzed_ = false;
};

DofVector gravity_force(const DiscreteStructure& s, double g) {
  DofVector f = DofVector::Zero(s.num_dofs());
  if (g != 0.0)
    for (int i = 0; i < s.num_nodes; ++i) f[2 * i + 1] = s.node_mass[i] * g;
  return f;
}

// Largest step fraction in [0, 1] keeping every node strictly above the
// substrate, with a safety pull-back.
double feasible_fraction(const DofVector& q, const Eigen::VectorXd& delta_full,
                         bool has_contact) {
  if (!has_contact) return 1.0;
  double tau = 1.0;
  const int n = static_cast<int>(q.size()) / 2;
  for (int i = 0; i < n; ++i) {
    const double y = q[2 * i + 1];
    const double dy = delta_full[2 * i + 1];
    if (dy < 0.0 && y + dy <= 0.0) tau = std::min(tau, -0.8 * y / dy);
  }
  return tau;
}

struct ResidualParts {
  DofVector full;
  double free_norm = 0.0;
};

ResidualParts eval_residual(const DofVector& q_new, const SystemState& state,
                            const DiscreteStructure& s,
                            const ContactModel* contact, double dt,
                            const DofVector& f_gra, const DofMap& map) {
  ResidualParts r;
  r.full = DofVector::Zero(q_new.size());
  // (M/dt^2)(q_new - q_k - dt qdot_k)
  for (int i = 0; i < s.num_nodes; ++i) {
    const double m_dt2 = s.node_mass[i] / (dt * dt);
    for (int c = 0; c < 2; ++c) {
      const int dof = 2 * i + c;
      r.full[dof] =
          m_dt2 * (q_new[dof] - state.q[dof] - dt * state.qdot[dof]);
    }
  }
  DofVector f_ela = DofVector::Zero(q_new.size());
  accumulate_elastic_force(s, q_new, f_ela);
  r.full -= f_ela;
  r.full -= f_gra;
  if (contact) {
    const DofVector v = (q_new - state.q) / dt;
    ContactSystemForce con = contact_force_and_jacobian(q_new, v, *contact, 0.0);
    r.full -= con.force;
  }
  double norm2 = 0.0;
  for (int dof : map.free_to_full) norm2 += r.full[dof] * r.full[dof];
  r.free_norm = std::sqrt(norm2);
  return r;
}

// One implicit Euler solve over [state.t, state.t + dt]. Returns true and
// fills `next` on Newton convergence.
bool try_substep(const SystemState& state, const DiscreteStructure& s,
                 const ContactModel* contact, const BoundarySpec& boundary,
                 const StepperConfig& cfg, double dt,
                 const PreStepHook& prepare, const DofMap& map,
                 ReducedSolver& solver, const DofVector& f_gra,
                 SystemState& next) {
  const double t_target = state.t + dt;
  if (prepare) prepare(t_target);

  DofVector q = state.q;
  boundary.apply(q, t_target);
  // Explicit predictor on the free DOFs, dropped if it penetrates.
  {
    DofVector q_pred = q;
    for (int dof : map.free_to_full) q_pred[dof] += dt * state.qdot[dof];
    bool feasible = true;
    if (contact) {
      for (int i = 0; i < s.num_nodes; ++i)
        if (q_pred[2 * i + 1] <= 0.0) {
          feasible = false;
          break;
        }
    }
    if (feasible) q = q_pred;
  }

  std::vector<Eigen::Triplet<double>> triplets;
  ResidualParts r;
  try {
    r = eval_residual(q, state, s, contact, dt, f_gra, map);
  } catch (const SingularGeometryError&) {
    return false;
  } catch (const PenetrationError&) {
    return false;
  }

  for (int iter = 0; iter < cfg.max_newton_iters; ++iter) {
    if (r.free_norm <= cfg.newton_tol) {
      next.q = q;
      next.qdot = (q - state.q) / dt;
      next.t = t_target;
      return true;
    }

    triplets.clear();
    // J = M/dt^2 + H - dF_con/dq_new
    for (int i = 0; i < s.num_nodes; ++i) {
      const double m_dt2 = s.node_mass[i] / (dt * dt);
      triplets.emplace_back(2 * i, 2 * i, m_dt2);
      triplets.emplace_back(2 * i + 1, 2 * i + 1, m_dt2);
    }
    try {
      accumulate_elastic_hessian(s, q, triplets);
      if (contact) {
        const DofVector v = (q - state.q) / dt;
        ContactSystemForce con =
            contact_force_and_jacobian(q, v, *contact, 1.0 / dt);
        for (const auto& t : con.jacobian)
          triplets.emplace_back(t.row(), t.col(), -t.value());
      }
    } catch (const SingularGeometryError&) {
      return false;
    }

    if (!solver.factorize(triplets, map)) return false;
    const Eigen::VectorXd delta_free = solver.solve(-map.restrict_vec(r.full));
    if (!delta_free.allFinite()) return false;

    DofVector delta_full = DofVector::Zero(q.size());
    for (size_t k = 0; k < map.free_to_full.size(); ++k)
      delta_full[map.free_to_full[k]] = delta_free[k];

    double tau = feasible_fraction(q, delta_full, contact != nullptr);
    bool accepted = false;
    for (int bt = 0; bt < 15; ++bt) {
      DofVector q_trial = q + tau * delta_full;
      try {
        ResidualParts r_trial =
            eval_residual(q_trial, state, s, contact, dt, f_gra, map);
        if (r_trial.free_norm < r.free_norm ||
            r_trial.free_norm <= cfg.newton_tol) {
          q = std::move(q_trial);
          r = std::move(r_trial);
          accepted = true;
          break;
        }
      } catch (const SingularGeometryError&) {
        // Shrink further.
      } catch (const PenetrationError&) {
      }
      tau *= 0.5;
    }
    if (!accepted) return false;
  }
  if (r.free_norm > cfg.newton_tol) return false;
  next.q = q;
  next.qdot = (q - state.q) / dt;
  next.t = t_target;
  return true;
}

}  // namespace

struct Stepper::Impl {
  const DiscreteStructure& s;
  const ContactModel* contact;
  const BoundarySpec& boundary;
  StepperConfig cfg;
  DofMap map;
  ReducedSolver solver;
  DofVector f_gra;

  Impl(const DiscreteStructure& structure, const ContactModel* con,
       const BoundarySpec& bc, const StepperConfig& config)
      : s(structure),
        contact(con),
        boundary(bc),
        cfg(config),
        map(structure.num_dofs(), bc.prescribed_dofs()),
        solver(static_cast<int>(map.free_to_full.size())),
        f_gra(gravity_force(structure, config.gravity)) {}

  SystemState advance(const SystemState& state, const PreStepHook& prepare) {
    // Tick arithmetic keeps substep boundaries exact while halving.
    const long ticks = 1L << cfg.max_step_halvings;
    const double tick_dt = cfg.dt / static_cast<double>(ticks);
    long pos = 0;
    long size = ticks;
    SystemState current = state;
    while (pos < ticks) {
      SystemState next;
      const double sub_dt = static_cast<double>(size) * tick_dt;
      StepperConfig sub_cfg = cfg;
      sub_cfg.dt = sub_dt;
      if (try_substep(current, s, contact, boundary, sub_cfg, sub_dt, prepare,
                      map, solver, f_gra, next)) {
        current = next;
        pos += size;
        // Grow back once re-aligned to the coarser grid.
        while (size < ticks && pos % (2 * size) == 0) size *= 2;
      } else {
        if (size == 1)
          throw ConvergenceError(
              "Newton failed at t = " + std::to_string(current.t) +
              " after exhausting " + std::to_string(cfg.max_step_halvings) +
              " step halvings");
        size /= 2;
      }
    }
    current.t = state.t + cfg.dt;  // avoid tick-sum drift
    return current;
  }
};

Stepper::Stepper(const DiscreteStructure& s, const ContactModel* contact,
                 const BoundarySpec& boundary, const StepperConfig& cfg)
    : impl_(std::make_unique<Impl>(s, contact, boundary, cfg)) {}
Stepper::~Stepper() = default;
Stepper::Stepper(Stepper&&) noexcept = default;
Stepper& Stepper::operator=(Stepper&&) noexcept = default;

SystemState Stepper::step(const SystemState& state,
                          const PreStepHook& prepare) {
  return impl_->advance(state, prepare);
}

void BoundarySpec::prescribe(int dof, std::function<double(double)> value) {
  entries_[dof] = std::move(value);
}

void BoundarySpec::prescribe_node(int node, std::function<Vec2(double)> value) {
  entries_[2 * node] = [value](double t) { return value(t).x(); };
  entries_[2 * node + 1] = [value](double t) { return value(t).y(); };
}

void BoundarySpec::fix(int dof, double value) {
  entries_[dof] = [value](double) { return value; };
}

void BoundarySpec::fix_node(int node, const Vec2& value) {
  fix(2 * node, value.x());
  fix(2 * node + 1, value.y());
}

std::vector<int> BoundarySpec::prescribed_dofs() const {
  std::vector<int> out;
  out.reserve(entries_.size());
  for (const auto& [dof, fn] : entries_) out.push_back(dof);
  return out;
}

void BoundarySpec::apply(DofVector& q, double t) const {
  for (const auto& [dof, fn] : entries_) q[dof] = fn(t);
}

DofVector residual(const DofVector& q_new, const SystemState& state,
                   const DiscreteStructure& s, const ContactModel* contact,
                   const StepperConfig& cfg, const BoundarySpec* boundary) {
  std::vector<int> prescribed;
  if (boundary) prescribed = boundary->prescribed_dofs();
  const DofMap map(s.num_dofs(), prescribed);
  const DofVector f_gra = gravity_force(s, cfg.gravity);
  ResidualParts r =
      eval_residual(q_new, state, s, contact, cfg.dt, f_gra, map);
  return map.restrict_vec(r.full);
}

SystemState step(const SystemState& state, const DiscreteStructure& s,
                 const ContactModel* contact, const BoundarySpec& boundary,
                 const StepperConfig& cfg, const PreStepHook& prepare) {
  return Stepper(s, contact, boundary, cfg).step(state, prepare);
}

std::vector<SystemState> simulate(const SystemState& initial,
                                  const DiscreteStructure& s,
                                  const ContactModel* contact,
                                  const BoundarySpec& boundary,
                                  const StepperConfig& cfg, double duration,
                                  const SimulateOptions& opts) {
  std::vector<SystemState> trajectory;
  if (opts.record_stride > 0) trajectory.push_back(initial);
  Stepper session(s, contact, boundary, cfg);
  SystemState state = initial;
  const long n_steps = std::lround(duration / cfg.dt);
  for (long k = 0; k < n_steps; ++k) {
    state = session.step(state, opts.prepare);
    state.t = initial.t + (k + 1) * cfg.dt;
    if (opts.record_stride > 0 && (k + 1) % opts.record_stride == 0)
      trajectory.push_back(state);
    if (opts.observe && !opts.observe(state)) break;
  }
  return trajectory;
}

DofVector static_solve(const DofVector& q_guess, const DiscreteStructure& s,
                       const std::vector<std::pair<int, double>>& fixed_dofs,
                       const StaticOptions& opts) {
  std::vector<int> prescribed;
  prescribed.reserve(fixed_dofs.size());
  for (const auto& [dof, value] : fixed_dofs) prescribed.push_back(dof);
  const DofMap map(s.num_dofs(), prescribed);
  ReducedSolver solver(static_cast<int>(map.free_to_full.size()));
  const DofVector f_gra = gravity_force(s, opts.gravity);

  DofVector q = q_guess;
  for (const auto& [dof, value] : fixed_dofs) q[dof] = value;

  auto force_norm = [&](const DofVector& qq, DofVector& f_out) {
    f_out = DofVector::Zero(qq.size());
    accumulate_elastic_force(s, qq, f_out);
    f_out += f_gra;
    double norm2 = 0.0;
    for (int dof : map.free_to_full) norm2 += f_out[dof] * f_out[dof];
    return std::sqrt(norm2);
  };

  DofVector f;
  double fn = force_norm(q, f);
  std::vector<Eigen::Triplet<double>> triplets;
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    if (fn <= opts.tol) return q;
    triplets.clear();
    accumulate_elastic_hessian(s, q, triplets);
    if (!solver.factorize(triplets, map))
      throw ConvergenceError("static solve: singular stiffness matrix");
    // F = 0 Newton update: delta = H^{-1} F.
    const Eigen::VectorXd delta_free = solver.solve(map.restrict_vec(f));
    if (!delta_free.allFinite())
      throw ConvergenceError("static solve: non-finite Newton update");

    double tau = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < opts.max_backtracks; ++bt) {
      DofVector q_trial = q;
      for (size_t k = 0; k < map.free_to_full.size(); ++k)
        q_trial[map.free_to_full[k]] += tau * delta_free[k];
      try {
        DofVector f_trial;
        const double fn_trial = force_norm(q_trial, f_trial);
        if (fn_trial < fn || fn_trial <= opts.tol) {
          q = std::move(q_trial);
          f = std::move(f_trial);
          fn = fn_trial;
          accepted = true;
          break;
        }
      } catch (const SingularGeometryError&) {
      }
      tau *= 0.5;
    }
    if (!accepted)
      throw ConvergenceError(
          "static solve: line search stalled at |F| = " + std::to_string(fn));
  }
  if (fn <= opts.tol) return q;
  throw ConvergenceError("static solve: no convergence after " +
                         std::to_string(opts.max_iters) +
                         " iterations (|F| = " + std::to_string(fn) + ")");
}

}  // namespace snapjump
