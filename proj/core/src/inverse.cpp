#include "snapjump/inverse.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace snapjump {

namespace {

double seg_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

int orientation(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double v = cross2(b - a, c - a);
  return (v > 0.0) - (v < 0.0);
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c,
                        const Vec2& d) {
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

// Squared distance between the images of two neighboring grid cells; used
// by the non-simple-polygon fallback.
double cell_image_diameter(const ReachableRegion& r, int i, int j) {
  double d = 0.0;
  const Vec2 c{r.pred_x(i, j), r.pred_y(i, j)};
  for (int di = -1; di <= 1; ++di)
    for (int dj = -1; dj <= 1; ++dj) {
      const int ii = i + di, jj = j + dj;
      if (ii < 0 || ii >= r.m || jj < 0 || jj >= r.n) continue;
      d = std::max(d, (Vec2{r.pred_x(ii, jj), r.pred_y(ii, jj)} - c).norm());
    }
  return d;
}

struct AdamState {
  Eigen::Vector2d m = Eigen::Vector2d::Zero();
  Eigen::Vector2d v = Eigen::Vector2d::Zero();
  long t = 0;
};

Eigen::Vector2d clamp_box(const Eigen::Vector2d& u, const DesignRanges& g) {
  return {std::clamp(u[0], g.dalpha_lo, g.dalpha_hi),
          std::clamp(u[1], g.eps_lo, g.eps_hi)};
}

}  // namespace

double ReachableRegion::dalpha_at(int i) const {
  return ranges.dalpha_lo +
         (ranges.dalpha_hi - ranges.dalpha_lo) * (i + 0.5) / m;
}

double ReachableRegion::eps_at(int j) const {
  return ranges.eps_lo + (ranges.eps_hi - ranges.eps_lo) * (j + 0.5) / n;
}

ReachableRegion reachable_region(const SurrogateModel& model, double mbar,
                                 double mu, int m, int n,
                                 const DesignRanges& ranges) {
  if (m < 1 || n < 1) throw AssemblyError("region grid must be >= 1 x 1");
  ReachableRegion r;
  r.mbar = mbar;
  r.mu = mu;
  r.ranges = ranges;
  r.m = m;
  r.n = n;

  Eigen::MatrixXd P(4, m * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      P.col(i * n + j) << r.dalpha_at(i), r.eps_at(j), mbar, mu;
  const Eigen::MatrixXd out = model.forward_batch(P);
  r.pred_x.resize(m, n);
  r.pred_y.resize(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      r.pred_x(i, j) = out(0, i * n + j);
      r.pred_y(i, j) = out(1, i * n + j);
    }

  // Perimeter of the parameter rectangle, counter-clockwise.
  std::vector<Eigen::Vector4d> rim;
  const int md = 2 * m, nd = 2 * n;
  for (int i = 0; i < md; ++i)  // bottom: eps_lo, dalpha rising
    rim.push_back({ranges.dalpha_lo + (ranges.dalpha_hi - ranges.dalpha_lo) *
                                          static_cast<double>(i) / md,
                   ranges.eps_lo, mbar, mu});
  for (int j = 0; j < nd; ++j)  // right: dalpha_hi, eps rising
    rim.push_back({ranges.dalpha_hi,
                   ranges.eps_lo + (ranges.eps_hi - ranges.eps_lo) *
                                       static_cast<double>(j) / nd,
                   mbar, mu});
  for (int i = 0; i < md; ++i)  // top: eps_hi, dalpha falling
    rim.push_back({ranges.dalpha_hi - (ranges.dalpha_hi - ranges.dalpha_lo) *
                                          static_cast<double>(i) / md,
                   ranges.eps_hi, mbar, mu});
  for (int j = 0; j < nd; ++j)  // left: dalpha_lo, eps falling
    rim.push_back({ranges.dalpha_lo,
                   ranges.eps_hi - (ranges.eps_hi - ranges.eps_lo) *
                                       static_cast<double>(j) / nd,
                   mbar, mu});
  Eigen::MatrixXd RP(4, rim.size());
  for (size_t k = 0; k < rim.size(); ++k) RP.col(k) = rim[k];
  const Eigen::MatrixXd rim_out = model.forward_batch(RP);
  r.polygon.reserve(rim.size());
  for (int k = 0; k < rim_out.cols(); ++k)
    r.polygon.push_back({rim_out(0, k), rim_out(1, k)});
  r.polygon_simple = polygon_is_simple(r.polygon);
  return r;
}

bool polygon_is_simple(const std::vector<Vec2>& poly) {
  const int n = static_cast<int>(poly.size());
  if (n < 3) return false;
  for (int i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    for (int j = i + 1; j < n; ++j) {
      // Skip edges sharing a vertex with edge i.
      if (j == i || (j + 1) % n == i || j == (i + 1) % n) continue;
      const Vec2& c = poly[j];
      const Vec2& d = poly[(j + 1) % n];
      if (segments_intersect(a, b, c, d)) return false;
    }
  }
  return true;
}

bool point_in_polygon(const Vec2& point, const std::vector<Vec2>& poly,
                      double band) {
  const int n = static_cast<int>(poly.size());
  if (n < 3) return false;
  bool inside = false;
  for (int i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[j];
    const Vec2& b = poly[i];
    if (seg_distance(point, a, b) <= band) return true;  // on-edge counts
    const bool straddles = (b.y() > point.y()) != (a.y() > point.y());
    if (straddles) {
      const double x_cross =
          b.x() + (point.y() - b.y()) * (a.x() - b.x()) / (a.y() - b.y());
      if (point.x() < x_cross) inside = !inside;
    }
  }
  return inside;
}

bool is_reachable(const Vec2& target, const ReachableRegion& region) {
  if (region.polygon_simple)
    return point_in_polygon(target, region.polygon);
  // Folded boundary: fall back to grid-image proximity.
  double best = std::numeric_limits<double>::infinity();
  int bi = 0, bj = 0;
  for (int i = 0; i < region.m; ++i)
    for (int j = 0; j < region.n; ++j) {
      const double d =
          (Vec2{region.pred_x(i, j), region.pred_y(i, j)} - target).norm();
      if (d < best) {
        best = d;
        bi = i;
        bj = j;
      }
    }
  return best <= cell_image_diameter(region, bi, bj);
}

InverseSolution solve_inverse(const Vec2& target, double mbar, double mu,
                              const SurrogateModel& model,
                              const ReachableRegion* region_in,
                              const SolveOptions& opt) {
  const auto t_begin = std::chrono::steady_clock::now();
  ReachableRegion local;
  const ReachableRegion* region = region_in;
  if (!region) {
    local = reachable_region(model, mbar, mu);
    region = &local;
  }

  InverseSolution out;
  out.reachable = is_reachable(target, *region);
  if (!out.reachable) {
    out.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      t_begin)
            .count();
    return out;
  }

  // Rank grid midpoints by predicted distance to the target.
  struct Start {
    double dist;
    double dalpha, eps;
  };
  std::vector<Start> starts;
  starts.reserve(region->m * region->n);
  for (int i = 0; i < region->m; ++i)
    for (int j = 0; j < region->n; ++j)
      starts.push_back(
          {(Vec2{region->pred_x(i, j), region->pred_y(i, j)} - target).norm(),
           region->dalpha_at(i), region->eps_at(j)});
  const int n_starts =
      std::min<int>(opt.multi_starts, static_cast<int>(starts.size()));
  std::partial_sort(starts.begin(), starts.begin() + n_starts, starts.end(),
                    [](const Start& a, const Start& b) {
                      return a.dist < b.dist;
                    });

  auto cost_at = [&](const Eigen::Vector2d& u, Eigen::Vector2d& pred) {
    const Eigen::Vector2d y =
        model.forward(Eigen::Vector4d{u[0], u[1], mbar, mu});
    pred = y;
    return (y - Eigen::Vector2d(target)).squaredNorm();
  };

  double best_cost = std::numeric_limits<double>::infinity();
  Eigen::Vector2d best_u = Eigen::Vector2d::Zero();
  Eigen::Vector2d best_pred = Eigen::Vector2d::Zero();
  int total_iters = 0;

  for (int sidx = 0; sidx < n_starts; ++sidx) {
    Eigen::Vector2d u{starts[sidx].dalpha, starts[sidx].eps};
    Eigen::Vector2d pred;
    double cost = cost_at(u, pred);
    AdamState adam;

    for (int iter = 0; iter < opt.max_iterations; ++iter) {
      ++total_iters;
      if (cost < opt.cost_tol) break;
      const Eigen::Matrix<double, 2, 4> g =
          model.input_gradient(Eigen::Vector4d{u[0], u[1], mbar, mu});
      const Eigen::Vector2d residual_vec = pred - Eigen::Vector2d(target);
      const Eigen::Vector2d grad =
          2.0 * g.leftCols<2>().transpose() * residual_vec;

      ++adam.t;
      adam.m = opt.beta1 * adam.m + (1.0 - opt.beta1) * grad;
      adam.v = opt.beta2 * adam.v +
               (1.0 - opt.beta2) * grad.cwiseProduct(grad);
      const Eigen::Vector2d m_hat =
          adam.m / (1.0 - std::pow(opt.beta1, adam.t));
      const Eigen::Vector2d v_hat =
          adam.v / (1.0 - std::pow(opt.beta2, adam.t));
      const Eigen::Vector2d dir =
          m_hat.cwiseQuotient(v_hat.cwiseSqrt().array().matrix() +
                              Eigen::Vector2d::Constant(opt.adam_eps));

      // Backtracking keeps accepted iterates non-increasing in cost.
      auto try_direction = [&](const Eigen::Vector2d& d) {
        double scale = 1.0;
        for (int bt = 0; bt < 12; ++bt) {
          const Eigen::Vector2d u_trial =
              clamp_box(u - scale * opt.learning_rate * d, region->ranges);
          Eigen::Vector2d pred_trial;
          const double cost_trial = cost_at(u_trial, pred_trial);
          if (cost_trial <= cost) {
            const double step = (u_trial - u).norm();
            u = u_trial;
            pred = pred_trial;
            cost = cost_trial;
            return step >= opt.step_tol;
          }
          scale *= 0.5;
        }
        return false;
      };

      bool accepted = try_direction(dir);
      if (!accepted) {
        // Stale momentum can point uphill near the optimum; restart the
        // moments and probe the raw (normalized) gradient once.
        adam = AdamState{};
        const double gn = grad.norm();
        if (gn > 0.0) accepted = try_direction(grad / gn);
      }
      if (!accepted) break;  // converged or stuck at a box face
    }

    const bool better =
        cost < best_cost - 1e-15 ||
        (std::abs(cost - best_cost) <= 1e-15 && u[0] < best_u[0]);
    if (better) {
      best_cost = cost;
      best_u = u;
      best_pred = pred;
    }
  }

  out.dalpha = best_u[0];
  out.eps = best_u[1];
  out.predicted = Vec2{best_pred[0], best_pred[1]};
  out.cost = best_cost;
  out.iterations = total_iters;
  out.near_boundary_warning = best_cost > opt.residual_warn;
  out.wall_time = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t_begin)
                      .count();
  return out;
}

ValidationStats validate_inverse(int trials, const SurrogateModel& model,
                                 const MountingRule& rule,
                                 const JumpOptions& sim_options,
                                 unsigned seed,
                                 const SolveOptions& solve_options) {
  std::mt19937 rng(seed);
  DesignRanges ranges;
  std::uniform_real_distribution<double> mbar_dist(ranges.mbar_lo,
                                                   ranges.mbar_hi);
  std::uniform_real_distribution<double> mu_dist(ranges.mu_lo, ranges.mu_hi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double L = RobotDesign{}.beam.length;

  ValidationStats stats;
  stats.cases.reserve(trials);
  for (int k = 0; k < trials; ++k) {
    ValidationCase vc;
    vc.mbar = mbar_dist(rng);
    vc.mu = mu_dist(rng);
    const ReachableRegion region =
        reachable_region(model, vc.mbar, vc.mu);

    // Random reachable target: rejection-sample the image bounding box,
    // falling back to a random grid image.
    const double x_lo = region.pred_x.minCoeff(),
                 x_hi = region.pred_x.maxCoeff();
    const double y_lo = region.pred_y.minCoeff(),
                 y_hi = region.pred_y.maxCoeff();
    bool found = false;
    for (int attempt = 0; attempt < 200 && !found; ++attempt) {
      vc.target = Vec2{x_lo + (x_hi - x_lo) * unit(rng),
                       y_lo + (y_hi - y_lo) * unit(rng)};
      found = is_reachable(vc.target, region);
    }
    if (!found) {
      const int i = static_cast<int>(unit(rng) * region.m) % region.m;
      const int j = static_cast<int>(unit(rng) * region.n) % region.n;
      vc.target = Vec2{region.pred_x(i, j), region.pred_y(i, j)};
    }

    vc.solution =
        solve_inverse(vc.target, vc.mbar, vc.mu, model, &region,
                      solve_options);
    if (!vc.solution.reachable) continue;  // should not happen by sampling

    const JumpResult sim = forward_model(
        {vc.solution.dalpha, vc.solution.eps, vc.mbar, vc.mu}, rule,
        sim_options);
    vc.simulated = Vec2{sim.xbar * L, sim.ybar * L};
    vc.apex_error = (vc.simulated - Vec2{vc.target * L}).norm();
    stats.cases.push_back(vc);
  }

  const int n = static_cast<int>(stats.cases.size());
  if (n > 0) {
    double sum = 0.0, sum_t = 0.0;
    for (const auto& vc : stats.cases) {
      sum += vc.apex_error;
      sum_t += vc.solution.wall_time;
    }
    stats.mean_error = sum / n;
    stats.mean_solve_time = sum_t / n;
    double var = 0.0;
    for (const auto& vc : stats.cases)
      var += (vc.apex_error - stats.mean_error) *
             (vc.apex_error - stats.mean_error);
    stats.std_error = std::sqrt(var / n);
  }
  return stats;
}

}  // namespace snapjump
