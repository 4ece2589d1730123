#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wigner/errors.hpp"
#include "wigner/exchange_catalog.hpp"
#include "wigner/potential.hpp"

namespace wigner {

/// Anything with a value, gradient and Hessian on R^dimension().
template <class P>
concept PathPotential = requires(const P& p, const Eigen::VectorXd& x) {
  { p.dimension() } -> std::convertible_to<int>;
  { p.value(x) } -> std::convertible_to<double>;
  { p.gradient(x) } -> std::convertible_to<Eigen::VectorXd>;
  { p.hessian(x) } -> std::convertible_to<Eigen::MatrixXd>;
};

/// V(x) = ½ (x − c)ᵀ K (x − c).
class QuadraticPotential {
 public:
  QuadraticPotential(Eigen::MatrixXd k, Eigen::VectorXd centre)
      : k_(std::move(k)), c_(std::move(centre)) {}
  static QuadraticPotential harmonic(double omega, int dim = 1) {
    return {omega * omega * Eigen::MatrixXd::Identity(dim, dim), Eigen::VectorXd::Zero(dim)};
  }
  int dimension() const { return static_cast<int>(c_.size()); }
  double value(const Eigen::VectorXd& x) const { return 0.5 * (x - c_).dot(k_ * (x - c_)); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const { return k_ * (x - c_); }
  Eigen::MatrixXd hessian(const Eigen::VectorXd&) const { return k_; }

 private:
  Eigen::MatrixXd k_;
  Eigen::VectorXd c_;
};

static_assert(PathPotential<Potential>);
static_assert(PathPotential<QuadraticPotential>);

struct InstantonConfig {
  int slices = 70;            // M
  double total_time = 30.0;   // T_τ
  double step_size0 = 1e-3;   // α0
  double grad_tol = 1e-6;     // ε_c
  double point_tol = 1e-4;    // ε_p
  int max_iters = 200000;
  double max_step = 1e3;      // upper clamp on the BB step

  double dtau() const { return total_time / slices; }
  bool operator==(const InstantonConfig&) const = default;

  void validate() const {
    if (slices < 2) throw InvalidArgument("slices (M) must be >= 2");
    if (!(total_time > 0.0)) throw InvalidArgument("total_time must be positive");
    if (!(step_size0 > 0.0) || !(grad_tol > 0.0) || !(point_tol > 0.0))
      throw InvalidArgument("step size and tolerances must be positive");
    if (max_iters < 1) throw InvalidArgument("max_iters must be positive");
  }
};

/// Column m holds the configuration at τ_m = m Δτ, m = 0..M.
struct InstantonPath {
  Eigen::MatrixXd slices;
  double dtau = 1.0;

  int m() const { return static_cast<int>(slices.cols()) - 1; }
  int dimension() const { return static_cast<int>(slices.rows()); }
};

enum class ActionStatus { converged_minimum, converged_to_point, iteration_cap };

inline std::string to_string(ActionStatus s) {
  switch (s) {
    case ActionStatus::converged_minimum: return "converged_minimum";
    case ActionStatus::converged_to_point: return "converged_to_point";
    case ActionStatus::iteration_cap: return "iteration_cap";
  }
  return "unknown";
}

struct ActionResult {
  double eta = 0.0;
  InstantonPath path;
  ActionStatus status = ActionStatus::iteration_cap;
  double gradient_norm = 0.0;
  int iterations = 0;
};

/// Discretised dimensionless action.
///
/// Springs Σ |R_m − R_{m−1}|²/(2Δτ) plus Δτ Σ V(R_m), with the two endpoint
/// slices carrying half weight. For an instanton both endpoints are minima
/// with V = 0, so this equals the one-sided Riemann sum over m = 1..M.
template <PathPotential P>
double discretized_action(const InstantonPath& path, const P& pot) {
  const int m = path.m();
  if (m < 1) throw InvalidArgument("path needs at least two slices");
  if (path.dimension() != pot.dimension()) throw InvalidArgument("path/potential dimension mismatch");
  const double dt = path.dtau;
  double eta = 0.0;
  for (int k = 1; k <= m; ++k)
    eta += (path.slices.col(k) - path.slices.col(k - 1)).squaredNorm() / (2.0 * dt);
  for (int k = 0; k <= m; ++k) {
    const double w = (k == 0 || k == m) ? 0.5 : 1.0;
    eta += w * dt * pot.value(path.slices.col(k));
  }
  return eta;
}

/// Gradient with respect to the interior slices 1..M−1, column k−1 for slice k.
template <PathPotential P>
Eigen::MatrixXd action_gradient(const InstantonPath& path, const P& pot) {
  const int m = path.m();
  if (m < 2) throw InvalidArgument("path needs at least one interior slice");
  if (path.dimension() != pot.dimension()) throw InvalidArgument("path/potential dimension mismatch");
  const double dt = path.dtau;
  Eigen::MatrixXd g(path.dimension(), m - 1);
  for (int k = 1; k < m; ++k) {
    g.col(k - 1) = (2.0 * path.slices.col(k) - path.slices.col(k - 1) - path.slices.col(k + 1)) / dt +
                   dt * pot.gradient(path.slices.col(k));
  }
  return g;
}

/// Linear interpolation plus a transverse bump sin(πm/M) on the electrons that move.
///
/// Each moving electron is pushed by `amplitude` perpendicular to its own
/// displacement, to the left for sense = +1 and to the right for sense = −1.
/// Counter-moving electrons are therefore pushed to opposite sides.
inline InstantonPath initial_path(const ElectronConfiguration& start, const ElectronConfiguration& end,
                                  const InstantonConfig& cfg, int sense = 1,
                                  double amplitude = 0.05) {
  cfg.validate();
  if (start.size() != end.size() || start.size() % 2 != 0)
    throw InvalidArgument("start and end must describe the same number of electrons");
  const int m = cfg.slices;
  const int n = static_cast<int>(start.size() / 2);
  InstantonPath path{Eigen::MatrixXd(start.size(), m + 1), cfg.dtau()};
  for (int k = 0; k <= m; ++k) {
    const double t = static_cast<double>(k) / m;
    path.slices.col(k) = (1.0 - t) * start + t * end;
    if (k == 0 || k == m) continue;
    const double bump = amplitude * sense * std::sin(std::numbers::pi * t);
    for (int j = 0; j < n; ++j) {
      const Eigen::Vector2d d = end.segment<2>(2 * j) - start.segment<2>(2 * j);
      const double len = d.norm();
      if (len < 1e-12) continue;
      path.slices(2 * j, k) += -bump * d.y() / len;
      path.slices(2 * j + 1, k) += bump * d.x() / len;
    }
  }
  path.slices.col(0) = start;
  path.slices.col(m) = end;
  return path;
}

/// Root-mean-square distance of the slices from their centroid.
inline double path_spread(const InstantonPath& path) {
  const Eigen::VectorXd c = path.slices.rowwise().mean();
  return std::sqrt((path.slices.colwise() - c).colwise().squaredNorm().mean());
}

using TraceCallback = std::function<void(int iteration, double eta, double grad_norm)>;

/// Two-point (Barzilai–Borwein) steepest descent on the interior slices.
///
/// The first step uses α0; later steps use α = s·y / y·y with s the change in
/// the path and y the change in the gradient. Endpoints are never touched.
template <PathPotential P>
ActionResult minimize_action(const InstantonPath& path0, const P& pot, const InstantonConfig& cfg,
                             const TraceCallback& trace = {}) {
  cfg.validate();
  const int m = path0.m();
  if (m < 2) throw InvalidArgument("path needs at least one interior slice");

  ActionResult res;
  res.path = path0;
  InstantonPath& path = res.path;

  if (path_spread(path) < cfg.point_tol) {
    res.status = ActionStatus::converged_to_point;
    res.eta = discretized_action(path, pot);
    res.gradient_norm = action_gradient(path, pot).norm();
    return res;
  }

  Eigen::MatrixXd g = action_gradient(path, pot);
  double eta = discretized_action(path, pot);
  double gnorm = g.norm();
  InstantonPath best = path;
  double best_eta = eta, best_gnorm = gnorm;
  double alpha = cfg.step_size0;

  int it = 0;
  for (;; ++it) {
    if (trace) trace(it, eta, gnorm);
    if (gnorm < cfg.grad_tol) {
      res.status = ActionStatus::converged_minimum;
      break;
    }
    if (path_spread(path) < cfg.point_tol) {
      res.status = ActionStatus::converged_to_point;
      break;
    }
    if (it >= cfg.max_iters) {
      res.status = ActionStatus::iteration_cap;
      path = best;
      eta = best_eta;
      gnorm = best_gnorm;
      break;
    }

    const Eigen::MatrixXd step = -alpha * g;
    path.slices.middleCols(1, m - 1) += step;
    Eigen::MatrixXd gn;
    try {
      gn = action_gradient(path, pot);
      eta = discretized_action(path, pot);
    } catch (const CoincidentElectrons& e) {
      throw Diverged(std::string("path passed through a coincidence: ") + e.what(), it + 1);
    }
    if (!gn.allFinite() || !std::isfinite(eta))
      throw Diverged("action iterate became non-finite", it + 1);

    const Eigen::MatrixXd y = gn - g;
    const double sy = (step.array() * y.array()).sum();
    const double yy = y.squaredNorm();
    if (sy > 0.0 && yy > 0.0)
      alpha = sy / yy;
    else if (yy > 0.0)
      alpha = step.norm() / std::sqrt(yy);
    alpha = std::min(alpha, cfg.max_step);

    g = std::move(gn);
    gnorm = g.norm();
    if (eta < best_eta) {
      best = path;
      best_eta = eta;
      best_gnorm = gnorm;
    }
  }
  res.eta = eta;
  res.gradient_norm = gnorm;
  res.iterations = it;
  return res;
}

/// Least-action path from R̄ to P R̄, trying both transverse senses of the initial bump.
///
/// The two senses can settle in mirror-image instantons when the potential is
/// not y-symmetric; the lower action is the physical one.
template <PathPotential P>
ActionResult solve_instanton(const ElectronConfiguration& start, const ElectronConfiguration& end,
                             const P& pot, const InstantonConfig& cfg) {
  ActionResult best;
  bool have = false;
  std::string last_error;
  for (int sense : {1, -1}) {
    try {
      ActionResult r = minimize_action(initial_path(start, end, cfg, sense), pot, cfg);
      const bool better = !have || (r.status != ActionStatus::iteration_cap &&
                                    best.status == ActionStatus::iteration_cap) ||
                          ((r.status == ActionStatus::iteration_cap) ==
                               (best.status == ActionStatus::iteration_cap) &&
                           r.eta < best.eta);
      if (better) {
        best = std::move(r);
        have = true;
      }
    } catch (const Diverged& e) {
      last_error = e.what();
    } catch (const CoincidentElectrons& e) {
      last_error = e.what();
    }
  }
  if (!have) throw Diverged("both initial senses failed: " + last_error, 0);
  return best;
}

}  // namespace wigner
