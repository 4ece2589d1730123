#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "wigner/errors.hpp"
#include "wigner/potential.hpp"

namespace wigner {

struct EquilibriumResult {
  ElectronConfiguration config;
  double energy = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
};

/// Carries the best configuration reached before the iteration cap.
class EquilibriumNonConvergence : public NonConvergence {
 public:
  EquilibriumNonConvergence(const std::string& what, EquilibriumResult best)
      : NonConvergence(what), best_(std::move(best)) {}
  const EquilibriumResult& best() const noexcept { return best_; }

 private:
  EquilibriumResult best_;
};

inline constexpr double zigzag_amplitude = 0.01;

/// Evenly spaced electrons on (-d/2, d/2) with alternating ±0.01 transverse offsets.
inline ElectronConfiguration zigzag_initial_guess(int n, double span) {
  if (n < 2) throw InvalidArgument("zigzag guess needs at least two electrons");
  if (!(span > 0.0)) throw InvalidArgument("span must be positive");
  ElectronConfiguration r(2 * n);
  const double a = span / n;
  for (int i = 0; i < n; ++i) {
    r(2 * i) = -0.5 * span + (i + 0.5) * a;
    r(2 * i + 1) = (i % 2 == 0) ? zigzag_amplitude : -zigzag_amplitude;
  }
  return r;
}

struct MinimizerOptions {
  double tol = 1e-9;
  int max_iters = 100000;
};

/// Newton/BFGS minimisation with a capped backtracking Armijo line search.
inline EquilibriumResult find_equilibrium(const PotentialParams& params,
                                          const ElectronConfiguration& guess,
                                          MinimizerOptions opts = {}) {
  const Potential pot(params);
  validate_configuration(guess, params.n_electrons);
  const int dim = pot.dimension();

  Eigen::VectorXd x = guess;
  double f = pot.value(x);
  Eigen::VectorXd g = pot.gradient(x);
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(dim, dim);
  // Narrow Gaussian barriers can be jumped in a single long step, after which
  // the end electrons run off to infinity; cap the move per coordinate.
  const double max_move = 0.5 * std::min({params.outer_width, params.barrier_width, params.dot_width});
  int it = 0;
  bool stalled = false;

  for (; it < opts.max_iters && g.norm() >= opts.tol; ++it) {
    // Newton direction where the Hessian is positive definite, BFGS elsewhere.
    const Eigen::LDLT<Eigen::MatrixXd> newton(pot.hessian(x));
    const bool use_newton = newton.info() == Eigen::Success && newton.isPositive() &&
                            newton.vectorD().minCoeff() > 1e-10 * newton.vectorD().cwiseAbs().maxCoeff();
    Eigen::VectorXd p = use_newton ? Eigen::VectorXd(-newton.solve(g)) : Eigen::VectorXd(-hinv * g);
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      hinv.setIdentity();
      p = -g;
      slope = -g.squaredNorm();
    }

    const double longest = p.cwiseAbs().maxCoeff();
    double step = longest > max_move ? max_move / longest : 1.0;
    Eigen::VectorXd xn;
    double fn = 0.0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k, step *= 0.5) {
      xn = x + step * p;
      try {
        fn = pot.value(xn);
      } catch (const CoincidentElectrons&) {
        continue;
      }
      if (fn <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
    }
    // A failed line search or a step with no decrease means roundoff has
    // swamped the energy change; the Newton polish below takes over.
    if (!accepted || !(fn < f)) {
      stalled = true;
      break;
    }
    const Eigen::VectorXd gn = pot.gradient(xn);

    const Eigen::VectorXd s = xn - x, y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-300) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd i = Eigen::MatrixXd::Identity(dim, dim);
      hinv = (i - rho * s * y.transpose()) * hinv * (i - rho * y * s.transpose()) +
             rho * s * s.transpose();
    }
    x = std::move(xn);
    f = fn;
    g = std::move(gn);
  }

  // Once the Armijo test is lost in roundoff, polish with Newton steps on the
  // analytic Hessian while they keep reducing the gradient.
  for (int k = 0; stalled && k < 20 && g.norm() >= opts.tol; ++k) {
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(pot.hessian(x));
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
    const Eigen::VectorXd xn = x - ldlt.solve(g);
    Eigen::VectorXd gn;
    try {
      gn = pot.gradient(xn);
    } catch (const CoincidentElectrons&) {
      break;
    }
    if (!(gn.norm() < g.norm())) break;
    x = xn;
    g = std::move(gn);
    f = pot.value(x);
  }

  // With no dot potentials the two zig-zag branches are degenerate; report y1 > 0.
  const bool y_symmetric = params.dot_strength == 0.0 || params.dot_offset_y == 0.0;
  if (y_symmetric && x(1) < 0.0) {
    for (int i = 0; i < params.n_electrons; ++i) x(2 * i + 1) = -x(2 * i + 1);
  }

  EquilibriumResult res{x, f, g.norm(), it};
  if (!(res.gradient_norm < opts.tol))
    throw EquilibriumNonConvergence("equilibrium search stopped with gradient norm " +
                                        std::to_string(res.gradient_norm),
                                    res);
  return res;
}

inline EquilibriumResult find_equilibrium(const PotentialParams& params,
                                          const ElectronConfiguration& guess, double tol) {
  return find_equilibrium(params, guess, MinimizerOptions{tol, 100000});
}

/// Barrier geometry read off the dot-free equilibrium.
///
/// The internal barriers sit midway between the first two (and last two)
/// electrons: l = d/2 + (x̄1 + x̄2)/2. The dot centres sit at the outermost
/// electrons, x0 = (x̄N − x̄1)/2.
inline PotentialParams infer_geometry(const PotentialParams& params_no_dots,
                                      const ElectronConfiguration& first_pass) {
  const int n = params_no_dots.n_electrons;
  if (n < 3) throw InvalidArgument("geometry inference needs at least three electrons");
  validate_configuration(first_pass, n);
  PotentialParams p = params_no_dots;
  const double half = 0.5 * p.span;
  p.barrier_pos = half + 0.5 * (first_pass(0) + first_pass(2));
  if (!(p.barrier_pos > 0.0)) throw InvalidArgument("inferred barrier position is not positive");
  p.barrier_width = p.barrier_pos / 8.0;
  p.outer_width = p.barrier_pos / 8.0;
  p.dot_width = p.barrier_pos / 2.0;
  p.dot_strength = 4.0;
  p.dot_offset_x = 0.5 * (first_pass(2 * n - 2) - first_pass(0));
  return p;
}

/// Runs the dot-free minimisation from the zig-zag guess, then infers geometry.
inline PotentialParams infer_geometry(const PotentialParams& params_no_dots,
                                      MinimizerOptions opts = {}) {
  PotentialParams p = params_no_dots;
  p.dot_strength = 0.0;
  p.barrier_left = p.barrier_right = 0.0;
  const auto first = find_equilibrium(p, zigzag_initial_guess(p.n_electrons, p.span), opts);
  return infer_geometry(params_no_dots, first.config);
}

/// Result of the two-pass equilibrium protocol.
struct ChainEquilibrium {
  PotentialParams params;  // geometry filled in, offset set so V(R̄) = 0
  EquilibriumResult first_pass;
  EquilibriumResult equilibrium;
};

/// Dot-free pass, geometry inference, then the full minimisation.
///
/// `base` supplies N, d, y0, the barrier heights and r_Ω; geometry fields are
/// overwritten. The outer-barrier width of the first pass uses the uniform
/// spacing estimate l = d/N.
inline ChainEquilibrium solve_chain(const PotentialParams& base, MinimizerOptions opts = {}) {
  const int n = base.n_electrons;
  PotentialParams p1 = base;
  p1.barrier_left = p1.barrier_right = 0.0;
  p1.dot_strength = 0.0;
  p1.offset = 0.0;
  const double l_guess = p1.span / n;
  p1.barrier_pos = l_guess;
  p1.barrier_width = p1.outer_width = l_guess / 8.0;
  p1.dot_width = l_guess / 2.0;

  ChainEquilibrium out;
  out.first_pass = find_equilibrium(p1, zigzag_initial_guess(n, p1.span), opts);
  PotentialParams p2 = infer_geometry(p1, out.first_pass.config);
  p2.barrier_left = base.barrier_left;
  p2.barrier_right = base.barrier_right;
  out.equilibrium = find_equilibrium(p2, zigzag_initial_guess(n, p2.span), opts);
  p2.offset = -out.equilibrium.energy;
  out.equilibrium.energy = 0.0;
  out.params = p2;
  return out;
}

/// Mean over electrons of the distance to the nearest other electron.
inline double mean_nearest_neighbour(const ElectronConfiguration& r) {
  const int n = static_cast<int>(r.size() / 2);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      best = std::min(best, std::hypot(r(2 * i) - r(2 * j), r(2 * i + 1) - r(2 * j + 1)));
    }
    sum += best;
  }
  return sum / n;
}

/// d̄ = ‖R − R0‖ / (N ΔR0), with ΔR0 the mean nearest-neighbour distance of R0.
inline double quench_displacement(const ElectronConfiguration& before,
                                  const ElectronConfiguration& after) {
  if (before.size() != after.size() || before.size() < 4 || before.size() % 2 != 0)
    throw InvalidArgument("configurations must have the same electron count (>= 2)");
  const int n = static_cast<int>(before.size() / 2);
  const double spacing = mean_nearest_neighbour(before);
  if (!(spacing > 0.0)) throw InvalidArgument("reference configuration has zero spacing");
  return (after - before).norm() / (n * spacing);
}

/// d̄ for lowering the left barrier from `from` to base.barrier_left, right barrier unchanged.
///
/// The geometry is inferred once, with the barriers up; the lowered-barrier
/// minimisation starts from the barriers-up equilibrium.
inline double quench_metric(const PotentialParams& base, double from, MinimizerOptions opts = {}) {
  PotentialParams up = base;
  up.barrier_left = from;
  const ChainEquilibrium before = solve_chain(up, opts);
  PotentialParams down = before.params;
  down.barrier_left = base.barrier_left;
  down.offset = 0.0;
  const auto after = find_equilibrium(down, before.equilibrium.config, opts);
  return quench_displacement(before.equilibrium.config, after.config);
}

}  // namespace wigner
