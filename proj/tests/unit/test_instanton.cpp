#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "wigner/equilibrium.hpp"
#include "wigner/exchange_catalog.hpp"
#include "wigner/instanton.hpp"

using namespace wigner;

namespace {

// One particle in a 2D isotropic well, moving along x from 0 to a.
struct OscillatorCase {
  double omega = 0.5;
  double a = 1.0;
  InstantonConfig cfg;

  ElectronConfiguration start() const { return ElectronConfiguration::Zero(2); }
  ElectronConfiguration end() const {
    ElectronConfiguration e = ElectronConfiguration::Zero(2);
    e(0) = a;
    return e;
  }
  QuadraticPotential potential() const { return QuadraticPotential::harmonic(omega, 2); }
  // Discrete Euler–Lagrange solution: x_k = a sinh(kθ)/sinh(Mθ), cosh θ = 1 + ω²Δτ²/2.
  double theta() const {
    const double dt = cfg.dtau();
    return std::acosh(1.0 + 0.5 * omega * omega * dt * dt);
  }
  double discrete_x(int k) const { return a * std::sinh(k * theta()) / std::sinh(cfg.slices * theta()); }
  double discrete_action() const {
    const double dt = cfg.dtau();
    return a * (a - discrete_x(cfg.slices - 1)) / (2.0 * dt) + 0.25 * omega * omega * dt * a * a;
  }
  double continuum_action() const { return 0.5 * omega * a * a / std::tanh(omega * cfg.total_time); }
};

InstantonPath straight(const ElectronConfiguration& s, const ElectronConfiguration& e, int m, double dt) {
  InstantonPath p{Eigen::MatrixXd(s.size(), m + 1), dt};
  for (int k = 0; k <= m; ++k) p.slices.col(k) = s + (e - s) * (static_cast<double>(k) / m);
  return p;
}

}  // namespace

TEST(Action, StaticPathAtZeroIsZero) {
  const auto pot = QuadraticPotential::harmonic(1.0, 2);
  const InstantonPath p{Eigen::MatrixXd::Zero(2, 11), 0.3};
  EXPECT_DOUBLE_EQ(discretized_action(p, pot), 0.0);
}

TEST(Action, LinearPathClosedForm) {
  const double omega = 0.7, a = 1.3, dt = 0.25;
  const int m = 40;
  const auto pot = QuadraticPotential::harmonic(omega, 2);
  ElectronConfiguration s = ElectronConfiguration::Zero(2), e = s;
  e(0) = a;
  const InstantonPath p = straight(s, e, m, dt);
  // Springs: M (a/M)²/(2Δτ). Potential: Δτ ω²a²/(2M²) [Σ_{k<M} k² + M²/2].
  const double springs = a * a / (2.0 * m * dt);
  const double sum_k2 = (m - 1.0) * m * (2.0 * m - 1.0) / 6.0;
  const double pot_part = dt * omega * omega * a * a / (2.0 * m * m) * (sum_k2 + 0.5 * m * m);
  EXPECT_NEAR(discretized_action(p, pot), springs + pot_part, 1e-12 * (springs + pot_part));
}

TEST(Action, FreeStraightPathIsStationary) {
  const QuadraticPotential zero(Eigen::MatrixXd::Zero(4, 4), Eigen::VectorXd::Zero(4));
  ElectronConfiguration s(4), e(4);
  s << -1, 0, 1, 0;
  e << 1, 0.2, -1, -0.2;
  EXPECT_LT(action_gradient(straight(s, e, 12, 0.5), zero).norm(), 1e-13);
}

TEST(Action, GradientMatchesFiniteDifferences) {
  PotentialParams pp;
  pp.n_electrons = 2;
  pp.span = 4.0;
  pp.outer_barrier = 5.0;
  pp.outer_width = 0.3;
  pp.barrier_left = 1.0;
  pp.barrier_pos = 1.0;
  pp.barrier_width = 0.4;
  const Potential pot(pp);
  ElectronConfiguration s(4), e(4);
  s << -0.8, 0.05, 0.8, -0.05;
  e << 0.8, -0.05, -0.8, 0.05;
  InstantonConfig cfg;
  cfg.slices = 8;
  cfg.total_time = 4.0;
  InstantonPath p = initial_path(s, e, cfg, 1, 0.4);
  std::mt19937 rng(3);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (int k = 1; k < cfg.slices; ++k)
    for (int d = 0; d < 4; ++d) p.slices(d, k) += noise(rng);
  const Eigen::MatrixXd g = action_gradient(p, pot);
  const double h = 1e-6;
  for (int k = 1; k < cfg.slices; ++k)
    for (int d = 0; d < 4; ++d) {
      InstantonPath a = p, b = p;
      a.slices(d, k) += h;
      b.slices(d, k) -= h;
      const double fd = (discretized_action(a, pot) - discretized_action(b, pot)) / (2.0 * h);
      EXPECT_NEAR(g(d, k - 1), fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
}

TEST(InitialPath, EndpointsAndPerturbation) {
  InstantonConfig cfg;
  cfg.slices = 10;
  ElectronConfiguration s(4), e(4);
  s << -1, 0, 1, 0;
  e << 1, 0, -1, 0;
  const InstantonPath p = initial_path(s, e, cfg, 1, 0.05);
  EXPECT_EQ(p.slices.col(0), s);
  EXPECT_EQ(p.slices.col(10), e);
  const Eigen::VectorXd mid = 0.5 * (s + e);
  // Counter-moving electrons are pushed to opposite sides by the full amplitude.
  EXPECT_NEAR(p.slices(0, 5), mid(0), 1e-15);
  EXPECT_NEAR(p.slices(1, 5), 0.05, 1e-15);
  EXPECT_NEAR(p.slices(3, 5), -0.05, 1e-15);
  const InstantonPath q = initial_path(s, e, cfg, -1, 0.05);
  EXPECT_NEAR(q.slices(1, 5), -0.05, 1e-15);
}

TEST(InitialPath, ConstantWhenStartEqualsEnd) {
  InstantonConfig cfg;
  cfg.slices = 6;
  ElectronConfiguration s(4);
  s << -1, 0.1, 1, -0.1;
  const InstantonPath p = initial_path(s, s, cfg);
  for (int k = 0; k <= 6; ++k) EXPECT_EQ(p.slices.col(k), s);
}

TEST(InitialPath, SwapAvoidsCoincidence) {
  PotentialParams base;
  base.n_electrons = 9;
  base.span = 18.0;
  base.dot_offset_y = 0.1;
  base.barrier_left = base.barrier_right = 0.1;
  base.outer_barrier = 20.0;
  const ChainEquilibrium c = solve_chain(base);
  const auto& r = c.equilibrium.config;
  InstantonConfig cfg;
  for (int s = 1; s <= 8; ++s) {
    const auto proc = make_process(ProcessKind::pairwise1, s);
    const InstantonPath p = initial_path(r, permute_configuration(r, proc), cfg);
    for (int k = 0; k <= cfg.slices; ++k)
      EXPECT_NO_THROW(Potential(c.params).value(p.slices.col(k))) << proc.id() << " slice " << k;
  }
}

TEST(Minimize, IdentityPermutationCollapsesToPoint) {
  const auto pot = QuadraticPotential::harmonic(1.0, 2);
  ElectronConfiguration s(2);
  s << 0.2, 0.0;
  const auto res = solve_instanton(s, s, pot, InstantonConfig{});
  EXPECT_EQ(res.status, ActionStatus::converged_to_point);
}

TEST(Minimize, QuadraticSurfaceConverges) {
  OscillatorCase hc;
  hc.omega = 0.8;
  hc.cfg.slices = 32;
  hc.cfg.total_time = 10.0;
  const auto res = minimize_action(initial_path(hc.start(), hc.end(), hc.cfg), hc.potential(), hc.cfg);
  EXPECT_EQ(res.status, ActionStatus::converged_minimum);
  EXPECT_LT(res.gradient_norm, hc.cfg.grad_tol);
  EXPECT_NEAR(res.eta, hc.discrete_action(), 1e-9);
}

TEST(Minimize, OscillatorPathMatchesSinhProfile) {
  OscillatorCase hc;
  hc.cfg.slices = 64;
  const auto res = minimize_action(initial_path(hc.start(), hc.end(), hc.cfg), hc.potential(), hc.cfg);
  ASSERT_EQ(res.status, ActionStatus::converged_minimum);
  double bound = 0.0, dev = 0.0;
  for (int k = 0; k <= hc.cfg.slices; ++k) {
    const double tau = k * hc.cfg.dtau();
    const double exact = hc.a * std::sinh(hc.omega * tau) / std::sinh(hc.omega * hc.cfg.total_time);
    bound = std::max(bound, std::abs(hc.discrete_x(k) - exact));
    dev = std::max(dev, std::abs(res.path.slices(0, k) - exact));
    EXPECT_NEAR(res.path.slices(1, k), 0.0, 1e-6);
  }
  EXPECT_LT(dev, 2.0 * bound);
}

TEST(Minimize, OscillatorActionConvergesInSlices) {
  double prev = 1e300;
  for (int m : {16, 32, 64, 128}) {
    OscillatorCase hc;
    hc.cfg.slices = m;
    const auto res = minimize_action(initial_path(hc.start(), hc.end(), hc.cfg), hc.potential(), hc.cfg);
    const double err = std::abs(res.eta - hc.continuum_action()) / hc.continuum_action();
    EXPECT_LT(err, prev) << "M = " << m;
    if (m == 64) EXPECT_LT(err, 0.015);
    prev = err;
  }
}

TEST(Minimize, TraceReportsEveryIteration) {
  OscillatorCase hc;
  hc.cfg.slices = 16;
  int calls = 0;
  const auto res = minimize_action(initial_path(hc.start(), hc.end(), hc.cfg), hc.potential(), hc.cfg,
                                   [&](int, double, double) { ++calls; });
  EXPECT_EQ(calls, res.iterations + 1);
}

TEST(Minimize, IterationCapKeepsBestPath) {
  OscillatorCase hc;
  hc.cfg.slices = 32;
  hc.cfg.max_iters = 3;
  const auto res = minimize_action(initial_path(hc.start(), hc.end(), hc.cfg), hc.potential(), hc.cfg);
  EXPECT_EQ(res.status, ActionStatus::iteration_cap);
  EXPECT_LE(res.eta, discretized_action(initial_path(hc.start(), hc.end(), hc.cfg), hc.potential()));
}

TEST(InstantonConfig, Validation) {
  InstantonConfig cfg;
  cfg.slices = 1;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = InstantonConfig{};
  cfg.total_time = -1.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  EXPECT_EQ(InstantonConfig{}.slices, 70);
  EXPECT_DOUBLE_EQ(InstantonConfig{}.total_time, 30.0);
}
