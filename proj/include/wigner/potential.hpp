#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "wigner/errors.hpp"

namespace wigner {

/// Coordinates (x1, y1, ..., xN, yN) in units of r0.
using ElectronConfiguration = Eigen::VectorXd;

inline constexpr double coincidence_threshold = 1e-9;

/// Parameters of the confining potential, all dimensionless.
///
/// Lengths are in r0, the dot strength is Λ/Ω and the three barrier heights
/// are in units of ħΩ. `r_omega` converts ħΩ into the Coulomb energy unit.
struct PotentialParams {
  int n_electrons = 2;
  double span = 2.0;           // d
  double dot_offset_y = 0.1;   // y0
  double dot_offset_x = 0.0;   // x0
  double dot_strength = 0.0;   // Λ/Ω
  double dot_width = 1.0;      // σ
  double barrier_left = 0.0;   // hL
  double barrier_right = 0.0;  // hR
  double outer_barrier = 0.0;  // h0
  double barrier_pos = 1.0;    // l
  double barrier_width = 1.0;  // w
  double outer_width = 1.0;    // w_out
  double r_omega = 10.0;
  double offset = 0.0;  // added to V so that V(R̄) = 0 once R̄ is known

  void validate() const {
    if (n_electrons < 1) throw InvalidArgument("n_electrons must be >= 1");
    if (!(span > 0.0)) throw InvalidArgument("span must be positive");
    if (!(dot_width > 0.0) || !(barrier_width > 0.0) || !(outer_width > 0.0))
      throw InvalidArgument("widths must be positive");
    if (!(r_omega > 0.0)) throw InvalidArgument("r_omega must be positive");
  }

  /// Conversion factor from ħΩ to the Coulomb energy unit.
  double hbar_omega() const { return std::sqrt(2.0 / r_omega); }
};

inline void validate_configuration(const ElectronConfiguration& r, int n) {
  if (r.size() != 2 * n)
    throw InvalidArgument("configuration has " + std::to_string(r.size()) +
                          " coordinates, expected " + std::to_string(2 * n));
  if (!r.allFinite()) throw InvalidArgument("configuration has non-finite coordinates");
}

/// The confining potential with analytic derivatives.
class Potential {
 public:
  explicit Potential(PotentialParams p) : p_(std::move(p)) { p_.validate(); }

  const PotentialParams& params() const { return p_; }
  PotentialParams& params() { return p_; }
  int dimension() const { return 2 * p_.n_electrons; }

  void set_offset(double offset) { p_.offset = offset; }

  double value(const ElectronConfiguration& r) const {
    validate_configuration(r, p_.n_electrons);
    const int n = p_.n_electrons;
    double v = p_.offset;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < i; ++j) v += 1.0 / separation(r, i, j);
      v += single(r(2 * i), r(2 * i + 1)).v;
    }
    return v;
  }

  Eigen::VectorXd gradient(const ElectronConfiguration& r) const {
    validate_configuration(r, p_.n_electrons);
    const int n = p_.n_electrons;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(2 * n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < i; ++j) {
        const double dx = r(2 * i) - r(2 * j), dy = r(2 * i + 1) - r(2 * j + 1);
        const double d = separation(r, i, j);
        const double c = -1.0 / (d * d * d);
        g(2 * i) += c * dx;
        g(2 * i + 1) += c * dy;
        g(2 * j) -= c * dx;
        g(2 * j + 1) -= c * dy;
      }
      const auto s = single(r(2 * i), r(2 * i + 1));
      g(2 * i) += s.dx;
      g(2 * i + 1) += s.dy;
    }
    return g;
  }

  Eigen::MatrixXd hessian(const ElectronConfiguration& r) const {
    validate_configuration(r, p_.n_electrons);
    const int n = p_.n_electrons;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < i; ++j) {
        const Eigen::Vector2d dv(r(2 * i) - r(2 * j), r(2 * i + 1) - r(2 * j + 1));
        const double d = separation(r, i, j);
        const double d3 = d * d * d;
        const Eigen::Matrix2d b =
            3.0 * dv * dv.transpose() / (d3 * d * d) - Eigen::Matrix2d::Identity() / d3;
        h.block<2, 2>(2 * i, 2 * i) += b;
        h.block<2, 2>(2 * j, 2 * j) += b;
        h.block<2, 2>(2 * i, 2 * j) -= b;
        h.block<2, 2>(2 * j, 2 * i) -= b;
      }
      const auto s = single(r(2 * i), r(2 * i + 1));
      h(2 * i, 2 * i) += s.dxx;
      h(2 * i + 1, 2 * i + 1) += s.dyy;
      h(2 * i, 2 * i + 1) += s.dxy;
      h(2 * i + 1, 2 * i) += s.dxy;
    }
    return h;
  }

 private:
  struct Terms {
    double v, dx, dy, dxx, dyy, dxy;
  };

  static double separation(const ElectronConfiguration& r, int i, int j) {
    const double d = std::hypot(r(2 * i) - r(2 * j), r(2 * i + 1) - r(2 * j + 1));
    if (d < coincidence_threshold)
      throw CoincidentElectrons("electrons " + std::to_string(j + 1) + " and " +
                                std::to_string(i + 1) + " coincide");
    return d;
  }

  // exp(-(x-c)²/2w²) and its first two x-derivatives, scaled by `a`.
  static void add_gaussian(double x, double c, double w, double a, Terms& t) {
    if (a == 0.0) return;
    const double u = x - c, w2 = w * w;
    const double g = a * std::exp(-u * u / (2.0 * w2));
    t.v += g;
    t.dx += -u / w2 * g;
    t.dxx += (u * u / (w2 * w2) - 1.0 / w2) * g;
  }

  // One-body terms for an electron at (x, y).
  Terms single(double x, double y) const {
    Terms t{y * y, 0.0, 2.0 * y, 0.0, 2.0, 0.0};
    const double lam2 = p_.dot_strength * p_.dot_strength;
    if (lam2 != 0.0) {
      const double parity = (p_.n_electrons % 2 == 1) ? 1.0 : -1.0;  // (-1)^{N+1}
      const double shifts[2] = {parity * p_.dot_offset_y, p_.dot_offset_y};
      const double centres[2] = {p_.dot_offset_x, -p_.dot_offset_x};
      const double s2 = p_.dot_width * p_.dot_width;
      for (int k = 0; k < 2; ++k) {
        const double u = x - centres[k];
        const double g = std::exp(-u * u / (2.0 * s2));
        const double gp = -u / s2 * g;
        const double gpp = (u * u / (s2 * s2) - 1.0 / s2) * g;
        const double q = y + shifts[k];
        t.v += lam2 * g * q * q;
        t.dx += lam2 * gp * q * q;
        t.dy += 2.0 * lam2 * g * q;
        t.dxx += lam2 * gpp * q * q;
        t.dyy += 2.0 * lam2 * g;
        t.dxy += 2.0 * lam2 * gp * q;
      }
    }
    const double e = p_.hbar_omega();
    const double half = 0.5 * p_.span;
    add_gaussian(x, p_.barrier_pos - half, p_.barrier_width, e * p_.barrier_left, t);
    add_gaussian(x, half - p_.barrier_pos, p_.barrier_width, e * p_.barrier_right, t);
    add_gaussian(x, half, p_.outer_width, e * p_.outer_barrier, t);
    add_gaussian(x, -half, p_.outer_width, e * p_.outer_barrier, t);
    return t;
  }

  PotentialParams p_;
};

inline double evaluate_potential(const ElectronConfiguration& r, const PotentialParams& p) {
  return Potential(p).value(r);
}

inline Eigen::VectorXd potential_gradient(const ElectronConfiguration& r,
                                          const PotentialParams& p) {
  return Potential(p).gradient(r);
}

inline Eigen::MatrixXd potential_hessian(const ElectronConfiguration& r,
                                         const PotentialParams& p) {
  return Potential(p).hessian(r);
}

}  // namespace wigner
