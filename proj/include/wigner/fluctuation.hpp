#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wigner/equilibrium.hpp"
#include "wigner/errors.hpp"
#include "wigner/exchange_catalog.hpp"
#include "wigner/instanton.hpp"
#include "wigner/parallel.hpp"
#include "wigner/units.hpp"

namespace wigner {

inline constexpr int default_fluctuation_cap = 4096;

/// Discretised −∂²_τ + H(τ) over all M+1 slices.
///
/// Diagonal blocks are 2/Δτ² + H(R_m), off-diagonal blocks −1/Δτ².
template <PathPotential P>
Eigen::MatrixXd build_fluctuation_matrix(const InstantonPath& path, const P& pot,
                                         int max_dimension = default_fluctuation_cap) {
  const int d = path.dimension();
  const int slices = path.m() + 1;
  const long total = static_cast<long>(d) * slices;
  if (total > max_dimension)
    throw InvalidArgument("fluctuation matrix dimension " + std::to_string(total) +
                          " exceeds cap " + std::to_string(max_dimension));
  const double k = 1.0 / (path.dtau * path.dtau);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(total, total);
  for (int m = 0; m < slices; ++m) {
    auto blk = a.block(m * d, m * d, d, d);
    const Eigen::MatrixXd h = pot.hessian(path.slices.col(m));
    blk = 0.5 * (h + h.transpose());
    blk.diagonal().array() += 2.0 * k;
    if (m + 1 < slices) {
      a.block(m * d, (m + 1) * d, d, d).diagonal().setConstant(-k);
      a.block((m + 1) * d, m * d, d, d).diagonal().setConstant(-k);
    }
  }
  return a;
}

/// The same matrix for a path that sits at `r` for all M+1 slices.
template <PathPotential P>
Eigen::MatrixXd build_static_matrix(const ElectronConfiguration& r, int slices_m, double dtau,
                                    const P& pot, int max_dimension = default_fluctuation_cap) {
  InstantonPath p{r.replicate(1, slices_m + 1), dtau};
  return build_fluctuation_matrix(p, pot, max_dimension);
}

/// Σ log λ over the spectrum of the static-path matrix, which must be positive definite.
inline double static_log_det(const Eigen::MatrixXd& a_static) {
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a_static, Eigen::EigenvaluesOnly).eigenvalues();
  if (!(ev(0) > 0.0))
    throw SaddlePoint("static fluctuation matrix is not positive definite (lowest eigenvalue " +
                      std::to_string(ev(0)) + ")");
  return ev.array().log().sum();
}

struct DetRatio {
  double log_ratio = 0.0;           // log det(A_static) − log det′(A_instanton)
  double removed_eigenvalue = 0.0;  // smallest-magnitude eigenvalue of A_instanton
  double next_eigenvalue = 0.0;     // smallest remaining eigenvalue
};

/// det′ drops the smallest-magnitude instanton eigenvalue (the time-translation mode).
inline DetRatio det_ratio_from_log_static(const Eigen::MatrixXd& a_instanton, double log_det_static) {
  const Eigen::VectorXd ev =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a_instanton, Eigen::EigenvaluesOnly).eigenvalues();
  Eigen::Index zero = 0;
  ev.cwiseAbs().minCoeff(&zero);
  DetRatio out;
  out.removed_eigenvalue = ev(zero);
  double log_inst = 0.0;
  double next = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (i == zero) continue;
    if (!(ev(i) > 0.0))
      throw SaddlePoint("instanton fluctuation matrix has an extra negative mode " +
                        std::to_string(ev(i)));
    log_inst += std::log(ev(i));
    next = std::min(next, ev(i));
  }
  out.next_eigenvalue = next;
  out.log_ratio = log_det_static - log_inst;
  return out;
}

inline DetRatio det_ratio_with_zero_mode(const Eigen::MatrixXd& a_instanton, const Eigen::MatrixXd& a_static) {
  if (a_instanton.rows() != a_static.rows())
    throw InvalidArgument("fluctuation matrices differ in dimension");
  return det_ratio_from_log_static(a_instanton, static_log_det(a_static));
}

struct CouplingResult {
  ExchangeProcess process;
  double eta = 0.0;
  double log_det_ratio = 0.0;
  double j_over_omega = 0.0;  // units of ħΩ
  double j_mev = 0.0;
  double zero_mode_eigenvalue = 0.0;
  std::string status = "converged_minimum";
};

/// J_P = (e²/4πε a_B) r_Ω^{−5/4} A_P √(η/2π) e^{log_ratio/2} e^{−√r_Ω η}, returned in units of ħΩ.
inline double coupling_over_omega(double eta, double log_ratio, int a_p, double r_omega) {
  // e²/(4πε a_B) = r_Ω E0 and ħΩ = √(2/r_Ω) E0.
  const double pref = std::pow(r_omega, 0.25) / std::numbers::sqrt2;
  return pref * a_p * std::sqrt(eta / (2.0 * std::numbers::pi)) * std::exp(0.5 * log_ratio) *
         std::exp(-std::sqrt(r_omega) * eta);
}

/// Assembles J_P. `hbar_omega_mev` converts to meV when positive.
inline CouplingResult exchange_coupling(const ActionResult& action, double log_ratio,
                                        const ExchangeProcess& proc, double r_omega,
                                        double hbar_omega_mev = 0.0) {
  CouplingResult c;
  c.process = proc;
  c.eta = action.eta;
  c.log_det_ratio = log_ratio;
  c.status = to_string(action.status);
  if (action.status == ActionStatus::converged_to_point) return c;
  c.j_over_omega = coupling_over_omega(action.eta, log_ratio, proc.a_p(), r_omega);
  if (hbar_omega_mev > 0.0) c.j_mev = c.j_over_omega * hbar_omega_mev;
  return c;
}

/// Instanton plus prefactor for every process, parallel over processes.
///
/// `chain` must hold the full equilibrium with the offset set so V(R̄) = 0.
inline std::vector<CouplingResult> compute_couplings(const ChainEquilibrium& chain,
                                                     const std::vector<ExchangeProcess>& processes,
                                                     const InstantonConfig& cfg, unsigned workers = 1,
                                                     double hbar_omega_mev = 0.0) {
  const Potential pot(chain.params);
  const ElectronConfiguration& rbar = chain.equilibrium.config;
  const double log_static = static_log_det(build_static_matrix(rbar, cfg.slices, cfg.dtau(), pot));
  const double r_omega = chain.params.r_omega;
  return parallel_map(processes.size(), workers, [&](std::size_t i) {
    const ExchangeProcess& proc = processes[i];
    CouplingResult c;
    c.process = proc;
    try {
      const ActionResult act = solve_instanton(rbar, permute_configuration(rbar, proc), pot, cfg);
      if (act.status == ActionStatus::converged_to_point) return exchange_coupling(act, 0.0, proc, r_omega);
      const DetRatio dr = det_ratio_from_log_static(build_fluctuation_matrix(act.path, pot), log_static);
      c = exchange_coupling(act, dr.log_ratio, proc, r_omega, hbar_omega_mev);
      c.zero_mode_eigenvalue = dr.removed_eigenvalue;
    } catch (const SaddlePoint& e) {
      c.status = "saddle_point";
    } catch (const Diverged& e) {
      c.status = "diverged";
    }
    return c;
  });
}

}  // namespace wigner
