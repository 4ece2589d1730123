#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "wigner/dynamics.hpp"
#include "wigner/errors.hpp"
#include "wigner/spin_ops.hpp"

namespace wigner {

inline constexpr double first_peak_threshold = 1e-6;

struct TimeGrid {
  double horizon = 0.0;  // ≤ 0 selects a protocol-specific default
  int points = 2000;
  int max_doublings = 8;  // horizon doublings allowed while no peak has arrived

  void validate() const {
    if (points < 3) throw InvalidArgument("time grid needs at least 3 points");
    if (!std::isfinite(horizon)) throw InvalidArgument("time grid horizon must be finite");
    if (max_doublings < 0) throw InvalidArgument("max_doublings must be non-negative");
  }
};

struct TransferResult {
  std::string metric_name;
  std::vector<double> time_grid;
  std::vector<double> metric_series;
  double peak_value = 0.0;  // max over the series
  double peak_time = 0.0;
  bool first_peak_found = false;
  double first_peak_value = 0.0;
  double first_peak_time = 0.0;
  std::map<std::string, double> metadata;
};

/// First local maximum exceeding series[0] by more than the threshold.
inline std::optional<std::size_t> first_peak(const std::vector<double>& s, double threshold = first_peak_threshold) {
  for (std::size_t i = 1; i + 1 < s.size(); ++i)
    if (s[i] > s[0] + threshold && s[i] >= s[i - 1] && s[i] > s[i + 1]) return i;
  return std::nullopt;
}

/// Samples `metric` on a uniform grid, doubling the horizon until a first peak arrives.
inline TransferResult scan_first_peak(const std::string& name, const std::function<double(double)>& metric,
                                      TimeGrid grid) {
  grid.validate();
  if (grid.horizon <= 0.0) throw InvalidArgument("time grid horizon must be positive");
  TransferResult r;
  r.metric_name = name;
  for (int attempt = 0;; ++attempt) {
    r.time_grid.resize(static_cast<std::size_t>(grid.points));
    r.metric_series.resize(r.time_grid.size());
    for (int i = 0; i < grid.points; ++i) {
      const double t = grid.horizon * i / (grid.points - 1);
      r.time_grid[i] = t;
      r.metric_series[i] = metric(t);
    }
    if (first_peak(r.metric_series) || attempt >= grid.max_doublings) break;
    grid.horizon *= 2.0;
  }
  const auto it = std::max_element(r.metric_series.begin(), r.metric_series.end());
  const auto imax = static_cast<std::size_t>(it - r.metric_series.begin());
  r.peak_value = *it;
  r.peak_time = r.time_grid[imax];
  if (const auto p = first_peak(r.metric_series)) {
    r.first_peak_found = true;
    r.first_peak_value = r.metric_series[*p];
    r.first_peak_time = r.time_grid[*p];
  }
  r.metadata["horizon"] = grid.horizon;
  return r;
}

enum class ParityProtocol { automatic, odd, even };

inline ParityProtocol resolve_parity(ParityProtocol p, int n) {
  if (p == ParityProtocol::automatic) return n % 2 ? ParityProtocol::odd : ParityProtocol::even;
  return p;
}

/// Drops every coupling whose cycle touches one of `sites`.
inline std::vector<CouplingResult> couplings_without(const std::vector<CouplingResult>& all,
                                                     const std::vector<int>& sites) {
  std::vector<CouplingResult> out;
  for (const auto& c : all) {
    const bool touches = std::any_of(c.process.cycle.begin(), c.process.cycle.end(), [&](int s) {
      return std::find(sites.begin(), sites.end(), s) != sites.end();
    });
    if (!touches) out.push_back(c);
  }
  return out;
}

/// Pre-quench ground state of the coupled middle block.
///
/// The isolated sites are decoupled from the rest, so the ground state of the
/// restricted Hamiltonian is found on the sub-chain alone and embedded.
inline StateVector prequench_ground_state(const std::vector<CouplingResult>& couplings, int n,
                                          const std::vector<int>& isolated) {
  std::vector<int> keep;
  for (int s = 1; s <= n; ++s)
    if (std::find(isolated.begin(), isolated.end(), s) == isolated.end()) keep.push_back(s);
  const int m = static_cast<int>(keep.size());
  std::vector<CouplingResult> sub;
  for (auto c : couplings_without(couplings, isolated)) {
    for (int& s : c.process.cycle) s = static_cast<int>(std::find(keep.begin(), keep.end(), s) - keep.begin()) + 1;
    sub.push_back(std::move(c));
  }
  // Renumbered cycles no longer match the catalog start index, so assemble directly.
  SpinHamiltonian h(m);
  for (const auto& c : sub) {
    const double coeff = -parity_sign(c.process) * c.j_over_omega;
    std::vector<int> cyc = c.process.cycle;
    h.add_cycle(coeff, cyc);
    if (cyc.size() > 2) {
      std::reverse(cyc.begin(), cyc.end());
      h.add_cycle(coeff, cyc);
    }
  }
  return ground_state(h);
}

struct WignerTransferOptions {
  ParityProtocol parity = ParityProtocol::automatic;
  bool right_to_left = false;
  TimeGrid grid{};
};

/// Quench transfer through a Wigner chain described by its MSE couplings.
///
/// Odd protocol: the input dot is isolated and the other N−1 spins start in
/// their ground state. Even protocol: both dots are isolated and the output
/// dot starts in |↑⟩. The channel fidelity is tracked from input to output
/// dot; times are in units of ħ/(coupling unit), i.e. 1/Ω for couplings in ħΩ.
inline TransferResult wigner_transfer(const std::vector<CouplingResult>& couplings, int n,
                                      const WignerTransferOptions& opts = {}) {
  if (n < 3) throw InvalidArgument("Wigner transfer needs at least three sites");
  const ParityProtocol parity = resolve_parity(opts.parity, n);
  const int in = opts.right_to_left ? n : 1;
  const int out = opts.right_to_left ? 1 : n;
  const SpinHamiltonian h = build_mse_hamiltonian(couplings, n);

  std::vector<int> isolated{in};
  if (parity == ParityProtocol::even) isolated.push_back(out);
  StateVector middle = prequench_ground_state(couplings, n, isolated);
  // Spectators: every site except the input, in site order.
  StateVector spectators = middle;
  if (parity == ParityProtocol::even) {
    StateVector up = StateVector::Zero(2);
    up(0) = 1.0;
    // Output dot is at the far end of the n−1 spectator sites.
    spectators = opts.right_to_left ? kron(up, middle) : kron(middle, up);
  }

  const auto sd = SpectralDecomposition::of(h);
  const ChannelFidelity channel(sd, in, out, spectators);

  TimeGrid grid = opts.grid;
  if (grid.horizon <= 0.0) {
    double jmax = 0.0;
    for (const auto& c : couplings) jmax = std::max(jmax, std::abs(c.j_over_omega));
    if (jmax == 0.0) jmax = 1.0;
    grid.horizon = n / jmax;
  }
  TransferResult r = scan_first_peak("F_av", [&](double t) { return channel.average_fidelity(t); }, grid);
  r.metadata["n"] = n;
  r.metadata["odd_protocol"] = parity == ParityProtocol::odd ? 1.0 : 0.0;
  r.metadata["input_site"] = in;
  r.metadata["output_site"] = out;
  return r;
}

/// Singlet attached to the end of a J1–J2 chain in its ground state.
///
/// Sites 1..N+1 of the evolving chain are qubits 0..N; qubit 0′ never couples,
/// so the two branches of 0′ evolve separately. Reports E_f(0′, N).
inline TransferResult nnn_singlet_transfer(int n, double j2_over_j1, TimeGrid grid = {}) {
  if (n < 2) throw InvalidArgument("NNN transfer needs N ≥ 2");
  if (n + 2 > max_qubits) throw InvalidArgument("NNN transfer exceeds the qubit cap");
  const StateVector chain = ground_state(build_j1j2(n, 1.0, j2_over_j1));
  const SpinHamiltonian h = build_j1j2(n + 1, 1.0, j2_over_j1);
  // |ψ⁻⟩_{0'0} = (|0⟩|1⟩ − |1⟩|0⟩)/√2: the 0′ = 0 branch carries qubit 0 in |1⟩.
  StateVector up = StateVector::Zero(2), down = StateVector::Zero(2);
  up(0) = 1.0;
  down(1) = 1.0;
  const StateVector b0 = kron(down, chain) / std::numbers::sqrt2;
  const StateVector b1 = -kron(up, chain) / std::numbers::sqrt2;
  StateVector support(b0.size());
  support = b0 + b1;
  const auto sd = SpectralDecomposition::of(h, &support);
  const Propagator p0(sd, b0), p1(sd, b1);
  const int total = n + 2;

  if (grid.horizon <= 0.0) grid.horizon = n;
  TransferResult r = scan_first_peak(
      "E_f",
      [&](double t) {
        StateVector full(2 * b0.size());
        full << p0.at(t), p1.at(t);
        return entanglement_of_formation(reduced_density(full, total, {1, total}));
      },
      grid);
  r.metadata["n"] = n;
  r.metadata["j2_over_j1"] = j2_over_j1;
  return r;
}

/// |↑...↑⟩ on the first `ups` sites, |↓⟩ elsewhere.
inline StateVector edge_block_state(int n, int first_up, int ups) {
  Basis b = 0;
  for (int s = 1; s <= n; ++s) {
    const bool up = s >= first_up && s < first_up + ups;
    b = (b << 1) | (up ? 0u : 1u);
  }
  return basis_state(b, n);
}

/// Release time π/(2 cos θ_r) in units of ħ/J.
inline double release_time(double theta_r) {
  const double c = std::cos(theta_r);
  if (std::abs(c) < 1e-12) throw InvalidArgument("release time diverges at theta_r = pi/2");
  return std::numbers::pi / (2.0 * c);
}

/// The state after the release pulse e^{−iH_r t_r} applied to |↑↑↓...↓⟩.
inline StateVector edge_lock_released_state(int n, double theta_delta, double theta_r) {
  const double tr = release_time(theta_r);
  const SpinHamiltonian hr = build_xxz(n, theta_delta, XxzScope::release, theta_r);
  return evolve(hr, edge_block_state(n, 1, 2), tr);
}

/// Release of an edge-locked pair followed by free XXZ evolution; F_r = |⟨R_{1,(N−1)}|φ(t)⟩|².
inline TransferResult edge_lock_release(int n, double theta_delta, double theta_r, TimeGrid grid = {}) {
  if (n < 3) throw InvalidArgument("edge lock needs at least three sites");
  const StateVector phi_f = edge_lock_released_state(n, theta_delta, theta_r);
  const StateVector target = edge_block_state(n, n - 1, 1);
  const SpinHamiltonian h = build_xxz(n, theta_delta);
  const auto sd = SpectralDecomposition::of(h, &phi_f);
  const Propagator p(sd, phi_f);
  if (grid.horizon <= 0.0) grid.horizon = 2.0 * n / std::max(std::sin(theta_delta), 1e-3);
  TransferResult r = scan_first_peak("F_r", [&](double t) { return std::norm(target.dot(p.at(t))); }, grid);
  r.metadata["n"] = n;
  r.metadata["theta_delta"] = theta_delta;
  r.metadata["theta_r"] = theta_r;
  r.metadata["t_release"] = release_time(theta_r);
  r.metadata["t_max"] = r.first_peak_found ? r.first_peak_time : r.peak_time;
  return r;
}

/// Capture: after the release and t_on of XXZ evolution, H_c acts for s ∈ [0, t_c].
///
/// F_c(s) = |⟨R_{2,(1)}|e^{−iH_c s}|φ(t_on)⟩|²; the reported peak is max over s.
inline TransferResult edge_lock_capture(int n, double theta_delta, double theta_r, double theta_c, double t_on,
                                        double t_c = std::numbers::pi / 2, int points = 2000) {
  if (n < 3) throw InvalidArgument("edge lock needs at least three sites");
  if (t_on < 0.0) throw InvalidArgument("t_on must be non-negative");
  if (!(t_c > 0.0)) throw InvalidArgument("t_c must be positive");
  if (points < 2) throw InvalidArgument("capture needs at least two time points");
  const StateVector phi_f = edge_lock_released_state(n, theta_delta, theta_r);
  const StateVector phi_on = evolve(build_xxz(n, theta_delta), phi_f, t_on);
  const SpinHamiltonian hc = build_xxz(n, theta_delta, XxzScope::capture, theta_c);
  const auto sd = SpectralDecomposition::of(hc);
  const Propagator p(sd, phi_on);
  const StateVector target = edge_block_state(n, n - 1, 2);

  TransferResult r;
  r.metric_name = "F_c";
  for (int i = 0; i < points; ++i) {
    const double s = t_c * i / (points - 1);
    r.time_grid.push_back(t_on + s);
    r.metric_series.push_back(std::norm(target.dot(p.at(s))));
  }
  const auto it = std::max_element(r.metric_series.begin(), r.metric_series.end());
  r.peak_value = *it;
  r.peak_time = r.time_grid[static_cast<std::size_t>(it - r.metric_series.begin())];
  if (const auto pk = first_peak(r.metric_series)) {
    r.first_peak_found = true;
    r.first_peak_value = r.metric_series[*pk];
    r.first_peak_time = r.time_grid[*pk];
  }
  r.metadata["n"] = n;
  r.metadata["theta_delta"] = theta_delta;
  r.metadata["theta_r"] = theta_r;
  r.metadata["theta_c"] = theta_c;
  r.metadata["t_on"] = t_on;
  r.metadata["t_c"] = t_c;
  return r;
}

/// Holevo information of the ground states of H± read out on the last n_out qubits.
inline double ground_state_holevo(int n, const ProtocolAngles& angles, int n_out,
                                  const std::vector<double>& priors = {0.5, 0.5}) {
  if (n < 2) throw InvalidArgument("Holevo transfer needs N ≥ 2");
  if (n_out < 1 || n_out >= n) throw InvalidArgument("n_out must be in 1..N-1");
  if (priors.size() != 2) throw InvalidArgument("Holevo transfer takes two priors");
  std::vector<int> keep;
  for (int s = n - n_out + 1; s <= n; ++s) keep.push_back(s);
  std::vector<DensityMatrix> states;
  for (int sign : {1, -1})
    states.push_back(reduced_density(ground_state(build_boundary_field(n, angles, sign)), n, keep));
  return holevo_information(states, priors);
}

}  // namespace wigner
