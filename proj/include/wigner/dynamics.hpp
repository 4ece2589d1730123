#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wigner/errors.hpp"
#include "wigner/spin_ops.hpp"

namespace wigner {

using StateVector = Eigen::VectorXcd;
using DensityMatrix = Eigen::MatrixXcd;

inline constexpr double degeneracy_tolerance = 1e-9;
inline constexpr double degeneracy_field = 1e-6;

/// Computational basis state |b⟩ on n qubits.
inline StateVector basis_state(Basis b, int n) {
  check_qubits(n);
  StateVector v = StateVector::Zero(Eigen::Index{1} << n);
  v(b) = 1.0;
  return v;
}

/// Basis state from a string of '0'/'1' (or 'u'/'d'), site 1 first.
inline StateVector basis_state(const std::string& bits) {
  Basis b = 0;
  for (char ch : bits) {
    b <<= 1;
    if (ch == '1' || ch == 'd') b |= 1u;
    else if (ch != '0' && ch != 'u') throw InvalidArgument("basis string must contain 0/1 or u/d");
  }
  return basis_state(b, static_cast<int>(bits.size()));
}

/// Tensor product with `a` on the leading (more significant) qubits.
inline StateVector kron(const StateVector& a, const StateVector& b) {
  StateVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

/// (|01⟩ − |10⟩)/√2.
inline StateVector singlet() {
  StateVector s = StateVector::Zero(4);
  s(1) = 1.0 / std::numbers::sqrt2;
  s(2) = -1.0 / std::numbers::sqrt2;
  return s;
}

/// Inserts qubit state `q` (length 2) at `site` of an (n−1)-qubit state to give n qubits.
inline StateVector insert_qubit(const StateVector& rest, const StateVector& q, int site, int n) {
  check_site(site, n);
  if (rest.size() != (Eigen::Index{1} << (n - 1)) || q.size() != 2)
    throw InvalidArgument("insert_qubit dimension mismatch");
  const int low = n - site;  // bits below the inserted one
  StateVector out(Eigen::Index{1} << n);
  for (Eigen::Index r = 0; r < rest.size(); ++r) {
    const Eigen::Index hi = r >> low, lo = r & ((Eigen::Index{1} << low) - 1);
    for (int v = 0; v < 2; ++v) out((((hi << 1) | v) << low) | lo) = q(v) * rest(r);
  }
  return out;
}

/// H|ψ⟩ without forming the matrix.
inline StateVector apply(const SpinHamiltonian& h, const StateVector& psi) {
  if (psi.size() != (Eigen::Index{1} << h.n_qubits())) throw InvalidArgument("state dimension mismatch");
  StateVector out = StateVector::Zero(psi.size());
  for (Eigen::Index b = 0; b < psi.size(); ++b) {
    if (psi(b) == cplx(0.0)) continue;
    h.apply(static_cast<Basis>(b), [&](Basis to, double amp) { out(to) += amp * psi(b); });
  }
  return out;
}

/// Eigen-decomposition organised by S_z sector when the Hamiltonian conserves it.
class SpectralDecomposition {
 public:
  struct Block {
    std::vector<Basis> basis;
    Eigen::VectorXd values;
    Eigen::MatrixXd real_vectors;     // used when the block is real
    Eigen::MatrixXcd complex_vectors;  // used otherwise
    bool real = true;
  };

  /// Diagonalises every sector, or only those where `support` has weight.
  static SpectralDecomposition of(const SpinHamiltonian& h, const StateVector* support = nullptr,
                                  bool vectors = true) {
    SpectralDecomposition sd(h.n_qubits(), vectors);
    for (auto& basis : sectors(h.n_qubits(), h.conserves_sz())) {
      if (support && !has_weight(*support, basis)) continue;
      Block blk;
      blk.basis = std::move(basis);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.block(blk.basis), options(vectors));
      blk.values = es.eigenvalues();
      if (vectors) blk.real_vectors = es.eigenvectors();
      sd.blocks_.push_back(std::move(blk));
    }
    sd.finish();
    return sd;
  }

  static SpectralDecomposition of(const SpinOperatorMatrix& h, const StateVector* support = nullptr,
                                  bool vectors = true) {
    const int n = h.n_qubits();
    const Eigen::MatrixXcd& m = h.matrix();
    bool conserving = true;
    for (Eigen::Index j = 0; j < m.cols() && conserving; ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        if (m(i, j) != cplx(0.0) && std::popcount(static_cast<Basis>(i)) != std::popcount(static_cast<Basis>(j))) {
          conserving = false;
          break;
        }
    SpectralDecomposition sd(n, vectors);
    for (auto& basis : sectors(n, conserving)) {
      if (support && !has_weight(*support, basis)) continue;
      Block blk;
      blk.basis = std::move(basis);
      const Eigen::Index d = static_cast<Eigen::Index>(blk.basis.size());
      Eigen::MatrixXcd sub(d, d);
      for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < d; ++i) sub(i, j) = m(blk.basis[i], blk.basis[j]);
      blk.real = sub.imag().cwiseAbs().maxCoeff() == 0.0;
      if (blk.real) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub.real(), options(vectors));
        blk.values = es.eigenvalues();
        if (vectors) blk.real_vectors = es.eigenvectors();
      } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sub, options(vectors));
        blk.values = es.eigenvalues();
        if (vectors) blk.complex_vectors = es.eigenvectors();
      }
      sd.blocks_.push_back(std::move(blk));
    }
    sd.finish();
    return sd;
  }

  int n_qubits() const { return n_; }
  bool has_vectors() const { return vectors_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  /// All computed eigenvalues, ascending.
  const Eigen::VectorXd& eigenvalues() const { return values_; }

  /// The k-th lowest eigenpair over all computed blocks.
  std::pair<double, StateVector> eigenpair(Eigen::Index k) const {
    if (!vectors_) throw InvalidArgument("decomposition was computed without eigenvectors");
    const auto [b, i] = order_.at(static_cast<std::size_t>(k));
    const Block& blk = blocks_[b];
    StateVector v = StateVector::Zero(Eigen::Index{1} << n_);
    for (std::size_t r = 0; r < blk.basis.size(); ++r)
      v(blk.basis[r]) = blk.real ? cplx(blk.real_vectors(r, i)) : blk.complex_vectors(r, i);
    return {blk.values(i), v};
  }

  /// e^{−iHt}|ψ⟩; ψ must lie in the computed blocks.
  StateVector evolve(const StateVector& psi, double t) const;

 private:
  SpectralDecomposition(int n, bool vectors) : n_(n), vectors_(vectors) {}

  static int options(bool vectors) { return vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly; }

  static std::vector<std::vector<Basis>> sectors(int n, bool by_popcount) {
    const Basis dim = Basis{1} << n;
    std::vector<std::vector<Basis>> out(by_popcount ? n + 1 : 1);
    for (Basis b = 0; b < dim; ++b) out[by_popcount ? std::popcount(b) : 0].push_back(b);
    return out;
  }

  static bool has_weight(const StateVector& psi, const std::vector<Basis>& basis) {
    return std::any_of(basis.begin(), basis.end(), [&](Basis b) { return psi(b) != cplx(0.0); });
  }

  void finish() {
    order_.clear();
    for (std::size_t b = 0; b < blocks_.size(); ++b)
      for (Eigen::Index i = 0; i < blocks_[b].values.size(); ++i) order_.emplace_back(b, i);
    std::stable_sort(order_.begin(), order_.end(), [&](auto x, auto y) {
      return blocks_[x.first].values(x.second) < blocks_[y.first].values(y.second);
    });
    values_.resize(static_cast<Eigen::Index>(order_.size()));
    for (std::size_t k = 0; k < order_.size(); ++k)
      values_(static_cast<Eigen::Index>(k)) = blocks_[order_[k].first].values(order_[k].second);
  }

  int n_;
  bool vectors_;
  std::vector<Block> blocks_;
  std::vector<std::pair<std::size_t, Eigen::Index>> order_;
  Eigen::VectorXd values_;
};

/// Precomputed eigen-coefficients of one initial state, reused for every time.
class Propagator {
 public:
  Propagator(const SpectralDecomposition& sd, const StateVector& psi0) : sd_(&sd) {
    if (!sd.has_vectors()) throw InvalidArgument("decomposition was computed without eigenvectors");
    if (psi0.size() != (Eigen::Index{1} << sd.n_qubits())) throw InvalidArgument("state dimension mismatch");
    double covered = 0.0;
    for (std::size_t b = 0; b < sd.blocks().size(); ++b) {
      const auto& blk = sd.blocks()[b];
      const Eigen::Index d = static_cast<Eigen::Index>(blk.basis.size());
      Eigen::VectorXcd local(d);
      for (Eigen::Index r = 0; r < d; ++r) local(r) = psi0(blk.basis[r]);
      const double w = local.squaredNorm();
      if (w == 0.0) continue;
      covered += w;
      coeffs_.emplace_back(b, blk.real ? Eigen::VectorXcd(blk.real_vectors.transpose() * local)
                                       : Eigen::VectorXcd(blk.complex_vectors.adjoint() * local));
    }
    if (std::abs(covered - psi0.squaredNorm()) > 1e-12 * std::max(1.0, psi0.squaredNorm()))
      throw InvalidArgument("state has weight outside the diagonalised sectors");
  }

  StateVector at(double t) const {
    StateVector out = StateVector::Zero(Eigen::Index{1} << sd_->n_qubits());
    for (const auto& [b, c] : coeffs_) {
      const auto& blk = sd_->blocks()[b];
      Eigen::VectorXcd phased(c.size());
      for (Eigen::Index i = 0; i < c.size(); ++i) phased(i) = c(i) * std::polar(1.0, -blk.values(i) * t);
      const Eigen::VectorXcd local = blk.real ? Eigen::VectorXcd(blk.real_vectors.cast<cplx>() * phased)
                                              : Eigen::VectorXcd(blk.complex_vectors * phased);
      for (std::size_t r = 0; r < blk.basis.size(); ++r) out(blk.basis[r]) = local(static_cast<Eigen::Index>(r));
    }
    return out;
  }

 private:
  const SpectralDecomposition* sd_;
  std::vector<std::pair<std::size_t, Eigen::VectorXcd>> coeffs_;
};

inline StateVector SpectralDecomposition::evolve(const StateVector& psi, double t) const {
  return Propagator(*this, psi).at(t);
}

inline StateVector evolve(const SpinHamiltonian& h, const StateVector& psi, double t) {
  return SpectralDecomposition::of(h, &psi).evolve(psi, t);
}

inline StateVector evolve(const SpinOperatorMatrix& h, const StateVector& psi, double t) {
  if (psi.size() != h.dim()) throw InvalidArgument("state dimension mismatch");
  return SpectralDecomposition::of(h, &psi).evolve(psi, t);
}

namespace detail {
template <class H>
std::pair<double, StateVector> ground_state_impl(const H& h, double field) {
  auto sd = SpectralDecomposition::of(h);
  const auto& ev = sd.eigenvalues();
  if (ev.size() > 1 && ev(1) - ev(0) < 1e-10) {
    if constexpr (std::is_same_v<H, SpinHamiltonian>) {
      SpinHamiltonian hf = h;
      for (int k = 1; k <= h.n_qubits(); ++k) hf.add_z(field, k);
      sd = SpectralDecomposition::of(hf);
    } else {
      SpinOperatorMatrix hf = h;
      for (int k = 1; k <= h.n_qubits(); ++k) hf += field * pauli('Z', k, h.n_qubits());
      sd = SpectralDecomposition::of(hf);
    }
  }
  auto [e, v] = sd.eigenpair(0);
  return {e, v};
}
}  // namespace detail

/// Lowest eigenvector; when the lowest level is degenerate, of H + h ΣZ instead.
inline StateVector ground_state(const SpinHamiltonian& h, double field = degeneracy_field) {
  return detail::ground_state_impl(h, field).second;
}
inline StateVector ground_state(const SpinOperatorMatrix& h, double field = degeneracy_field) {
  return detail::ground_state_impl(h, field).second;
}

inline std::vector<int> checked_keep(const std::vector<int>& keep, int n) {
  if (keep.empty()) throw InvalidArgument("partial trace needs at least one kept qubit");
  std::vector<int> k = keep;
  std::sort(k.begin(), k.end());
  if (std::adjacent_find(k.begin(), k.end()) != k.end()) throw InvalidArgument("repeated kept qubit");
  for (int s : k) check_site(s, n);
  return k;
}

/// Splits basis index b into (kept index, rest index), kept sites in ascending order.
inline std::pair<Eigen::Index, Eigen::Index> split_index(Basis b, const std::vector<int>& keep, int n) {
  Eigen::Index kept = 0, rest = 0;
  std::size_t ki = 0;
  for (int site = 1; site <= n; ++site) {
    const int bit = spin_bit(b, site, n);
    if (ki < keep.size() && keep[ki] == site) {
      kept = (kept << 1) | bit;
      ++ki;
    } else {
      rest = (rest << 1) | bit;
    }
  }
  return {kept, rest};
}

/// Reduced density matrix of a pure state on the sites in `keep` (1-based).
inline DensityMatrix reduced_density(const StateVector& psi, int n, const std::vector<int>& keep) {
  const auto k = checked_keep(keep, n);
  if (psi.size() != (Eigen::Index{1} << n)) throw InvalidArgument("state dimension mismatch");
  const int nk = static_cast<int>(k.size());
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(Eigen::Index{1} << nk, Eigen::Index{1} << (n - nk));
  for (Eigen::Index b = 0; b < psi.size(); ++b) {
    const auto [ki, ri] = split_index(static_cast<Basis>(b), k, n);
    m(ki, ri) = psi(b);
  }
  return m * m.adjoint();
}

/// Partial trace of a density matrix, keeping `keep` (1-based).
inline DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep) {
  const Eigen::Index dim = rho.rows();
  if (dim != rho.cols() || dim < 2 || (dim & (dim - 1)) != 0)
    throw InvalidArgument("density matrix dimension must be a power of two");
  const int n = std::countr_zero(static_cast<std::uint64_t>(dim));
  const auto k = checked_keep(keep, n);
  const int nk = static_cast<int>(k.size());
  DensityMatrix out = DensityMatrix::Zero(Eigen::Index{1} << nk, Eigen::Index{1} << nk);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> split(static_cast<std::size_t>(dim));
  for (Eigen::Index b = 0; b < dim; ++b) split[b] = split_index(static_cast<Basis>(b), k, n);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j)
      if (split[i].second == split[j].second) out(split[i].first, split[j].first) += rho(i, j);
  return out;
}

inline void validate_density(const DensityMatrix& rho, double tol = 1e-8) {
  if (rho.rows() != rho.cols()) throw InvalidArgument("density matrix must be square");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol) throw InvalidArgument("density matrix is not Hermitian");
  if (std::abs(rho.trace() - cplx(1.0)) > tol) throw InvalidArgument("density matrix trace is not 1");
  const Eigen::MatrixXcd herm = 0.5 * (rho + rho.adjoint());
  if (Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(herm, Eigen::EigenvaluesOnly).eigenvalues()(0) < -tol)
    throw InvalidArgument("density matrix is not positive semidefinite");
}

/// Entanglement fidelity of the qubit channel input_site → output_site.
///
/// `spectators` is the initial state of the other n−1 qubits, in site order.
/// A reference qubit maximally entangled with the input is carried through
/// implicitly by evolving the |0⟩ and |1⟩ branches separately.
class ChannelFidelity {
 public:
  ChannelFidelity(const SpectralDecomposition& sd, int input_site, int output_site, const StateVector& spectators)
      : n_(sd.n_qubits()), out_(output_site) {
    check_site(input_site, n_);
    check_site(output_site, n_);
    if (input_site == output_site) throw InvalidArgument("input and output sites must differ");
    for (int v = 0; v < 2; ++v) {
      StateVector q = StateVector::Zero(2);
      q(v) = 1.0;
      branches_.emplace_back(sd, insert_qubit(spectators, q, input_site, n_));
    }
  }

  double entanglement_fidelity(double t) const {
    const StateVector a = branches_[0].at(t), b = branches_[1].at(t);
    const int shift = n_ - out_;
    cplx acc = 0.0;
    double sum = 0.0;
    // φ(rest) = ψ_0(out=0, rest) + ψ_1(out=1, rest); F_e = ‖φ‖²/4.
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if ((i >> shift) & 1) continue;
      const Eigen::Index j = i | (Eigen::Index{1} << shift);
      acc = a(i) + b(j);
      sum += std::norm(acc);
    }
    return 0.25 * sum;
  }

  double average_fidelity(double t) const { return (2.0 * entanglement_fidelity(t) + 1.0) / 3.0; }

 private:
  int n_, out_;
  std::vector<Propagator> branches_;
};

inline double average_fidelity(const SpinOperatorMatrix& h, int input_site, int output_site,
                               const StateVector& spectators, double t) {
  const auto sd = SpectralDecomposition::of(h);
  return ChannelFidelity(sd, input_site, output_site, spectators).average_fidelity(t);
}

inline double average_fidelity(const SpinHamiltonian& h, int input_site, int output_site,
                               const StateVector& spectators, double t) {
  const auto sd = SpectralDecomposition::of(h);
  return ChannelFidelity(sd, input_site, output_site, spectators).average_fidelity(t);
}

/// Wootters concurrence of a two-qubit state.
inline double concurrence(const DensityMatrix& rho) {
  if (rho.rows() != 4) throw InvalidArgument("concurrence needs a two-qubit density matrix");
  validate_density(rho);
  Eigen::Matrix4cd yy = Eigen::Matrix4cd::Zero();
  yy(0, 3) = -1.0;
  yy(1, 2) = 1.0;
  yy(2, 1) = 1.0;
  yy(3, 0) = -1.0;
  const Eigen::Matrix4cd r = 0.5 * (rho + rho.adjoint());
  const Eigen::Matrix4cd tilde = yy * r.conjugate() * yy;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(r);
  const Eigen::Vector4d s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::Matrix4cd sq = es.eigenvectors() * s.asDiagonal() * es.eigenvectors().adjoint();
  const Eigen::Matrix4cd m = sq * tilde * sq;
  Eigen::Vector4d l = Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd>(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly)
                          .eigenvalues()
                          .cwiseMax(0.0)
                          .cwiseSqrt();
  std::sort(l.data(), l.data() + 4, std::greater<>());
  return std::clamp(l(0) - l(1) - l(2) - l(3), 0.0, 1.0);
}

inline double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

inline double entanglement_of_formation_from_concurrence(double c) {
  return binary_entropy(0.5 * (1.0 + std::sqrt(std::max(0.0, 1.0 - c * c))));
}

inline double entanglement_of_formation(const DensityMatrix& rho) {
  return entanglement_of_formation_from_concurrence(concurrence(rho));
}

/// S(ρ) in bits.
inline double von_neumann_entropy(const DensityMatrix& rho) {
  const Eigen::MatrixXcd h = 0.5 * (rho + rho.adjoint());
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(h, Eigen::EigenvaluesOnly).eigenvalues();
  double s = 0.0;
  for (double p : ev)
    if (p > 1e-15) s -= p * std::log2(p);
  return std::max(0.0, s);
}

/// χ = S(Σ p ρ) − Σ p S(ρ), in bits.
inline double holevo_information(const std::vector<DensityMatrix>& states, const std::vector<double>& probs) {
  if (states.empty() || states.size() != probs.size()) throw InvalidArgument("states and priors must match");
  double total = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw InvalidArgument("priors must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-10) throw InvalidArgument("priors must sum to 1");
  DensityMatrix avg = DensityMatrix::Zero(states[0].rows(), states[0].cols());
  double mixed = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i].rows() != avg.rows()) throw InvalidArgument("states must share a dimension");
    avg += probs[i] * states[i];
    mixed += probs[i] * von_neumann_entropy(states[i]);
  }
  return std::max(0.0, von_neumann_entropy(avg) - mixed);
}

/// Distinct energy levels, merging eigenvalues closer than the degeneracy tolerance.
inline std::vector<double> energy_levels(const Eigen::VectorXd& ascending) {
  std::vector<double> levels;
  for (double e : ascending)
    if (levels.empty() || e - levels.back() > degeneracy_tolerance) levels.push_back(e);
  return levels;
}

inline double energy_gap(const SpectralDecomposition& sd) {
  const auto levels = energy_levels(sd.eigenvalues());
  return levels.size() < 2 ? 0.0 : levels[1] - levels[0];
}

inline double energy_gap(const SpinHamiltonian& h) { return energy_gap(SpectralDecomposition::of(h, nullptr, false)); }
inline double energy_gap(const SpinOperatorMatrix& h) {
  return energy_gap(SpectralDecomposition::of(h, nullptr, false));
}

/// Eigenstates with energy within ⟨H⟩ ± ΔE of `state`, ΔE = √(⟨H²⟩ − ⟨H⟩²).
inline int count_states_in_window(const SpinHamiltonian& h, const StateVector& state,
                                  const SpectralDecomposition* sd = nullptr) {
  const StateVector hpsi = apply(h, state);
  const double norm2 = state.squaredNorm();
  const double mean = state.dot(hpsi).real() / norm2;
  const double var = std::max(0.0, hpsi.squaredNorm() / norm2 - mean * mean);
  const double width = std::sqrt(var) + degeneracy_tolerance;
  std::optional<SpectralDecomposition> own;
  if (!sd) sd = &own.emplace(SpectralDecomposition::of(h, nullptr, false));
  int count = 0;
  for (double e : sd->eigenvalues())
    if (std::abs(e - mean) <= width) ++count;
  return count;
}

/// |ψ⁻⟩^{⊗n/2} on pairs (1,2), (3,4), ...
inline StateVector dimer_state(int n) {
  if (n < 2 || n % 2 != 0) throw InvalidArgument("dimer state needs an even number of sites");
  StateVector v = singlet();
  for (int k = 2; k < n; k += 2) v = kron(v, singlet());
  return v;
}

inline double dimerization(const StateVector& psi, int n) {
  const StateVector d = dimer_state(n);
  if (psi.size() != d.size()) throw InvalidArgument("state dimension mismatch");
  return std::norm(d.dot(psi));
}

}  // namespace wigner
