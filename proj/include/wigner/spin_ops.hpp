#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wigner/errors.hpp"
#include "wigner/exchange_catalog.hpp"
#include "wigner/fluctuation.hpp"

namespace wigner {

using cplx = std::complex<double>;
using Basis = std::uint32_t;

inline constexpr int max_qubits = 14;

// Qubit k (1-based) is bit n−k of the basis index, so site 1 is the most
// significant bit. Bit value 0 is |↑⟩ with Z = +1.
inline int bit_of(int site, int n) { return n - site; }
inline int spin_bit(Basis b, int site, int n) { return static_cast<int>((b >> bit_of(site, n)) & 1u); }

inline void check_qubits(int n) {
  if (n < 1 || n > max_qubits)
    throw InvalidArgument("qubit count " + std::to_string(n) + " outside 1.." + std::to_string(max_qubits));
}

inline void check_site(int site, int n) {
  if (site < 1 || site > n)
    throw InvalidArgument("site " + std::to_string(site) + " outside 1.." + std::to_string(n));
}

/// Dense operator on n qubits.
class SpinOperatorMatrix {
 public:
  SpinOperatorMatrix() = default;
  SpinOperatorMatrix(Eigen::MatrixXcd m, int n) : m_(std::move(m)), n_(n) {
    check_qubits(n);
    if (m_.rows() != (Eigen::Index{1} << n) || m_.cols() != m_.rows())
      throw InvalidArgument("operator dimension does not match 2^" + std::to_string(n));
  }

  static SpinOperatorMatrix zero(int n) {
    check_qubits(n);
    const Eigen::Index d = Eigen::Index{1} << n;
    return {Eigen::MatrixXcd::Zero(d, d), n};
  }
  static SpinOperatorMatrix identity(int n) {
    check_qubits(n);
    const Eigen::Index d = Eigen::Index{1} << n;
    return {Eigen::MatrixXcd::Identity(d, d), n};
  }

  const Eigen::MatrixXcd& matrix() const { return m_; }
  Eigen::MatrixXcd& matrix() { return m_; }
  int n_qubits() const { return n_; }
  Eigen::Index dim() const { return m_.rows(); }

  bool is_hermitian(double tol = 1e-12) const { return (m_ - m_.adjoint()).cwiseAbs().maxCoeff() <= tol; }

  SpinOperatorMatrix& operator+=(const SpinOperatorMatrix& o) { m_ += o.m_; return *this; }
  SpinOperatorMatrix& operator-=(const SpinOperatorMatrix& o) { m_ -= o.m_; return *this; }
  SpinOperatorMatrix& operator*=(cplx s) { m_ *= s; return *this; }

  friend SpinOperatorMatrix operator+(SpinOperatorMatrix a, const SpinOperatorMatrix& b) { return a += b; }
  friend SpinOperatorMatrix operator-(SpinOperatorMatrix a, const SpinOperatorMatrix& b) { return a -= b; }
  friend SpinOperatorMatrix operator*(cplx s, SpinOperatorMatrix a) { return a *= s; }
  friend SpinOperatorMatrix operator*(const SpinOperatorMatrix& a, const SpinOperatorMatrix& b) {
    return {a.m_ * b.m_, a.n_};
  }

 private:
  Eigen::MatrixXcd m_;
  int n_ = 0;
};

/// Single-qubit Pauli operator 'X', 'Y' or 'Z' on `site`.
inline SpinOperatorMatrix pauli(char which, int site, int n) {
  check_qubits(n);
  check_site(site, n);
  const Eigen::Index d = Eigen::Index{1} << n;
  const Basis mask = Basis{1} << bit_of(site, n);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
  for (Basis b = 0; b < d; ++b) {
    const bool down = b & mask;
    switch (which) {
      case 'X': m(b ^ mask, b) = 1.0; break;
      case 'Y': m(b ^ mask, b) = down ? cplx(0, -1) : cplx(0, 1); break;
      case 'Z': m(b, b) = down ? -1.0 : 1.0; break;
      default: throw InvalidArgument(std::string("unknown Pauli '") + which + "'");
    }
  }
  return {m, n};
}

/// One term of a Hamiltonian that maps basis states to basis states.
struct SpinTerm {
  enum class Kind { z, x, zz, hop, cycle };  // hop = XX + YY
  Kind kind;
  double coeff;
  std::vector<int> sites;
};

/// Real Hamiltonian stored as a list of basis-permuting terms.
///
/// Every builder here produces operators whose action on a computational
/// basis state is a single other basis state times a real amplitude, which
/// lets the dynamics code assemble S_z sectors without forming 2^n × 2^n.
class SpinHamiltonian {
 public:
  explicit SpinHamiltonian(int n) : n_(n) { check_qubits(n); }

  int n_qubits() const { return n_; }
  const std::vector<SpinTerm>& terms() const { return terms_; }

  SpinHamiltonian& add_z(double c, int k) { return add({SpinTerm::Kind::z, c, {k}}); }
  SpinHamiltonian& add_x(double c, int k) { return add({SpinTerm::Kind::x, c, {k}}); }
  SpinHamiltonian& add_zz(double c, int a, int b) { return add({SpinTerm::Kind::zz, c, {a, b}}); }
  SpinHamiltonian& add_hop(double c, int a, int b) { return add({SpinTerm::Kind::hop, c, {a, b}}); }
  /// E_ab = XX + YY + ZZ.
  SpinHamiltonian& add_exchange(double c, int a, int b) { return add_hop(c, a, b).add_zz(c, a, b); }
  SpinHamiltonian& add_cycle(double c, std::vector<int> cycle) {
    return add({SpinTerm::Kind::cycle, c, std::move(cycle)});
  }
  SpinHamiltonian& add(SpinTerm t) {
    if (t.sites.empty()) throw InvalidArgument("term without sites");
    std::set<int> seen;
    for (int s : t.sites) {
      check_site(s, n_);
      if (!seen.insert(s).second) throw InvalidArgument("repeated site in term");
    }
    if ((t.kind == SpinTerm::Kind::zz || t.kind == SpinTerm::Kind::hop) && t.sites.size() != 2)
      throw InvalidArgument("two-site term needs two sites");
    if (t.coeff != 0.0) terms_.push_back(std::move(t));
    return *this;
  }
  SpinHamiltonian& operator+=(const SpinHamiltonian& o) {
    if (o.n_ != n_) throw InvalidArgument("qubit count mismatch");
    terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
    return *this;
  }
  SpinHamiltonian& scale(double s) {
    for (auto& t : terms_) t.coeff *= s;
    return *this;
  }

  bool conserves_sz() const {
    return std::none_of(terms_.begin(), terms_.end(),
                        [](const SpinTerm& t) { return t.kind == SpinTerm::Kind::x; });
  }

  /// Calls emit(b', amplitude) for every term acting on |b⟩.
  template <class Emit>
  void apply(Basis b, Emit&& emit) const {
    for (const auto& t : terms_) {
      switch (t.kind) {
        case SpinTerm::Kind::z:
          emit(b, t.coeff * (spin_bit(b, t.sites[0], n_) ? -1.0 : 1.0));
          break;
        case SpinTerm::Kind::x:
          emit(b ^ (Basis{1} << bit_of(t.sites[0], n_)), t.coeff);
          break;
        case SpinTerm::Kind::zz:
          emit(b, t.coeff * (spin_bit(b, t.sites[0], n_) == spin_bit(b, t.sites[1], n_) ? 1.0 : -1.0));
          break;
        case SpinTerm::Kind::hop:
          if (spin_bit(b, t.sites[0], n_) != spin_bit(b, t.sites[1], n_))
            emit(b ^ (Basis{1} << bit_of(t.sites[0], n_)) ^ (Basis{1} << bit_of(t.sites[1], n_)),
                 2.0 * t.coeff);
          break;
        case SpinTerm::Kind::cycle:
          emit(permute_bits(b, t.sites), t.coeff);
          break;
      }
    }
  }

  /// Dense real matrix restricted to `basis` (which must be closed under the terms).
  Eigen::MatrixXd block(const std::vector<Basis>& basis) const {
    const Eigen::Index d = static_cast<Eigen::Index>(basis.size());
    std::vector<int> pos(std::size_t{1} << n_, -1);
    for (Eigen::Index i = 0; i < d; ++i) pos[basis[i]] = static_cast<int>(i);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
      apply(basis[j], [&](Basis to, double amp) {
        const int i = pos[to];
        if (i < 0) throw InvalidArgument("basis block is not closed under the Hamiltonian");
        m(i, j) += amp;
      });
    }
    return m;
  }

  Eigen::MatrixXd real_matrix() const {
    std::vector<Basis> all(std::size_t{1} << n_);
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Basis>(i);
    return block(all);
  }

  SpinOperatorMatrix matrix() const { return {real_matrix().cast<cplx>(), n_}; }

  /// new[c_i] = old[c_{i+1}] on the listed sites.
  Basis permute_bits(Basis b, const std::vector<int>& c) const {
    Basis out = b;
    const std::size_t len = c.size();
    for (std::size_t i = 0; i < len; ++i) {
      const int dst = bit_of(c[i], n_), src = bit_of(c[(i + 1) % len], n_);
      out = (out & ~(Basis{1} << dst)) | (((b >> src) & 1u) << dst);
    }
    return out;
  }

 private:
  int n_;
  std::vector<SpinTerm> terms_;
};

/// E_mn = X_m X_n + Y_m Y_n + Z_m Z_n.
inline SpinOperatorMatrix exchange_operator(int m, int n, int nq) {
  check_qubits(nq);
  check_site(m, nq);
  check_site(n, nq);
  if (m == n) throw InvalidArgument("exchange needs two distinct sites");
  return SpinHamiltonian(nq).add_exchange(1.0, m, n).matrix();
}

/// Permutation of spins along `cycle`: spin at c[i+1] moves to c[i].
inline SpinOperatorMatrix cycle_operator(const std::vector<int>& cycle, int nq) {
  if (cycle.size() < 2) throw InvalidArgument("a cycle needs at least two sites");
  return SpinHamiltonian(nq).add_cycle(1.0, cycle).matrix();
}

/// Υ_jklm = E_jk E_lm + E_jm E_kl − E_jl E_km.
inline SpinOperatorMatrix upsilon(int j, int k, int l, int m, int nq) {
  auto e = [nq](int a, int b) { return exchange_operator(a, b, nq); };
  return e(j, k) * e(l, m) + e(j, m) * e(k, l) - e(j, l) * e(k, m);
}

/// P_c + P_c⁻¹ written with pairwise exchange operators (for two sites, P_c itself).
///
/// The sites are given in cycle order. With `include_identity` false the
/// multiple of the identity is dropped, which leaves the dynamics unchanged.
inline SpinOperatorMatrix klein_expand(const std::vector<int>& c, int nq, bool include_identity = true) {
  const int len = static_cast<int>(c.size());
  if (len < 2 || len > 5) throw InvalidArgument("Klein expansion supports cycles of length 2..5");
  std::set<int> distinct(c.begin(), c.end());
  if (static_cast<int>(distinct.size()) != len) throw InvalidArgument("cycle sites must be distinct");
  for (int s : c) check_site(s, nq);

  auto e = [nq](int a, int b) { return exchange_operator(a, b, nq); };
  SpinOperatorMatrix sum_e = SpinOperatorMatrix::zero(nq);
  for (int a = 0; a < len; ++a)
    for (int b = a + 1; b < len; ++b) sum_e += e(c[a], c[b]);

  SpinOperatorMatrix out = SpinOperatorMatrix::zero(nq);
  double id = 0.0;
  switch (len) {
    case 2:
      out = 0.5 * e(c[0], c[1]);
      id = 0.5;
      break;
    case 3:
      out = 0.5 * sum_e;
      id = 0.5;
      break;
    case 4:
      out = 0.25 * (sum_e + upsilon(c[0], c[1], c[2], c[3], nq));
      id = 0.25;
      break;
    case 5: {
      SpinOperatorMatrix ups = SpinOperatorMatrix::zero(nq);
      for (int skip = 4; skip >= 0; --skip) {
        std::vector<int> q;
        for (int a = 0; a < 5; ++a)
          if (a != skip) q.push_back(c[a]);
        ups += upsilon(q[0], q[1], q[2], q[3], nq);
      }
      out = 0.125 * (ups + sum_e);
      id = 0.125;
      break;
    }
  }
  if (include_identity) out += id * SpinOperatorMatrix::identity(nq);
  return out;
}

/// Kinds allowed in the evolution Hamiltonian.
inline bool in_evolution_set(ProcessKind k) {
  return k == ProcessKind::pairwise1 || k == ProcessKind::pairwise2 || k == ProcessKind::ring3 ||
         k == ProcessKind::ring4 || k == ProcessKind::ring5;
}

/// Keeps the couplings that enter the evolution Hamiltonian.
inline std::vector<CouplingResult> evolution_couplings(const std::vector<CouplingResult>& all) {
  std::vector<CouplingResult> out;
  for (const auto& c : all)
    if (in_evolution_set(c.process.kind)) out.push_back(c);
  return out;
}

/// H = Σ J P_mn − Σ J_R3 (P + P⁻¹) + Σ J_R4 (P + P⁻¹) − Σ J_R5 (P + P⁻¹).
///
/// The sign of each term is −(−1)^{m_P}; pairwise terms use P alone since
/// P = P⁻¹ and A_P = 2 already counts both orientations.
inline SpinHamiltonian build_mse_hamiltonian(const std::vector<CouplingResult>& couplings, int nq) {
  SpinHamiltonian h(nq);
  for (const auto& c : couplings) {
    if (!in_evolution_set(c.process.kind))
      throw InvalidArgument("process " + c.process.id() + " is not part of the evolution Hamiltonian");
    c.process.validate(nq);
    const double coeff = -parity_sign(c.process) * c.j_over_omega;
    std::vector<int> cyc = c.process.cycle;
    h.add_cycle(coeff, cyc);
    if (cyc.size() > 2) {
      std::reverse(cyc.begin(), cyc.end());
      h.add_cycle(coeff, cyc);
    }
  }
  return h;
}

/// The same Hamiltonian assembled from Klein expansions, identity terms dropped.
inline SpinOperatorMatrix build_mse_hamiltonian_klein(const std::vector<CouplingResult>& couplings, int nq) {
  SpinOperatorMatrix h = SpinOperatorMatrix::zero(nq);
  for (const auto& c : couplings) {
    if (!in_evolution_set(c.process.kind))
      throw InvalidArgument("process " + c.process.id() + " is not part of the evolution Hamiltonian");
    const double coeff = -parity_sign(c.process) * c.j_over_omega;
    h += coeff * klein_expand(c.process.cycle, nq, false);
  }
  return h;
}

/// Open Heisenberg chain with nearest (J1) and next-nearest (J2) exchange E.
inline SpinHamiltonian build_j1j2(int n, double j1, double j2) {
  if (n < 2) throw InvalidArgument("J1-J2 chain needs at least two sites");
  SpinHamiltonian h(n);
  for (int k = 1; k + 1 <= n; ++k) h.add_exchange(j1, k, k + 1);
  for (int k = 1; k + 2 <= n; ++k) h.add_exchange(j2, k, k + 2);
  return h;
}

/// Angles for the idealised protocols, in radians.
struct ProtocolAngles {
  double theta_delta = 0.1;
  double theta_r = 0.0;
  double theta_c = 0.1;
  double theta_m = 0.1;
  double theta_j = 0.0;
  double b1 = 1.0;
  bool operator==(const ProtocolAngles&) const = default;
};

enum class XxzScope { full, release, capture };

/// Σ sinθ_Δ (XX + YY) + cosθ_Δ ZZ over neighbouring pairs, with J = 1.
///
/// The release variant is cosθ_r X_1 + sinθ_r H_xxz, the capture variant
/// cosθ_c X_N + sinθ_c H_xxz; `theta_field` supplies θ_r or θ_c.
inline SpinHamiltonian build_xxz(int n, double theta_delta, XxzScope scope = XxzScope::full,
                                 double theta_field = 0.0) {
  if (n < 2) throw InvalidArgument("XXZ chain needs at least two sites");
  SpinHamiltonian h(n);
  for (int k = 1; k < n; ++k) {
    h.add_hop(std::sin(theta_delta), k, k + 1);
    h.add_zz(std::cos(theta_delta), k, k + 1);
  }
  if (scope == XxzScope::full) return h;
  h.scale(std::sin(theta_field));
  h.add_x(std::cos(theta_field), scope == XxzScope::release ? 1 : n);
  return h;
}

/// H± = ±B Z_1 + J1 Σ_nn [sinθ_Δ (XX+YY) + cosθ_Δ ZZ] + J2 Σ_nnn [same].
///
/// J1 = sinθ_M cosθ_J, J2 = sinθ_M sinθ_J, B = b1 cosθ_M.
inline SpinHamiltonian build_boundary_field(int n, const ProtocolAngles& a, int sign) {
  if (n < 2) throw InvalidArgument("boundary-field chain needs at least two sites");
  if (sign != 1 && sign != -1) throw InvalidArgument("sign must be +1 or -1");
  const double j1 = std::sin(a.theta_m) * std::cos(a.theta_j);
  const double j2 = std::sin(a.theta_m) * std::sin(a.theta_j);
  const double sd = std::sin(a.theta_delta), cd = std::cos(a.theta_delta);
  SpinHamiltonian h(n);
  h.add_z(sign * a.b1 * std::cos(a.theta_m), 1);
  for (int k = 1; k + 1 <= n; ++k) h.add_hop(j1 * sd, k, k + 1).add_zz(j1 * cd, k, k + 1);
  for (int k = 1; k + 2 <= n; ++k) h.add_hop(j2 * sd, k, k + 2).add_zz(j2 * cd, k, k + 2);
  return h;
}

/// Σ_k Z_k.
inline SpinHamiltonian total_z(int n) {
  SpinHamiltonian h(n);
  for (int k = 1; k <= n; ++k) h.add_z(1.0, k);
  return h;
}

}  // namespace wigner
