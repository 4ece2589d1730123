// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "wigner/protocols.hpp"

using namespace wigner;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream o;
  o.precision(digits);
  o << v;
  return o.str();
}

// Shared between criteria 4 and 6.
std::map<double, std::vector<CouplingResult>> coupling_cache;

PotentialParams nine_electron_chain(double nu) {
  PotentialParams p;
  p.n_electrons = 9;
  p.span = 9.0 / nu;
  p.dot_offset_y = 0.1;
  p.barrier_left = p.barrier_right = 0.1;
  p.outer_barrier = 20.0;
  p.r_omega = 10.0;
  return p;
}

const std::vector<CouplingResult>& couplings_at(double nu, const std::vector<ProcessKind>& kinds) {
  auto it = coupling_cache.find(nu);
  if (it != coupling_cache.end()) return it->second;
  const ChainEquilibrium chain = solve_chain(nine_electron_chain(nu));
  return coupling_cache[nu] = compute_couplings(chain, enumerate_processes(9, kinds), InstantonConfig{});
}

// Harmonic oscillator moving one particle from the origin to (a, 0).
struct Oscillator {
  double omega = 0.5, a = 1.0;  // inside the soft longitudinal band of the N = 9 chain
  InstantonConfig cfg;
  ActionResult solve() const {
    ElectronConfiguration s = ElectronConfiguration::Zero(2), e = s;
    e(0) = a;
    return minimize_action(initial_path(s, e, cfg), QuadraticPotential::harmonic(omega, 2), cfg);
  }
  double continuum_action() const { return 0.5 * omega * a * a / std::tanh(omega * cfg.total_time); }
};

Outcome klein_identity() {
  std::mt19937 rng(1);
  double worst = 0.0;
  int cases = 0;
  for (int len = 2; len <= 5; ++len)
    for (int trial = 0; trial < 50; ++trial) {
      const int n = std::uniform_int_distribution<int>(len, 8)(rng);
      std::vector<int> sites(n);
      std::iota(sites.begin(), sites.end(), 1);
      std::shuffle(sites.begin(), sites.end(), rng);
      sites.resize(len);
      // Klein expansions give P + P⁻¹ for rings and P itself for a pair.
      Eigen::MatrixXcd direct = cycle_operator(sites, n).matrix();
      if (len > 2) direct += cycle_operator(std::vector<int>(sites.rbegin(), sites.rend()), n).matrix();
      const Eigen::MatrixXcd diff = klein_expand(sites, n).matrix() - direct;
      worst = std::max(worst, diff.cwiseAbs().maxCoeff());
      ++cases;
    }
  return {worst < 1e-12, std::to_string(cases) + " placements, max |diff| " + fmt(worst)};
}

Outcome action_discretization() {
  double prev = 1e300, err64 = 0.0;
  bool monotone = true;
  std::string errs;
  for (int m : {16, 32, 64, 128}) {
    Oscillator o;
    o.cfg.slices = m;
    const auto r = o.solve();
    if (r.status != ActionStatus::converged_minimum) return {false, "M = " + std::to_string(m) + " did not converge"};
    const double err = std::abs(r.eta - o.continuum_action()) / o.continuum_action();
    monotone = monotone && err < prev;
    prev = err;
    if (m == 64) err64 = err;
    errs += (errs.empty() ? "" : " ") + fmt(err, 3);
  }
  return {monotone && err64 < 0.015, "relative errors M=16..128: " + errs};
}

Outcome instanton_oracle() {
  Oscillator o;
  o.cfg.slices = 64;
  const auto r = o.solve();
  if (r.status != ActionStatus::converged_minimum) return {false, "did not converge"};
  const double dt = o.cfg.dtau();
  const double theta = std::acosh(1.0 + 0.5 * o.omega * o.omega * dt * dt);
  double bound = 0.0, dev = 0.0;
  for (int k = 0; k <= o.cfg.slices; ++k) {
    const double exact = o.a * std::sinh(o.omega * k * dt) / std::sinh(o.omega * o.cfg.total_time);
    const double discrete = o.a * std::sinh(k * theta) / std::sinh(o.cfg.slices * theta);
    bound = std::max(bound, std::abs(discrete - exact));
    dev = std::max(dev, std::abs(r.path.slices(0, k) - exact));
  }
  return {dev < 2.0 * bound, "max deviation " + fmt(dev) + ", discretization bound " + fmt(bound)};
}

Outcome coupling_mirror_symmetry() {
  const auto& cs = couplings_at(0.5, all_process_kinds());
  std::map<std::string, const CouplingResult*> by_id;
  for (const auto& c : cs) by_id[c.process.id()] = &c;
  double worst = 0.0;
  std::string worst_id;
  int unconverged = 0;
  for (const auto& c : cs) {
    unconverged += c.status != "converged_minimum";
    const auto* m = by_id.at(mirror_process(c.process, 9).id());
    const double scale = std::max(std::abs(c.j_over_omega), std::abs(m->j_over_omega));
    const double rel = scale > 0.0 ? std::abs(c.j_over_omega - m->j_over_omega) / scale : 0.0;
    if (rel > worst) worst = rel, worst_id = c.process.id();
  }
  return {worst < 1e-3 && unconverged == 0, std::to_string(cs.size()) + " processes, " +
                                                std::to_string(unconverged) + " not at a minimum, worst mirror gap " +
                                                fmt(worst) + (worst_id.empty() ? "" : " (" + worst_id + ")")};
}

Outcome structural_transition() {
  // The dot-free pass; with the dots on, the end electrons follow y0.
  auto chain = [](double nu) { return solve_chain(nine_electron_chain(nu)).first_pass.config; };
  const auto linear = chain(0.5);
  double amp = 0.0;
  for (int e = 0; e < 9; ++e) amp = std::max(amp, std::abs(linear(2 * e + 1)));
  const auto zig = chain(1.2);
  bool alternating = true;
  for (int e = 0; e + 1 < 9; ++e) alternating = alternating && zig(2 * e + 1) * zig(2 * e + 3) < 0.0;
  double worst = 0.0;
  for (double hl : {0.1, 1.0, 2.0, 3.0, 4.0, 5.0}) {
    PotentialParams p = nine_electron_chain(0.6);
    p.barrier_left = hl;
    p.barrier_right = 5.0;
    worst = std::max(worst, quench_metric(p, 5.0));
  }
  return {amp < 1e-3 && alternating && worst < 1e-2, "y-amplitude(0.5) " + fmt(amp) + ", zig-zag(1.2) " +
                                                          (alternating ? "alternating" : "not alternating") +
                                                          ", max quench metric " + fmt(worst)};
}

Outcome wigner_transfer_band() {
  const std::vector<ProcessKind> kinds{ProcessKind::pairwise1, ProcessKind::pairwise2, ProcessKind::ring3,
                                       ProcessKind::ring4, ProcessKind::ring5};
  bool above = true;
  double best = 0.0;
  std::string vals;
  for (double nu : {0.5, 0.6, 0.7, 0.8}) {
    const auto& all = couplings_at(nu, nu == 0.5 ? all_process_kinds() : kinds);
    const auto r = wigner_transfer(evolution_couplings(all), 9);
    const double f = r.first_peak_found ? r.first_peak_value : r.peak_value;
    above = above && f > 2.0 / 3.0;
    best = std::max(best, f);
    vals += (vals.empty() ? "" : " ") + fmt(f, 5);
  }
  return {above && best >= 0.8 && best <= 1.0, "first-peak F_av at nu=0.5..0.8: " + vals};
}

Outcome fidelity_monte_carlo() {
  std::mt19937 rng(7);
  std::normal_distribution<double> g;
  auto random_state = [&](int n) {
    StateVector v(Eigen::Index{1} << n);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = cplx(g(rng), g(rng));
    return StateVector(v.normalized());
  };
  double worst = 0.0;
  for (int ch = 0; ch < 10; ++ch) {
    Eigen::MatrixXcd a(8, 8);
    for (Eigen::Index i = 0; i < 64; ++i) a(i) = cplx(g(rng), g(rng));
    const SpinOperatorMatrix h(0.5 * (a + a.adjoint()), 3);
    const StateVector spect = random_state(2);
    const double t = std::uniform_real_distribution<double>(0.2, 3.0)(rng);
    const auto sd = SpectralDecomposition::of(h);
    const double formula = ChannelFidelity(sd, 1, 3, spect).average_fidelity(t);
    const int samples = 10000;
    double sum = 0.0, sum2 = 0.0;
    for (int s = 0; s < samples; ++s) {
      const StateVector q = random_state(1);
      const StateVector out = sd.evolve(insert_qubit(spect, q, 1, 3), t);
      const double f = q.dot(reduced_density(out, 3, {3}) * q).real();
      sum += f;
      sum2 += f * f;
    }
    const double mean = sum / samples;
    const double se = std::sqrt((sum2 / samples - mean * mean) / (samples - 1));
    worst = std::max(worst, std::abs(mean - formula) / se);
  }
  return {worst < 3.0, "worst deviation " + fmt(worst, 3) + " standard errors over 10 channels"};
}

Outcome nnn_curve() {
  bool ok = true;
  std::string vals;
  for (int n : {8, 9, 10, 11, 12}) {
    double e[3];
    int i = 0;
    for (double j2 : {0.0, 0.4, 0.48}) {
      const auto r = nnn_singlet_transfer(n, j2);
      e[i++] = r.first_peak_found ? r.first_peak_value : r.peak_value;
    }
    const bool excess = e[1] > e[0] && e[2] < e[1];
    ok = ok && (n % 2 == 0 ? excess : !excess);
    vals += " N=" + std::to_string(n) + ":" + fmt(e[0], 3) + "/" + fmt(e[1], 3) + "/" + fmt(e[2], 3);
  }
  return {ok, "max1 E_f at J2 = 0/0.4/0.48:" + vals};
}

Outcome edge_lock() {
  const double td = 0.1;
  double best_r = -1.0, best_f = -1.0;
  std::string vals;
  for (double tr : {0.0, 0.2, 0.4, 0.8}) {
    const double f = edge_lock_release(6, td, tr).first_peak_value;
    if (f > best_f) best_f = f, best_r = tr;
    vals += (vals.empty() ? "" : " ") + fmt(f, 3);
  }
  const auto rel = edge_lock_release(6, td, 0.0);
  const double t_max = rel.metadata.at("t_max");
  const double at = edge_lock_capture(6, td, 0.0, 0.1, t_max).peak_value;
  const double early = edge_lock_capture(6, td, 0.0, 0.1, std::max(0.0, t_max - 0.5)).peak_value;
  const double late = edge_lock_capture(6, td, 0.0, 0.1, t_max + 0.5).peak_value;
  const bool capture_ok = at > early && at > late;
  // Least-squares fit F = c/N through the origin.
  std::vector<double> ns, fs;
  for (int n = 4; n <= 10; ++n) {
    ns.push_back(n);
    fs.push_back(edge_lock_release(n, td, 0.0).first_peak_value);
  }
  double sxy = 0.0, sxx = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    sxy += fs[i] / ns[i];
    sxx += 1.0 / (ns[i] * ns[i]);
    mean += fs[i] / ns.size();
  }
  const double c = sxy / sxx;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    ss_res += std::pow(fs[i] - c / ns[i], 2);
    ss_tot += std::pow(fs[i] - mean, 2);
  }
  const double r2 = 1.0 - ss_res / ss_tot;
  std::string fr;
  for (double f : fs) fr += (fr.empty() ? "" : " ") + fmt(f, 3);
  return {best_r == 0.0 && capture_ok && r2 > 0.9,
          "F_r(theta_r=0,0.2,0.4,0.8) " + vals + "; F_c at t_max-0.5/t_max/t_max+0.5 " + fmt(early) + "/" + fmt(at) +
              "/" + fmt(late) + "; F_r(N=4..10) " + fr + ", c/N fit R^2 " + fmt(r2, 3)};
}

Outcome holevo() {
  ProtocolAngles a;
  a.theta_m = 0.1;
  a.theta_delta = 0.1;
  bool ordered = true;
  const int points = 9;
  for (int i = 0; i < points; ++i) {
    a.theta_j = 0.5 * std::numbers::pi * i / (points - 1);
    ordered = ordered && ground_state_holevo(8, a, 2) >= ground_state_holevo(8, a, 1) - 1e-12;
  }
  a.theta_j = 0.5 * std::numbers::pi;
  const double chi = ground_state_holevo(8, a, 1);
  return {ordered && chi < 0.05, std::string("chi(n_out=2) >= chi(n_out=1) ") + (ordered ? "everywhere" : "violated") +
                                     ", chi(pi/2) " + fmt(chi) + " bits"};
}

Outcome property_suite() {
  const std::string cmd = std::string("\"") + UNIT_TESTS_PATH + "\" --gtest_filter='Properties*' > /dev/null 2>&1";
  const auto t0 = std::chrono::steady_clock::now();
  const int rc = std::system(cmd.c_str());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {rc == 0 && secs < 300.0, "exit status " + std::to_string(rc) + " in " + fmt(secs, 3) + " s"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"klein_identity", klein_identity},
      {"action_discretization", action_discretization},
      {"instanton_oracle", instanton_oracle},
      {"coupling_mirror_symmetry", coupling_mirror_symmetry},
      {"structural_transition", structural_transition},
      {"wigner_transfer", wigner_transfer_band},
      {"fidelity_monte_carlo", fidelity_monte_carlo},
      {"nnn_curve", nnn_curve},
      {"edge_lock", edge_lock},
      {"holevo", holevo},
      {"property_suite", property_suite},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("criterion %zu %s: %s (%s; %.1f s)\n", i + 1, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
