#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "wigner/errors.hpp"
#include "wigner/exchange_catalog.hpp"
#include "wigner/instanton.hpp"
#include "wigner/spin_ops.hpp"

extern char** environ;

namespace wigner {

// Configuration grammar (INI-like):
//
//   # comment            ; comment
//   [section]
//   key = value
//
// Sections: run, material, potential, instanton, protocol, sweep. In [sweep]
// each line is `parameter = start, stop, points`. Every key is optional except
// run.pipeline and, for pipelines that solve for an equilibrium,
// potential.outer_barrier. Environment variables WQ_<SECTION>__<KEY> override
// file values (for example WQ_INSTANTON__SLICES=64).

enum class Pipeline { equilibrium, exchange, wigner_transfer, nnn, edgelock, holevo };

inline std::string to_string(Pipeline p) {
  switch (p) {
    case Pipeline::equilibrium: return "equilibrium";
    case Pipeline::exchange: return "exchange";
    case Pipeline::wigner_transfer: return "wigner-transfer";
    case Pipeline::nnn: return "nnn";
    case Pipeline::edgelock: return "edgelock";
    case Pipeline::holevo: return "holevo";
  }
  return "unknown";
}

inline std::optional<Pipeline> parse_pipeline(const std::string& s) {
  for (auto p : {Pipeline::equilibrium, Pipeline::exchange, Pipeline::wigner_transfer, Pipeline::nnn,
                 Pipeline::edgelock, Pipeline::holevo})
    if (to_string(p) == s) return p;
  return std::nullopt;
}

inline bool needs_equilibrium(Pipeline p) {
  return p == Pipeline::equilibrium || p == Pipeline::exchange || p == Pipeline::wigner_transfer;
}

struct MaterialConfig {
  double effective_mass = 0.067;  // in electron masses
  double permittivity = 12.9;     // relative
  double r_omega = 10.0;
  bool operator==(const MaterialConfig&) const = default;
};

struct PotentialConfig {
  int n_electrons = 9;
  double nu = 0.5;
  double barrier_left = 0.1;   // ħΩ
  double barrier_right = 0.1;  // ħΩ
  std::optional<double> outer_barrier;  // ħΩ
  double dot_offset_y = 0.1;
  std::optional<double> quench_from;  // left-barrier height before a quench, ħΩ
  std::vector<ProcessKind> kinds = all_process_kinds();
  bool operator==(const PotentialConfig&) const = default;
};

enum class ParityChoice { automatic, odd, even };

struct ProtocolConfig {
  ParityChoice parity = ParityChoice::automatic;
  std::string couplings_csv;  // reuse a prior exchange run
  int n_spins = 8;
  double j2 = 0.0;
  ProtocolAngles angles{};
  double t_on_offset = 0.0;
  double t_c = 1.5707963267948966;
  int n_out = 1;
  double prior_plus = 0.5;
  double horizon = 0.0;  // ≤ 0 picks the protocol default
  int points = 2000;
  bool operator==(const ProtocolConfig&) const = default;
};

struct SweepSpec {
  std::string parameter;
  double start = 0.0;
  double stop = 0.0;
  int points = 1;

  std::vector<double> values() const {
    if (points == 1) return {start};
    std::vector<double> v;
    for (int i = 0; i < points; ++i) v.push_back(start + (stop - start) * i / (points - 1));
    return v;
  }
  bool operator==(const SweepSpec&) const = default;
};

struct RunConfig {
  Pipeline pipeline = Pipeline::equilibrium;
  MaterialConfig material{};
  PotentialConfig potential{};
  InstantonConfig instanton{};
  ProtocolConfig protocol{};
  std::vector<SweepSpec> sweeps;
  std::string output_dir = "out";
  int workers = 1;
  std::uint64_t seed = 0;
  bool operator==(const RunConfig&) const = default;
};

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline const std::vector<std::string>& sweepable_parameters() {
  static const std::vector<std::string> names{
      "nu", "r_omega", "barrier_left", "barrier_right", "outer_barrier", "n_electrons", "n_spins", "j2",
      "theta_delta", "theta_r", "theta_c", "theta_m", "theta_j", "t_on_offset", "n_out", "slices", "total_time"};
  return names;
}

/// Sets one sweepable parameter; integer parameters must receive integral values.
inline void set_parameter(RunConfig& c, const std::string& name, double v) {
  auto as_int = [&](double x) {
    if (x != std::round(x)) throw InvalidArgument("parameter '" + name + "' needs an integer value");
    return static_cast<int>(x);
  };
  if (name == "nu") c.potential.nu = v;
  else if (name == "r_omega") c.material.r_omega = v;
  else if (name == "barrier_left") c.potential.barrier_left = v;
  else if (name == "barrier_right") c.potential.barrier_right = v;
  else if (name == "outer_barrier") c.potential.outer_barrier = v;
  else if (name == "n_electrons") c.potential.n_electrons = as_int(v);
  else if (name == "n_spins") c.protocol.n_spins = as_int(v);
  else if (name == "j2") c.protocol.j2 = v;
  else if (name == "theta_delta") c.protocol.angles.theta_delta = v;
  else if (name == "theta_r") c.protocol.angles.theta_r = v;
  else if (name == "theta_c") c.protocol.angles.theta_c = v;
  else if (name == "theta_m") c.protocol.angles.theta_m = v;
  else if (name == "theta_j") c.protocol.angles.theta_j = v;
  else if (name == "t_on_offset") c.protocol.t_on_offset = v;
  else if (name == "n_out") c.protocol.n_out = as_int(v);
  else if (name == "slices") c.instanton.slices = as_int(v);
  else if (name == "total_time") c.instanton.total_time = v;
  else throw InvalidArgument("unknown sweep parameter '" + name + "'");
}

namespace detail {

struct RawValue {
  std::string value;
  int line = 0;  // 0 for environment overrides
};

using RawConfig = std::map<std::string, std::map<std::string, RawValue>>;

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return s;
}

inline RawConfig read_raw(const std::string& text) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line, section;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("unterminated section header", n, t);
      section = lower(trim(t.substr(1, t.size() - 2)));
      if (section.empty()) throw ConfigError("empty section name", n, t);
      raw[section];
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", n, t);
    if (section.empty()) throw ConfigError("key outside any section", n, trim(t.substr(0, eq)));
    const std::string key = lower(trim(t.substr(0, eq)));
    if (key.empty()) throw ConfigError("empty key", n, "");
    if (raw[section].count(key)) throw ConfigError("duplicate key", n, section + "." + key);
    raw[section][key] = {trim(t.substr(eq + 1)), n};
  }
  return raw;
}

inline void apply_env(RawConfig& raw, char** env) {
  if (!env) return;
  for (char** e = env; *e; ++e) {
    const std::string entry(*e);
    if (entry.rfind("WQ_", 0) != 0) continue;
    const auto eq = entry.find('=');
    const auto sep = entry.find("__");
    if (eq == std::string::npos || sep == std::string::npos || sep > eq) continue;
    const std::string section = lower(entry.substr(3, sep - 3));
    const std::string key = lower(entry.substr(sep + 2, eq - sep - 2));
    if (section.empty() || key.empty()) continue;
    raw[section][key] = {entry.substr(eq + 1), 0};
  }
}

class Reader {
 public:
  Reader(RawConfig raw) : raw_(std::move(raw)) {}

  bool has(const std::string& s, const std::string& k) const {
    auto it = raw_.find(s);
    return it != raw_.end() && it->second.count(k);
  }

  const RawValue& get(const std::string& s, const std::string& k) {
    used_[s].push_back(k);
    return raw_.at(s).at(k);
  }

  template <class T, class Check>
  void read(const std::string& s, const std::string& k, T& dst, Check check, const char* requirement) {
    if (!has(s, k)) return;
    const RawValue& rv = get(s, k);
    T v = parse<T>(rv, s + "." + k);
    if (!check(v)) throw ConfigError(std::string("value out of range: ") + requirement, rv.line, s + "." + k);
    dst = v;
  }

  template <class T>
  void read(const std::string& s, const std::string& k, T& dst) {
    read(s, k, dst, [](const T&) { return true; }, "");
  }

  void check_unknown() const {
    for (const auto& [s, keys] : raw_) {
      auto u = used_.find(s);
      for (const auto& [k, rv] : keys) {
        const bool used = u != used_.end() && std::find(u->second.begin(), u->second.end(), k) != u->second.end();
        if (!used) throw ConfigError("unknown key", rv.line, s + "." + k);
      }
    }
  }

  const RawConfig& raw() const { return raw_; }
  void mark_used(const std::string& s, const std::string& k) { used_[s].push_back(k); }

  template <class T>
  static T parse(const RawValue& rv, const std::string& field) {
    const std::string& v = rv.value;
    if constexpr (std::is_same_v<T, std::string>) {
      return v;
    } else if constexpr (std::is_same_v<T, bool>) {
      const std::string l = lower(v);
      if (l == "true" || l == "1" || l == "yes") return true;
      if (l == "false" || l == "0" || l == "no") return false;
      throw ConfigError("expected a boolean", rv.line, field);
    } else if constexpr (std::is_integral_v<T>) {
      std::size_t pos = 0;
      long long x = 0;
      try {
        x = std::stoll(v, &pos);
      } catch (const std::exception&) {
        throw ConfigError("expected an integer", rv.line, field);
      }
      if (pos != v.size()) throw ConfigError("expected an integer", rv.line, field);
      return static_cast<T>(x);
    } else {
      std::size_t pos = 0;
      double x = 0;
      try {
        x = std::stod(v, &pos);
      } catch (const std::exception&) {
        throw ConfigError("expected a number", rv.line, field);
      }
      if (pos != v.size() || !std::isfinite(x)) throw ConfigError("expected a finite number", rv.line, field);
      return x;
    }
  }

 private:
  RawConfig raw_;
  std::map<std::string, std::vector<std::string>> used_;
};

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

}  // namespace detail

/// Parses configuration text, applying `env` overrides (pass nullptr to skip them).
///
/// `forced` supplies the pipeline from outside the file (the CLI subcommand);
/// run.pipeline then becomes optional but must agree when present.
inline RunConfig parse_config(const std::string& text, char** env = nullptr,
                              std::optional<Pipeline> forced = std::nullopt) {
  using detail::Reader;
  auto raw = detail::read_raw(text);
  detail::apply_env(raw, env);
  static const std::vector<std::string> sections{"run", "material", "potential", "instanton", "protocol", "sweep"};
  for (const auto& [s, keys] : raw)
    if (std::find(sections.begin(), sections.end(), s) == sections.end()) {
      const int line = keys.empty() ? 0 : keys.begin()->second.line;
      throw ConfigError("unknown section", line, s);
    }
  Reader r(std::move(raw));
  RunConfig c;
  auto positive = [](double v) { return v > 0.0; };
  auto non_negative = [](double v) { return v >= 0.0; };

  if (r.has("run", "pipeline")) {
    const auto& rv = r.get("run", "pipeline");
    const auto p = parse_pipeline(rv.value);
    if (!p) throw ConfigError("unknown pipeline '" + rv.value + "'", rv.line, "run.pipeline");
    if (forced && *forced != *p)
      throw ConfigError("pipeline conflicts with '" + to_string(*forced) + "'", rv.line, "run.pipeline");
    c.pipeline = *p;
  } else if (forced) {
    c.pipeline = *forced;
  } else {
    throw ConfigError("missing required field", 0, "run.pipeline");
  }
  r.read("run", "output_dir", c.output_dir, [](const std::string& s) { return !s.empty(); }, "non-empty");
  r.read("run", "workers", c.workers, [](int v) { return v >= 1; }, ">= 1");
  r.read("run", "seed", c.seed);

  r.read("material", "effective_mass", c.material.effective_mass, positive, "> 0");
  r.read("material", "permittivity", c.material.permittivity, positive, "> 0");
  r.read("material", "r_omega", c.material.r_omega, positive, "> 0");

  r.read("potential", "n_electrons", c.potential.n_electrons, [](int v) { return v >= 3; }, ">= 3");
  r.read("potential", "nu", c.potential.nu, positive, "> 0");
  r.read("potential", "barrier_left", c.potential.barrier_left, non_negative, ">= 0");
  r.read("potential", "barrier_right", c.potential.barrier_right, non_negative, ">= 0");
  if (r.has("potential", "outer_barrier")) {
    double h0 = 0.0;
    r.read("potential", "outer_barrier", h0, non_negative, ">= 0");
    c.potential.outer_barrier = h0;
  }
  r.read("potential", "dot_offset_y", c.potential.dot_offset_y, non_negative, ">= 0");
  if (r.has("potential", "quench_from")) {
    double q = 0.0;
    r.read("potential", "quench_from", q, non_negative, ">= 0");
    c.potential.quench_from = q;
  }
  if (r.has("potential", "kinds")) {
    const auto& rv = r.get("potential", "kinds");
    c.potential.kinds.clear();
    for (const auto& k : detail::split_list(rv.value)) {
      try {
        c.potential.kinds.push_back(parse_kind(k));
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what(), rv.line, "potential.kinds");
      }
    }
    if (c.potential.kinds.empty()) throw ConfigError("no process kinds listed", rv.line, "potential.kinds");
  }

  r.read("instanton", "slices", c.instanton.slices, [](int v) { return v >= 2; }, ">= 2");
  r.read("instanton", "total_time", c.instanton.total_time, positive, "> 0");
  r.read("instanton", "step_size0", c.instanton.step_size0, positive, "> 0");
  r.read("instanton", "grad_tol", c.instanton.grad_tol, positive, "> 0");
  r.read("instanton", "point_tol", c.instanton.point_tol, positive, "> 0");
  r.read("instanton", "max_iters", c.instanton.max_iters, [](int v) { return v >= 1; }, ">= 1");
  r.read("instanton", "max_step", c.instanton.max_step, positive, "> 0");

  if (r.has("protocol", "parity")) {
    const auto& rv = r.get("protocol", "parity");
    if (rv.value == "auto") c.protocol.parity = ParityChoice::automatic;
    else if (rv.value == "odd") c.protocol.parity = ParityChoice::odd;
    else if (rv.value == "even") c.protocol.parity = ParityChoice::even;
    else throw ConfigError("expected auto, odd or even", rv.line, "protocol.parity");
  }
  r.read("protocol", "couplings_csv", c.protocol.couplings_csv);
  r.read("protocol", "n_spins", c.protocol.n_spins, [](int v) { return v >= 2 && v <= max_qubits; }, "2..14");
  r.read("protocol", "j2", c.protocol.j2);
  r.read("protocol", "theta_delta", c.protocol.angles.theta_delta);
  r.read("protocol", "theta_r", c.protocol.angles.theta_r);
  r.read("protocol", "theta_c", c.protocol.angles.theta_c);
  r.read("protocol", "theta_m", c.protocol.angles.theta_m);
  r.read("protocol", "theta_j", c.protocol.angles.theta_j);
  r.read("protocol", "b1", c.protocol.angles.b1);
  r.read("protocol", "t_on_offset", c.protocol.t_on_offset);
  r.read("protocol", "t_c", c.protocol.t_c, positive, "> 0");
  r.read("protocol", "n_out", c.protocol.n_out, [](int v) { return v >= 1; }, ">= 1");
  r.read("protocol", "prior_plus", c.protocol.prior_plus, [](double v) { return v >= 0.0 && v <= 1.0; }, "0..1");
  r.read("protocol", "horizon", c.protocol.horizon);
  r.read("protocol", "points", c.protocol.points, [](int v) { return v >= 3; }, ">= 3");

  if (r.raw().count("sweep")) {
    // Keep file order so the sweep nesting matches what was written; env overrides go last.
    std::vector<std::pair<std::string, detail::RawValue>> entries(r.raw().at("sweep").begin(),
                                                                  r.raw().at("sweep").end());
    std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
      const int la = a.second.line ? a.second.line : 1 << 30, lb = b.second.line ? b.second.line : 1 << 30;
      return la < lb;
    });
    for (const auto& [key, rv] : entries) {
      const std::string field = "sweep." + key;
      const auto& names = sweepable_parameters();
      if (std::find(names.begin(), names.end(), key) == names.end())
        throw ConfigError("unknown sweep parameter", rv.line, field);
      const auto parts = detail::split_list(rv.value);
      if (parts.size() != 3) throw ConfigError("expected 'start, stop, points'", rv.line, field);
      SweepSpec s;
      s.parameter = key;
      s.start = Reader::parse<double>({parts[0], rv.line}, field);
      s.stop = Reader::parse<double>({parts[1], rv.line}, field);
      s.points = Reader::parse<int>({parts[2], rv.line}, field);
      if (s.points < 1) throw ConfigError("value out of range: points >= 1", rv.line, field);
      if (s.stop < s.start) throw ConfigError("value out of range: stop >= start", rv.line, field);
      c.sweeps.push_back(s);
    }
    for (const auto& s : c.sweeps) r.mark_used("sweep", s.parameter);
  }

  r.check_unknown();
  if (needs_equilibrium(c.pipeline) && !c.potential.outer_barrier &&
      !(c.pipeline == Pipeline::wigner_transfer && !c.protocol.couplings_csv.empty()))
    throw ConfigError("missing required field", 0, "potential.outer_barrier");
  if (c.protocol.n_out >= c.protocol.n_spins && c.pipeline == Pipeline::holevo)
    throw ConfigError("value out of range: n_out < n_spins", 0, "protocol.n_out");
  return c;
}

/// Parses with overrides from the process environment.
inline RunConfig parse_config_with_env(const std::string& text, std::optional<Pipeline> forced = std::nullopt) {
  return parse_config(text, environ, forced);
}

inline std::string serialize_config(const RunConfig& c) {
  std::ostringstream o;
  auto d = format_double;
  o << "[run]\n";
  o << "pipeline = " << to_string(c.pipeline) << "\n";
  o << "output_dir = " << c.output_dir << "\n";
  o << "workers = " << c.workers << "\n";
  o << "seed = " << c.seed << "\n\n";
  o << "[material]\n";
  o << "effective_mass = " << d(c.material.effective_mass) << "\n";
  o << "permittivity = " << d(c.material.permittivity) << "\n";
  o << "r_omega = " << d(c.material.r_omega) << "\n\n";
  o << "[potential]\n";
  o << "n_electrons = " << c.potential.n_electrons << "\n";
  o << "nu = " << d(c.potential.nu) << "\n";
  o << "barrier_left = " << d(c.potential.barrier_left) << "\n";
  o << "barrier_right = " << d(c.potential.barrier_right) << "\n";
  if (c.potential.outer_barrier) o << "outer_barrier = " << d(*c.potential.outer_barrier) << "\n";
  o << "dot_offset_y = " << d(c.potential.dot_offset_y) << "\n";
  if (c.potential.quench_from) o << "quench_from = " << d(*c.potential.quench_from) << "\n";
  o << "kinds = ";
  for (std::size_t i = 0; i < c.potential.kinds.size(); ++i) o << (i ? ", " : "") << kind_name(c.potential.kinds[i]);
  o << "\n\n";
  o << "[instanton]\n";
  o << "slices = " << c.instanton.slices << "\n";
  o << "total_time = " << d(c.instanton.total_time) << "\n";
  o << "step_size0 = " << d(c.instanton.step_size0) << "\n";
  o << "grad_tol = " << d(c.instanton.grad_tol) << "\n";
  o << "point_tol = " << d(c.instanton.point_tol) << "\n";
  o << "max_iters = " << c.instanton.max_iters << "\n";
  o << "max_step = " << d(c.instanton.max_step) << "\n\n";
  o << "[protocol]\n";
  o << "parity = "
    << (c.protocol.parity == ParityChoice::automatic ? "auto" : c.protocol.parity == ParityChoice::odd ? "odd" : "even")
    << "\n";
  if (!c.protocol.couplings_csv.empty()) o << "couplings_csv = " << c.protocol.couplings_csv << "\n";
  o << "n_spins = " << c.protocol.n_spins << "\n";
  o << "j2 = " << d(c.protocol.j2) << "\n";
  o << "theta_delta = " << d(c.protocol.angles.theta_delta) << "\n";
  o << "theta_r = " << d(c.protocol.angles.theta_r) << "\n";
  o << "theta_c = " << d(c.protocol.angles.theta_c) << "\n";
  o << "theta_m = " << d(c.protocol.angles.theta_m) << "\n";
  o << "theta_j = " << d(c.protocol.angles.theta_j) << "\n";
  o << "b1 = " << d(c.protocol.angles.b1) << "\n";
  o << "t_on_offset = " << d(c.protocol.t_on_offset) << "\n";
  o << "t_c = " << d(c.protocol.t_c) << "\n";
  o << "n_out = " << c.protocol.n_out << "\n";
  o << "prior_plus = " << d(c.protocol.prior_plus) << "\n";
  o << "horizon = " << d(c.protocol.horizon) << "\n";
  o << "points = " << c.protocol.points << "\n";
  if (!c.sweeps.empty()) {
    o << "\n[sweep]\n";
    for (const auto& s : c.sweeps) o << s.parameter << " = " << d(s.start) << ", " << d(s.stop) << ", " << s.points << "\n";
  }
  return o.str();
}

/// Cartesian product of the sweeps, first sweep varying slowest.
inline std::vector<std::vector<std::pair<std::string, double>>> sweep_points(const std::vector<SweepSpec>& sweeps) {
  std::vector<std::vector<std::pair<std::string, double>>> pts{{}};
  for (const auto& s : sweeps) {
    std::vector<std::vector<std::pair<std::string, double>>> next;
    for (const auto& p : pts)
      for (double v : s.values()) {
        auto q = p;
        q.emplace_back(s.parameter, v);
        next.push_back(std::move(q));
      }
    pts = std::move(next);
  }
  return pts;
}

}  // namespace wigner
