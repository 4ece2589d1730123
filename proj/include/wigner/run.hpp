#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "wigner/config.hpp"
#include "wigner/equilibrium.hpp"
#include "wigner/fluctuation.hpp"
#include "wigner/parallel.hpp"
#include "wigner/protocols.hpp"
#include "wigner/units.hpp"

namespace wigner {

inline constexpr const char* tool_version = "1.0.0";

// CSV files start with a "# schema: <name>/<version>" line followed by a
// header row; column order is fixed per schema version.

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& schema, const std::vector<std::string>& columns)
      : out_(path), columns_(columns.size()) {
    if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out_ << "# schema: " << schema << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
  }

  CsvWriter& cell(double v) { return raw(format_double(v)); }
  CsvWriter& cell(int v) { return raw(std::to_string(v)); }
  CsvWriter& cell(const std::string& v) { return raw(v); }

  void end_row() {
    if (in_row_ != columns_) throw std::logic_error("CSV row has the wrong number of cells");
    out_ << "\n";
    in_row_ = 0;
  }

 private:
  CsvWriter& raw(const std::string& s) {
    out_ << (in_row_ ? "," : "") << s;
    ++in_row_;
    return *this;
  }
  std::ofstream out_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

inline const std::vector<std::string>& coupling_columns() {
  static const std::vector<std::string> cols{"process_id", "nu",    "eta",   "log_det_ratio",
                                             "J_over_Omega", "J_meV", "status"};
  return cols;
}
inline constexpr const char* coupling_schema = "couplings/1";

/// "J1_4_5" or "R3_2" back to a catalog process.
inline ExchangeProcess parse_process_id(const std::string& id) {
  const auto us = id.find('_');
  if (us == std::string::npos) throw InvalidArgument("malformed process id '" + id + "'");
  const ProcessKind kind = parse_kind(id.substr(0, us));
  std::vector<int> sites;
  std::stringstream ss(id.substr(us + 1));
  std::string part;
  while (std::getline(ss, part, '_')) {
    try {
      sites.push_back(std::stoi(part));
    } catch (const std::exception&) {
      throw InvalidArgument("malformed process id '" + id + "'");
    }
  }
  if (sites.empty() || (is_pairwise(kind) && sites.size() != 2) || (!is_pairwise(kind) && sites.size() != 1))
    throw InvalidArgument("malformed process id '" + id + "'");
  ExchangeProcess p = make_process(kind, sites[0]);
  if (p.id() != id) throw InvalidArgument("process id '" + id + "' does not match its kind");
  return p;
}

struct CouplingRow {
  double nu = 0.0;
  CouplingResult coupling;
};

inline void write_couplings_csv(const std::filesystem::path& path, const std::vector<CouplingRow>& rows) {
  CsvWriter w(path, coupling_schema, coupling_columns());
  for (const auto& r : rows) {
    const auto& c = r.coupling;
    w.cell(c.process.id()).cell(r.nu).cell(c.eta).cell(c.log_det_ratio).cell(c.j_over_omega).cell(c.j_mev).cell(c.status);
    w.end_row();
  }
}

inline std::vector<CouplingRow> read_couplings_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open coupling table " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != std::string("# schema: ") + coupling_schema)
    throw InvalidArgument("coupling table " + path.string() + " has schema line '" + line + "'");
  std::getline(in, line);
  std::vector<CouplingRow> rows;
  int n = 2;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != coupling_columns().size())
      throw InvalidArgument("coupling table line " + std::to_string(n) + " has " + std::to_string(f.size()) + " cells");
    CouplingRow r;
    r.coupling.process = parse_process_id(f[0]);
    r.nu = std::stod(f[1]);
    r.coupling.eta = std::stod(f[2]);
    r.coupling.log_det_ratio = std::stod(f[3]);
    r.coupling.j_over_omega = std::stod(f[4]);
    r.coupling.j_mev = std::stod(f[5]);
    r.coupling.status = f[6];
    rows.push_back(r);
  }
  return rows;
}

inline MaterialParams material_from(const RunConfig& c) {
  MaterialParams m;
  m.effective_mass = c.material.effective_mass * si::electron_mass;
  m.permittivity = c.material.permittivity * si::vacuum_permittivity;
  m.confinement_omega = omega_for_r_omega(m, c.material.r_omega);
  return m;
}

inline PotentialParams potential_from(const RunConfig& c) {
  if (!c.potential.outer_barrier) throw ConfigError("missing required field", 0, "potential.outer_barrier");
  PotentialParams p;
  p.n_electrons = c.potential.n_electrons;
  p.span = c.potential.n_electrons / c.potential.nu;
  p.dot_offset_y = c.potential.dot_offset_y;
  p.barrier_left = c.potential.barrier_left;
  p.barrier_right = c.potential.barrier_right;
  p.outer_barrier = *c.potential.outer_barrier;
  p.r_omega = c.material.r_omega;
  return p;
}

inline double y_amplitude(const ElectronConfiguration& r) {
  double a = 0.0;
  for (Eigen::Index i = 1; i < r.size(); i += 2) a = std::max(a, std::abs(r(i)));
  return a;
}

/// One configured run: a config plus the point-wise overrides of the sweep.
inline std::vector<RunConfig> expand_sweep(const RunConfig& base) {
  std::vector<RunConfig> out;
  for (const auto& pt : sweep_points(base.sweeps)) {
    RunConfig c = base;
    for (const auto& [name, v] : pt) set_parameter(c, name, v);
    out.push_back(c);
  }
  return out;
}

struct RunOutcome {
  nlohmann::json summary;
  std::vector<std::string> artifacts;
};

namespace pipelines {

inline TimeGrid grid_from(const RunConfig& c) {
  TimeGrid g;
  g.horizon = c.protocol.horizon;
  g.points = c.protocol.points;
  return g;
}

inline void write_series(const std::filesystem::path& path, const TransferResult& r, double seconds_per_unit) {
  std::vector<std::string> cols{"t", r.metric_name};
  if (seconds_per_unit > 0.0) cols.insert(cols.begin() + 1, "t_seconds");
  CsvWriter w(path, "series/1", cols);
  for (std::size_t i = 0; i < r.time_grid.size(); ++i) {
    w.cell(r.time_grid[i]);
    if (seconds_per_unit > 0.0) w.cell(r.time_grid[i] * seconds_per_unit);
    w.cell(r.metric_series[i]);
    w.end_row();
  }
}

inline RunOutcome equilibrium(const RunConfig& base, const std::filesystem::path& dir) {
  const auto points = expand_sweep(base);
  struct Point {
    ChainEquilibrium chain;
    std::optional<double> quench;
  };
  const auto results = parallel_map(points.size(), static_cast<unsigned>(base.workers), [&](std::size_t i) {
    Point p;
    const PotentialParams pp = potential_from(points[i]);
    p.chain = solve_chain(pp);
    if (points[i].potential.quench_from) p.quench = quench_metric(pp, *points[i].potential.quench_from);
    return p;
  });
  RunOutcome out;
  CsvWriter table(dir / "equilibrium.csv", "equilibrium/1",
                  {"point", "nu", "n_electrons", "barrier_left", "barrier_right", "energy_e0", "gradient_norm",
                   "y_amplitude", "barrier_pos", "dot_offset_x", "quench_d", "config_file"});
  out.artifacts.push_back("equilibrium.csv");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& c = points[i];
    const auto& ch = results[i].chain;
    const std::string file = "config_" + std::to_string(i) + ".csv";
    CsvWriter cfg(dir / file, "configuration/1", {"electron", "x", "y"});
    for (int e = 0; e < c.potential.n_electrons; ++e) {
      cfg.cell(e + 1).cell(ch.equilibrium.config(2 * e)).cell(ch.equilibrium.config(2 * e + 1));
      cfg.end_row();
    }
    out.artifacts.push_back(file);
    const double energy = -ch.params.offset;
    const double quench = results[i].quench ? *results[i].quench : std::nan("");
    table.cell(static_cast<int>(i)).cell(c.potential.nu).cell(c.potential.n_electrons).cell(c.potential.barrier_left);
    table.cell(c.potential.barrier_right).cell(energy).cell(ch.equilibrium.gradient_norm);
    table.cell(y_amplitude(ch.equilibrium.config)).cell(ch.params.barrier_pos).cell(ch.params.dot_offset_x);
    table.cell(quench).cell(file);
    table.end_row();
    nlohmann::json j{{"nu", c.potential.nu},
                     {"energy_e0", energy},
                     {"y_amplitude", y_amplitude(ch.equilibrium.config)},
                     {"barrier_pos", ch.params.barrier_pos}};
    if (results[i].quench) j["quench_d"] = *results[i].quench;
    out.summary["points"].push_back(j);
  }
  return out;
}

inline std::vector<CouplingRow> compute_coupling_rows(const RunConfig& c, const std::vector<ProcessKind>& kinds) {
  const ChainEquilibrium chain = solve_chain(potential_from(c));
  const double hbar_mev = derive_units(material_from(c), c.potential.nu).hbar_omega() / si::mev;
  const auto couplings = compute_couplings(chain, enumerate_processes(c.potential.n_electrons, kinds), c.instanton,
                                           static_cast<unsigned>(c.workers), hbar_mev);
  std::vector<CouplingRow> rows;
  for (const auto& cr : couplings) rows.push_back({c.potential.nu, cr});
  return rows;
}

inline RunOutcome exchange(const RunConfig& base, const std::filesystem::path& dir) {
  RunOutcome out;
  std::vector<CouplingRow> rows;
  for (const auto& c : expand_sweep(base)) {
    c.instanton.validate();
    const auto pr = compute_coupling_rows(c, c.potential.kinds);
    int converged = 0;
    for (const auto& r : pr) converged += r.coupling.status == "converged_minimum";
    out.summary["points"].push_back(
        {{"nu", c.potential.nu}, {"processes", pr.size()}, {"converged_minimum", converged}});
    rows.insert(rows.end(), pr.begin(), pr.end());
  }
  write_couplings_csv(dir / "couplings.csv", rows);
  out.artifacts.push_back("couplings.csv");
  return out;
}

inline RunOutcome wigner_transfer_pipeline(const RunConfig& base, const std::filesystem::path& dir) {
  RunOutcome out;
  std::vector<CouplingRow> table;
  if (!base.protocol.couplings_csv.empty()) table = read_couplings_csv(base.protocol.couplings_csv);
  CsvWriter w(dir / "wigner_transfer.csv", "wigner_transfer/1",
              {"point", "nu", "n_electrons", "first_peak_F_av", "t_opt", "t_opt_seconds", "peak_F_av", "peak_time",
               "series_file"});
  out.artifacts.push_back("wigner_transfer.csv");
  const auto points = expand_sweep(base);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& c = points[i];
    const int n = c.potential.n_electrons;
    std::vector<CouplingResult> couplings;
    if (!table.empty()) {
      for (const auto& r : table)
        if (std::abs(r.nu - c.potential.nu) <= 1e-9 * std::max(1.0, std::abs(c.potential.nu)) &&
            in_evolution_set(r.coupling.process.kind))
          couplings.push_back(r.coupling);
      if (couplings.empty())
        throw InvalidArgument("coupling table has no rows for nu = " + format_double(c.potential.nu));
    } else {
      const std::vector<ProcessKind> kinds{ProcessKind::pairwise1, ProcessKind::pairwise2, ProcessKind::ring3,
                                           ProcessKind::ring4, ProcessKind::ring5};
      for (const auto& r : compute_coupling_rows(c, kinds)) couplings.push_back(r.coupling);
    }
    for (const auto& cr : couplings) cr.process.validate(n);
    WignerTransferOptions opts;
    opts.parity = c.protocol.parity == ParityChoice::odd    ? ParityProtocol::odd
                  : c.protocol.parity == ParityChoice::even ? ParityProtocol::even
                                                            : ParityProtocol::automatic;
    opts.grid = grid_from(c);
    const TransferResult r = wigner_transfer(couplings, n, opts);
    // Couplings are in ħΩ, so one unit of evolution time is 1/Ω.
    const double seconds = 1.0 / material_from(c).confinement_omega;
    const std::string file = "series_wigner_" + std::to_string(i) + ".csv";
    write_series(dir / file, r, seconds);
    out.artifacts.push_back(file);
    w.cell(static_cast<int>(i)).cell(c.potential.nu).cell(n).cell(r.first_peak_value).cell(r.first_peak_time);
    w.cell(r.first_peak_time * seconds).cell(r.peak_value).cell(r.peak_time).cell(file);
    w.end_row();
    out.summary["points"].push_back({{"nu", c.potential.nu},
                                     {"first_peak_F_av", r.first_peak_value},
                                     {"t_opt_seconds", r.first_peak_time * seconds},
                                     {"peak_F_av", r.peak_value}});
  }
  return out;
}

inline RunOutcome nnn(const RunConfig& base, const std::filesystem::path& dir) {
  RunOutcome out;
  const auto points = expand_sweep(base);
  const auto results = parallel_map(points.size(), static_cast<unsigned>(base.workers), [&](std::size_t i) {
    return nnn_singlet_transfer(points[i].protocol.n_spins, points[i].protocol.j2, grid_from(points[i]));
  });
  CsvWriter w(dir / "nnn.csv", "nnn/1",
              {"point", "n_spins", "j2", "max1_E_f", "t_first_peak", "peak_E_f", "peak_time", "series_file"});
  out.artifacts.push_back("nnn.csv");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& c = points[i];
    const auto& r = results[i];
    const std::string file = "series_nnn_" + std::to_string(i) + ".csv";
    write_series(dir / file, r, 0.0);
    out.artifacts.push_back(file);
    w.cell(static_cast<int>(i)).cell(c.protocol.n_spins).cell(c.protocol.j2).cell(r.first_peak_value);
    w.cell(r.first_peak_time).cell(r.peak_value).cell(r.peak_time).cell(file);
    w.end_row();
    out.summary["points"].push_back(
        {{"n_spins", c.protocol.n_spins}, {"j2", c.protocol.j2}, {"max1_E_f", r.first_peak_value}});
  }
  return out;
}

inline RunOutcome edgelock(const RunConfig& base, const std::filesystem::path& dir) {
  RunOutcome out;
  const auto points = expand_sweep(base);
  struct Point {
    TransferResult release, capture;
  };
  const auto results = parallel_map(points.size(), static_cast<unsigned>(base.workers), [&](std::size_t i) {
    const auto& c = points[i];
    const auto& a = c.protocol.angles;
    Point p;
    p.release = edge_lock_release(c.protocol.n_spins, a.theta_delta, a.theta_r, grid_from(c));
    const double t_on = std::max(0.0, p.release.metadata.at("t_max") + c.protocol.t_on_offset);
    p.capture = edge_lock_capture(c.protocol.n_spins, a.theta_delta, a.theta_r, a.theta_c, t_on, c.protocol.t_c,
                                  c.protocol.points);
    return p;
  });
  CsvWriter w(dir / "edgelock.csv", "edgelock/1",
              {"point", "n_spins", "theta_delta", "theta_r", "theta_c", "F_r_first_peak", "t_max", "t_on",
               "F_c_max", "series_file"});
  out.artifacts.push_back("edgelock.csv");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& c = points[i];
    const auto& a = c.protocol.angles;
    const auto& p = results[i];
    const std::string file = "series_release_" + std::to_string(i) + ".csv";
    write_series(dir / file, p.release, 0.0);
    out.artifacts.push_back(file);
    w.cell(static_cast<int>(i)).cell(c.protocol.n_spins).cell(a.theta_delta).cell(a.theta_r).cell(a.theta_c);
    w.cell(p.release.first_peak_value).cell(p.release.metadata.at("t_max")).cell(p.capture.metadata.at("t_on"));
    w.cell(p.capture.peak_value).cell(file);
    w.end_row();
    out.summary["points"].push_back({{"n_spins", c.protocol.n_spins},
                                     {"theta_delta", a.theta_delta},
                                     {"theta_r", a.theta_r},
                                     {"F_r_first_peak", p.release.first_peak_value},
                                     {"F_c_max", p.capture.peak_value}});
  }
  return out;
}

inline RunOutcome holevo(const RunConfig& base, const std::filesystem::path& dir) {
  RunOutcome out;
  const auto points = expand_sweep(base);
  const auto chi = parallel_map(points.size(), static_cast<unsigned>(base.workers), [&](std::size_t i) {
    const auto& c = points[i];
    return ground_state_holevo(c.protocol.n_spins, c.protocol.angles, c.protocol.n_out,
                               {c.protocol.prior_plus, 1.0 - c.protocol.prior_plus});
  });
  CsvWriter w(dir / "holevo.csv", "holevo/1",
              {"point", "n_spins", "n_out", "theta_m", "theta_j", "theta_delta", "chi_bits"});
  out.artifacts.push_back("holevo.csv");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& c = points[i];
    const auto& a = c.protocol.angles;
    w.cell(static_cast<int>(i)).cell(c.protocol.n_spins).cell(c.protocol.n_out).cell(a.theta_m).cell(a.theta_j);
    w.cell(a.theta_delta).cell(chi[i]);
    w.end_row();
    out.summary["points"].push_back({{"theta_j", a.theta_j}, {"n_out", c.protocol.n_out}, {"chi_bits", chi[i]}});
  }
  return out;
}

}  // namespace pipelines

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "config_error";
  if (dynamic_cast<const InvalidArgument*>(&e)) return "invalid_argument";
  if (dynamic_cast<const CoincidentElectrons*>(&e)) return "coincident_electrons";
  if (dynamic_cast<const NonConvergence*>(&e)) return "non_convergence";
  if (dynamic_cast<const Diverged*>(&e)) return "diverged";
  if (dynamic_cast<const SaddlePoint*>(&e)) return "saddle_point";
  return "runtime_error";
}

/// Executes the configured pipeline into config.output_dir.
///
/// manifest.json is written whether or not the pipeline succeeds; on failure
/// it carries the error type and message and the return value is nonzero.
inline int run(const RunConfig& config) {
  namespace fs = std::filesystem;
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["tool"] = "wigner_cli";
  manifest["tool_version"] = tool_version;
  manifest["pipeline"] = to_string(config.pipeline);
  manifest["seed"] = config.seed;
  manifest["workers"] = config.workers;
  manifest["config"] = serialize_config(config);
  manifest["started_at"] = utc_timestamp();
  int status = 0;
  try {
    RunOutcome out;
    switch (config.pipeline) {
      case Pipeline::equilibrium: out = pipelines::equilibrium(config, dir); break;
      case Pipeline::exchange: out = pipelines::exchange(config, dir); break;
      case Pipeline::wigner_transfer: out = pipelines::wigner_transfer_pipeline(config, dir); break;
      case Pipeline::nnn: out = pipelines::nnn(config, dir); break;
      case Pipeline::edgelock: out = pipelines::edgelock(config, dir); break;
      case Pipeline::holevo: out = pipelines::holevo(config, dir); break;
    }
    out.summary["pipeline"] = to_string(config.pipeline);
    std::ofstream(dir / "summary.json") << out.summary.dump(2) << "\n";
    out.artifacts.push_back("summary.json");
    manifest["artifacts"] = out.artifacts;
    manifest["status"] = "ok";
  } catch (const std::exception& e) {
    status = 1;
    manifest["status"] = "failed";
    manifest["error"] = {{"type", error_kind(e)}, {"message", e.what()}};
  }
  manifest["finished_at"] = utc_timestamp();
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << "\n";
  return status;
}

}  // namespace wigner
