#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "wigner/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Wigner-chain exchange couplings and spin-chain transfer protocols"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int workers = 0;
  long long seed = -1;
  app.add_option("--config", config_path, "configuration file (INI)")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides run.output_dir)");
  app.add_option("--workers", workers, "worker threads (overrides run.workers)")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "seed recorded in the manifest (overrides run.seed)")->check(CLI::NonNegativeNumber);
  app.fallthrough();

  for (const char* name : {"equilibrium", "exchange", "wigner-transfer", "nnn", "edgelock", "holevo"})
    app.add_subcommand(name, std::string("run the ") + name + " pipeline");

  CLI11_PARSE(app, argc, argv);
  const auto pipeline = wigner::parse_pipeline(app.get_subcommands().front()->get_name());

  std::string text;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }

  wigner::RunConfig config;
  try {
    config = wigner::parse_config_with_env(text, pipeline);
  } catch (const wigner::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  if (!out_dir.empty()) config.output_dir = out_dir;
  if (workers > 0) config.workers = workers;
  if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);

  const int status = wigner::run(config);
  if (status != 0) std::cerr << "pipeline failed; see " << config.output_dir << "/manifest.json\n";
  return status;
}
