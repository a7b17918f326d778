// cstk: command-line front end.
//
//   cstk run --config run.cfg [--out DIR] [--cadence DT]
//   cstk sweep-epsilon --config run.cfg --eps 0.1,0.05,0.025 [--out DIR] [--threads N]
//   cstk convergence heat-mode [--out DIR] [--threads N]
//   cstk audit --out DIR
//
// Exit status: 0 all claims hold, 2 a claim failed, 1 error.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cstk/config.hpp"
#include "cstk/experiments.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::string> out;
  std::optional<double> cadence;
  int threads = 1;
  std::vector<double> eps;
  std::string preset;
};

cstk::RunConfig load(const Options& opt) {
  if (opt.config.empty()) throw cstk::ConfigError("--config is required");
  cstk::RunConfig cfg = cstk::load_config(opt.config);
  if (opt.out) cfg.out = *opt.out;
  if (opt.cadence) cfg.audit_cadence = *opt.cadence;
  cfg.validate();
  return cfg;
}

int cmd_run(const Options& opt) {
  const auto cfg = load(opt);
  const auto o = cstk::run_to_directory(cfg, cfg.out);
  std::cout << o.message;
  return o.exit_code;
}

int cmd_sweep(const Options& opt) {
  const auto cfg = load(opt);
  const auto o = cstk::sweep_epsilon(cfg, opt.eps, cfg.out, opt.threads);
  std::cout << "eps_a        eps_b        l2_distance\n";
  for (std::size_t i = 0; i < o.distances.size(); ++i)
    std::printf("%-12g %-12g %.6e\n", o.epsilons[i], o.epsilons[i + 1], o.distances[i]);
  std::cout << (o.decreasing ? "distances decreasing: yes\n" : "distances decreasing: NO\n");
  return o.exit_code;
}

int cmd_convergence(const Options& opt) {
  const auto o = cstk::run_convergence(opt.preset, opt.threads);
  cstk::write_convergence_table(std::cout, o);
  const cstk::fs::path dir = opt.out.value_or(".");
  cstk::fs::create_directories(dir);
  std::ofstream f(dir / ("convergence_" + opt.preset + ".csv"));
  cstk::write_convergence_table(f, o);
  return o.exit_code;
}

int cmd_audit(const Options& opt) {
  if (!opt.out) throw cstk::ConfigError("--out must name a run directory");
  const auto o = cstk::reaudit_directory(*opt.out);
  std::cout << o.message;
  return o.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chemotaxis-Stokes simulator and estimate auditor"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opt;
  app.add_option("--config", opt.config, "Run configuration (key = value)");
  app.add_option("--out", opt.out, "Output directory (overrides run.out)");
  app.add_option("--cadence", opt.cadence, "Audit cadence (overrides run.cadence)");
  app.add_option("--threads", opt.threads, "Concurrent member runs")->check(CLI::PositiveNumber);

  auto* run = app.add_subcommand("run", "Run a configuration and audit it");
  auto* sweep = app.add_subcommand("sweep-epsilon", "Compare final densities along decreasing epsilon");
  sweep->add_option("--eps", opt.eps, "Epsilon values, comma separated")->delimiter(',')->required();
  auto* conv = app.add_subcommand("convergence", "Refinement study of a preset");
  conv->add_option("preset", opt.preset, "barenblatt | heat-mode | stokes-manufactured | rotation-advection")
      ->required();
  auto* audit = app.add_subcommand("audit", "Re-audit the snapshots of a run directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cstk::kExitError;
  }

  try {
    if (*run) return cmd_run(opt);
    if (*sweep) return cmd_sweep(opt);
    if (*conv) return cmd_convergence(opt);
    if (*audit) return cmd_audit(opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cstk::kExitError;
  }
  return cstk::kExitError;
}
