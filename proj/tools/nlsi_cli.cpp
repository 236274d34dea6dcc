#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "nlsi/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Ground states, variational checks and blowup runs for NLS with an attractive singular potential"};
  app.require_subcommand(1);

  std::string config_path, out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<double> dt, tmax, lambda0, cutoff_M;

  for (const auto& name : nlsi::subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "configuration file")->check(CLI::ExistingFile);
    if (name != "report") sub->get_option("--config")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed);
    sub->add_option("--workers", workers)->check(CLI::PositiveNumber);
    sub->add_option("--dt", dt)->check(CLI::PositiveNumber);
    sub->add_option("--tmax", tmax)->check(CLI::PositiveNumber);
    sub->add_option("--lambda0", lambda0);
    sub->add_option("--cutoff-M", cutoff_M)->check(CLI::PositiveNumber);
  }
  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    nlsi::Config cfg = config_path.empty() ? nlsi::Config{} : nlsi::load_config(config_path);
    if (seed) cfg.experiment.seed = *seed;
    if (workers) cfg.experiment.workers = *workers;
    if (dt) cfg.dynamics.dt = *dt;
    if (tmax) cfg.dynamics.t_max = *tmax;
    if (lambda0) cfg.experiment.lambda0 = *lambda0;
    if (cutoff_M) cfg.experiment.cutoff_M = *cutoff_M;
    const auto m = nlsi::run_command(command, cfg, out);
    std::cout << command << ": " << m.status;
    if (!m.error.empty()) std::cout << " (" << m.error << ")";
    std::cout << "\n" << out << "/manifest.json\n";
    return nlsi::exit_code(m);
  } catch (const std::exception& e) {
    std::cerr << "nlsi " << command << ": " << e.what() << "\n";
    return 2;
  }
}
