#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nelson/acceptance.hpp"
#include "nelson/commands.hpp"
#include "nelson/parallel.hpp"

using namespace nelson;

namespace {

RunConfig load(const std::string& path, bool strict) {
  RunConfig cfg = load_config(path);
  if (strict) {
    cfg.cascade.params.strict_paper_regime = true;
    cfg.warnings = validate(cfg.cascade.params);
  }
  for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << "\n";
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nelson model infrared cascade, dispersion and scattering diagnostics"};
  app.require_subcommand(1);

  std::string config, out;
  int threads = 0;
  bool strict = false, list = false;

  auto common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config, "JSON run configuration");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--threads", threads, "worker threads (default NELSON_THREADS or 1)");
    sub->add_flag("--strict", strict, "enforce the analytic parameter regime");
  };

  auto* cascade = app.add_subcommand("cascade", "run the infrared cutoff cascade");
  auto* dispersion = app.add_subcommand("dispersion", "scan E(P), gradients, B1 and Hoelder fits");
  auto* scatter = app.add_subcommand("scatter", "kernel sweeps, phases, smearing and overlaps");
  auto* validate_cmd = app.add_subcommand("validate", "run the acceptance suite");
  for (auto* sub : {cascade, dispersion, scatter}) {
    common(sub, true);
    sub->add_option("--out", out, "output directory (default from config)");
  }
  common(validate_cmd, false);
  validate_cmd->add_flag("--list", list, "print the criteria without running them");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate_cmd->parsed()) {
      if (list) {
        list_criteria(std::cout);
        return 0;
      }
      RunConfig cfg = load(config.empty() ? reference_config_path() : config, strict);
      return cmd_validate(cfg, threads, std::cout);
    }
    RunConfig cfg = load(config, strict);
    const std::string dir = out.empty() ? cfg.out_dir : out;
    const int n = resolve_threads(threads);
    if (cascade->parsed()) return cmd_cascade(cfg, dir, n, std::cout);
    if (dispersion->parsed()) return cmd_dispersion(cfg, dir, n, std::cout);
    return cmd_scatter(cfg, dir, n, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
