// liostab: configuration driven verification runs.
//
//   liostab <command> [--config file] [--out dir] [--seed n] [--threads k]
//
// exit 0: all checks hold, 1: a check failed, 2: configuration error.

#include <iostream>

#include "CLI11.hpp"
#include "lio/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Discretize localized integral operators and verify their estimates numerically"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int threads = -1;
  app.add_option("--config", config_path, "configuration file (key = value with [section] headers)");
  app.add_option("--out", out_dir, "output directory (overrides LIO_OUT_DIR and run.out)");
  app.add_option("--seed", seed, "seed for randomized probes (overrides run.seed)");
  app.add_option("--threads", threads, "worker threads, 0 = all cores (overrides run.threads)");
  // flags are accepted before or after the command name
  for (auto& name : lio::command_names()) app.add_subcommand(name, "run " + name)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    lio::json j{{"error", "parse"}, {"field", "command-line"}, {"message", e.what()}};
    std::cerr << j.dump() << "\n";
    return 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  lio::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = lio::RunConfig::load(config_path);
    cfg.apply_environment();
    if (!out_dir.empty()) cfg.out = out_dir;
    if (app.count("--seed")) cfg.seed = seed;
    if (app.count("--threads")) {
      if (threads < 0) throw lio::ParseError("threads", "field 'threads': must be >= 0");
      cfg.threads = threads;
    }
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << lio::error_json(e).dump() << "\n";
    return 2;
  }

  try {
    auto r = lio::run_command(cmd, cfg, cmd == "verify-all" ? &std::cout : nullptr);
    lio::json j{{"command", cmd}, {"exit", r.exit_code}, {"out", cfg.out}, {"artifacts", r.artifacts}};
    std::cout << j.dump() << "\n";
    return r.exit_code;
  } catch (const std::exception& e) {
    std::cerr << lio::error_json(e).dump() << "\n";
    return lio::exit_code_for(e);
  }
}
