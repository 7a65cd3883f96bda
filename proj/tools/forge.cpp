// forge <config-path> [--workers N] [--out DIR]

#include "forge/cli/runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

int main(int argc, char** argv) {
  using namespace forge::cli;
  CLI::App app{"forge: message-compression experiments for full-information protocols"};
  app.footer(config_reference() +
             "\nEnvironment: FORGE_OUTPUT_DIR and FORGE_WORKERS override output_dir and limits.workers;\n"
             "command-line flags override both.\nExit codes: 0 success, 1 config or runtime error, 2 cap exceeded.");
  std::string config_path;
  std::optional<unsigned> workers;
  std::optional<std::string> out_dir;
  app.add_option("config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
  app.add_option("--workers", workers, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "output directory");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and friends exit 0; every usage error maps to the config-error code
    return app.exit(e) == 0 ? kExitOk : kExitFailure;
  }

  std::ifstream in(config_path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  const ParseResult parsed = parse_config(buf.str());
  if (!parsed.ok()) {
    for (const auto& e : parsed.errors) std::cerr << config_path << ": " << e.str() << "\n";
    return kExitFailure;
  }
  const ExperimentConfig& cfg = *parsed.config;

  RunOptions opts;
  if (const char* env = std::getenv("FORGE_WORKERS")) {
    try {
      opts.workers = static_cast<unsigned>(std::stoul(env));
    } catch (const std::exception&) {
      std::cerr << "FORGE_WORKERS must be a positive integer\n";
      return kExitFailure;
    }
  }
  if (workers) opts.workers = workers;
  std::string dir = cfg.output_dir.value_or(".");
  if (const char* env = std::getenv("FORGE_OUTPUT_DIR")) dir = env;
  if (out_dir) dir = *out_dir;

  const RunOutcome run = run_experiment(cfg, opts);
  try {
    write_outputs(run, dir);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitFailure;
  }
  if (run.record.contains("error")) std::cerr << run.record["error"].dump() << "\n";
  std::cout << run.record.dump() << "\n";
  return run.exit_code;
}
