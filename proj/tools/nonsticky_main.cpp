// nonsticky: run Euler-scheme studies from config files.
//
//   nonsticky classify <config>
//   nonsticky run <config> --out-dir DIR [--seed N] [--workers N]
//   nonsticky dump-path <config> --level L [--seed N] [--path-index I] [--no-shift]

#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "nonsticky/cli.hpp"

namespace {

unsigned default_workers() {
  if (const char* env = std::getenv("NONSTICKY_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring invalid NONSTICKY_WORKERS='" << env << "'\n";
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

int main(int argc, char** argv) {
  using namespace nonsticky::cli;

  CLI::App app{"Euler-Maruyama laboratory for degenerate SDEs dX = sigma(X) dW"};
  app.require_subcommand(1);

  std::string classify_config;
  auto* classify = app.add_subcommand("classify", "integrability of 1/sigma^2 at each zero of sigma");
  classify->add_option("config", classify_config, "coefficient config file")->required();

  RunOptions run_opt;
  run_opt.workers = default_workers();
  std::uint64_t run_seed = 0;
  auto* run = app.add_subcommand("run", "run a study and write manifest.json, results.csv, summary.json");
  run->add_option("config", run_opt.config_path, "study config file")->required();
  auto* seed_opt = run->add_option("--seed", run_seed, "override the config seed");
  run->add_option("--workers", run_opt.workers, "worker threads (default $NONSTICKY_WORKERS)")
      ->check(CLI::PositiveNumber);
  run->add_option("--out-dir", run_opt.out_dir, "output directory")->required();

  DumpOptions dump_opt;
  auto* dump = app.add_subcommand("dump-path", "print one simulated path as CSV");
  dump->add_option("config", dump_opt.config_path, "problem config file")->required();
  dump->add_option("--level", dump_opt.level, "grid level, n = 2^level steps")->required();
  dump->add_option("--seed", dump_opt.seed, "seed");
  dump->add_option("--path-index", dump_opt.path_index, "path index");
  dump->add_flag("--no-shift", dump_opt.no_shift, "start at x0 even when it is a zero of sigma");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*classify) return cmd_classify(classify_config, std::cout, std::cerr);
  if (*run) {
    if (*seed_opt) run_opt.seed = run_seed;
    return cmd_run(run_opt, std::cout, std::cerr);
  }
  return cmd_dump_path(dump_opt, std::cout, std::cerr);
}
