#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "parity_gate/run.hpp"

using namespace parity_gate;

int main(int argc, char** argv) {
  CLI::App app{"Parity phase gate pulse synthesis and noise analysis"};
  std::string config_path;
  std::uint64_t seed = 0;
  std::string output;
  int threads = 0;
  bool print_resolved = false;
  app.add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Override the master seed");
  auto* out_opt = app.add_option("--output", output, "Override the output directory");
  auto* thr_opt = app.add_option("--threads", threads, "OpenMP threads (default: PARITY_GATE_THREADS or all cores)")
                      ->check(CLI::PositiveNumber);
  app.add_flag("--print-config", print_resolved, "Print the resolved configuration and exit");
  app.set_version_flag("--version", PARITY_GATE_VERSION);
  CLI11_PARSE(app, argc, argv);

  if (!*thr_opt) {
    if (const char* env = std::getenv("PARITY_GATE_THREADS")) {
      threads = std::atoi(env);
      if (threads < 1) {
        std::cerr << "error: PARITY_GATE_THREADS must be a positive integer\n";
        return 2;
      }
    }
  }
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif

  RunConfig config;
  try {
    json j = read_config_file(config_path);
    if (j.is_object()) {
      if (*seed_opt) j["seed"] = seed;
      if (*out_opt) j["output_dir"] = output;
    }
    config = parse_config(j);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  if (print_resolved) {
    std::cout << resolved_config(config).dump(2) << "\n";
    return 0;
  }
  return run(config, std::cerr);
}
