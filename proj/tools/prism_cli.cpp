#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "prism/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Online multi-task pathfinding runner"};
  argv = app.ensure_utf8(argv);

  prism::RunConfig config;
  app.add_option("--map", config.map_path, "Grid map file (.map)")
      ->envname("PRISM_MAP")
      ->required();
  app.add_option("--scen", config.scen_path,
                 "Scenario file (.scen); omitted: generate from the seed")
      ->envname("PRISM_SCEN");
  app.add_option("--solver", config.solver, "prism | cbs | tpts")
      ->envname("PRISM_SOLVER")
      ->check(CLI::IsMember({"prism", "cbs", "tpts"}))
      ->capture_default_str();
  app.add_option("--protocol", config.protocol, "prox | los | full")
      ->envname("PRISM_PROTOCOL")
      ->check(CLI::IsMember({"prox", "los", "full"}))
      ->capture_default_str();
  app.add_option("--range", config.range,
                 "Proximity diameter: 'min' or a fraction of the longer side")
      ->envname("PRISM_RANGE")
      ->capture_default_str();
  app.add_option("--agents", config.agents, "Agent count")
      ->envname("PRISM_AGENTS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--tasks", config.tasks, "Task count")
      ->envname("PRISM_TASKS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--seed", config.seed, "First seed; run r uses seed + r")
      ->envname("PRISM_SEED")
      ->capture_default_str();
  app.add_option("--runs", config.runs, "Consecutive seeds to run")
      ->envname("PRISM_RUNS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--time-limit", config.time_limit_s,
                 "Per-run wall-clock limit in seconds")
      ->envname("PRISM_TIME_LIMIT")
      ->capture_default_str();
  app.add_option("--max-ticks", config.max_ticks, "Per-run tick limit")
      ->envname("PRISM_MAX_TICKS")
      ->capture_default_str();
  app.add_option("--out", config.out_dir,
                 "Output directory for result/timing/packet files")
      ->envname("PRISM_OUT");

  CLI11_PARSE(app, argc, argv);

  try {
    const prism::BatchSummary summary = prism::run_batch(config);
    std::cout << summary.report_line << "\n";
    return summary.successes == summary.runs ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
