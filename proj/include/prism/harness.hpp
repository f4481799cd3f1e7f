#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "prism/baselines.hpp"

namespace prism {

// Deterministic generator: a fixed-algorithm 64-bit engine with rejection
// sampling for bounded draws, so identical seeds give identical instances and
// runs regardless of standard-library distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform draw from [0, bound); bound must be positive.
  int uniform(int bound);

  // Uniform draw from [lo, hi], inclusive.
  int range(int lo, int hi) { return lo + uniform(hi - lo + 1); }

  double unit();  // uniform [0, 1)

 private:
  std::mt19937_64 gen_;
};

struct Instance {
  GridMap map;
  std::vector<Vertex> starts;
  std::vector<Task> missions;
};

// Passable cells mutually reachable from the largest connected region,
// ascending (y, x); sampling from it keeps every instance solvable.
std::vector<Vertex> largest_component(const GridMap& map);

// Agent starts and task endpoints drawn without replacement from the largest
// connected region.
Instance make_instance(const GridMap& map, int agents, int tasks, Rng& rng);

// Scenario convention: entries [0, agents) give the agent start cells;
// entries [agents, agents + tasks) give the missions as (start, goal).
Instance make_instance(const GridMap& map,
                       const std::vector<ScenarioEntry>& entries, int agents,
                       int tasks);

// Perfect maze over 2-cell-wide corridors (rendered odd-sized, padded with
// walls to the requested size), plus a few seeded extra openings for loops.
GridMap generate_maze(int width, int height, std::uint64_t seed,
                      int extra_openings = 6);

// Uniform random obstacles at the given density; the largest connected
// region is kept and every stranded pocket is walled off.
GridMap generate_obstacle_map(int width, int height, double density,
                              std::uint64_t seed);

struct RunConfig {
  std::string map_path;
  std::string scen_path;         // empty: generate the instance from the seed
  std::string solver = "prism";  // prism | cbs | tpts
  std::string protocol = "prox"; // prox | los | full
  std::string range = "min";     // "min" or a fraction of the longer side
  int agents = 4;
  int tasks = 8;
  std::uint64_t seed = 1;
  double time_limit_s = 60.0;
  int max_ticks = 100000;
  int runs = 1;                  // consecutive seeds starting at seed
  std::string out_dir;           // empty: nothing written to disk
};

CommsConfig comms_from(const RunConfig& config);

struct RunArtifacts {
  SimulationResult result;
  std::string result_json;  // deterministic: no wall-clock content
  std::string timing_json;  // wall-clock measurements only
  std::string packet_csv;   // "tick,agent,bounded,infinite" rows
};

// One run at one seed, on the instance from the scenario file or generated.
RunArtifacts run_single(const RunConfig& config, std::uint64_t seed,
                        const GridMap& map);

// One line of the batch report: what a single seeded run did.
struct BatchRow {
  std::uint64_t seed = 0;
  std::string status;           // success | stalled | timeout | ill_formed | error
  long long sum_of_costs = 0;
  Timestep ticks = 0;
  double runtime_s = 0.0;       // wall time; a capped run records the cap itself
  std::string error;            // what went wrong (run or file I/O); else empty
};

struct BatchSummary {
  int runs = 0;
  int successes = 0;
  double mean_cost = 0.0;         // over successful runs
  double stddev_cost = 0.0;       // over successful runs
  double mean_ticks = 0.0;        // over successful runs
  double mean_runtime_s = 0.0;    // over all runs, capped values included
  double stddev_runtime_s = 0.0;  // over all runs, capped values included
  double mean_planning_s = 0.0;   // over all runs
  std::vector<BatchRow> rows;     // one per run, in seed order
  std::string json;
  std::string report_line;
};

// Runs seeds seed .. seed+runs-1, writes per-run and summary files when
// out_dir is set, and returns the aggregate.
BatchSummary run_batch(const RunConfig& config);

}  // namespace prism
