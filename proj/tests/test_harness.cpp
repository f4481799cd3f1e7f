#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "prism/harness.hpp"

namespace prism {
namespace {

namespace fs = std::filesystem;

// Self-cleaning scratch directory for file-based cases.
struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("prism_harness_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

std::string open_map_text(int w, int h) {
  std::string text = "type octile\nheight " + std::to_string(h) + "\nwidth " +
                     std::to_string(w) + "\nmap\n";
  for (int y = 0; y < h; ++y) text += std::string(w, '.') + "\n";
  return text;
}

fs::path write_file(const fs::path& dir, const std::string& name,
                    const std::string& body) {
  const fs::path p = dir / name;
  std::ofstream(p) << body;
  return p;
}

TEST_CASE("seeded generator is deterministic, bounded, and rejects zero") {
  Rng a(42), b(42), c(43);
  bool diverged = false;
  for (int i = 0; i < 200; ++i) {
    const int va = a.uniform(17);
    CHECK(va == b.uniform(17));
    CHECK(va >= 0);
    CHECK(va < 17);
    if (va != c.uniform(17)) diverged = true;
  }
  CHECK(diverged);
  Rng u(7);
  for (int i = 0; i < 200; ++i) {
    const double x = u.unit();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  CHECK_THROWS_AS(Rng(1).uniform(0), std::invalid_argument);
}

TEST_CASE("largest connected region is found and reported sorted") {
  // Left column of 3 cells, right blob of 4 cells, separated by a wall.
  const GridMap map = oracle::grid_from({".#..", ".#..", ".#.#"});
  const std::vector<Vertex> best = largest_component(map);
  REQUIRE(best.size() == 5);
  CHECK(std::is_sorted(best.begin(), best.end()));
  for (const Vertex& v : best) CHECK(v.x >= 2);
}

TEST_CASE("random instances draw distinct cells from one connected region") {
  for (std::uint64_t seed = 600; seed < 610; ++seed) {
    CAPTURE(seed);
    Rng rng(seed);
    const GridMap map = generate_obstacle_map(9, 9, 0.2, seed);
    const Instance inst = make_instance(map, 3, 4, rng);
    const std::vector<Vertex> region = largest_component(map);
    const std::set<Vertex> region_set(region.begin(), region.end());
    std::set<Vertex> used;
    auto take = [&](Vertex v) {
      CHECK(used.insert(v).second);  // never sampled twice
      CHECK(region_set.count(v) == 1);
    };
    for (const Vertex& v : inst.starts) take(v);
    for (const Task& t : inst.missions) {
      take(t.start);
      take(t.goal);
    }
    CHECK(inst.starts.size() == 3);
    CHECK(inst.missions.size() == 4);
  }
  Rng rng(1);
  CHECK_THROWS_AS(make_instance(generate_obstacle_map(3, 3, 0.2, 1), 5, 5, rng),
                  std::runtime_error);
}

TEST_CASE("scenario-driven instances take entries in file order") {
  std::vector<ScenarioEntry> entries(4);
  entries[0].start = {0, 0};
  entries[1].start = {5, 5};
  entries[2].start = {1, 0};
  entries[2].goal = {2, 0};
  entries[3].start = {3, 3};
  entries[3].goal = {4, 4};
  const GridMap map(6, 6, std::vector<uint8_t>(36, 1));
  const Instance inst = make_instance(map, entries, 2, 2);
  CHECK(inst.starts == std::vector<Vertex>{{0, 0}, {5, 5}});
  CHECK(inst.missions[0].start == Vertex{1, 0});
  CHECK(inst.missions[0].goal == Vertex{2, 0});
  CHECK(inst.missions[1].start == Vertex{3, 3});
  CHECK(inst.missions[1].goal == Vertex{4, 4});
  CHECK_THROWS_AS(make_instance(map, entries, 3, 2), std::runtime_error);
}

TEST_CASE("generated maps are reproducible and fully connected") {
  const GridMap a = generate_obstacle_map(12, 12, 0.2, 9);
  const GridMap b = generate_obstacle_map(12, 12, 0.2, 9);
  CHECK(serialize_map(a) == serialize_map(b));
  CHECK(a.passable_count() ==
        static_cast<int>(largest_component(a).size()));
  CHECK(generate_obstacle_map(6, 6, 0.0, 1).passable_count() == 36);

  const GridMap maze1 = generate_maze(13, 13, 5, 2);
  const GridMap maze2 = generate_maze(13, 13, 5, 2);
  CHECK(serialize_map(maze1) == serialize_map(maze2));
  CHECK(maze1.passable_count() > 0);
  CHECK(maze1.passable_count() ==
        static_cast<int>(largest_component(maze1).size()));
  CHECK(serialize_map(generate_maze(13, 13, 6, 2)) != serialize_map(maze1));
}

TEST_CASE("communication settings come straight from the run configuration") {
  RunConfig config;
  config.protocol = "prox";
  config.range = "min";
  CHECK(comms_from(config).protocol == Protocol::kProximity);
  CHECK(comms_from(config).range_fraction == 0.0);
  config.range = "0.15";
  CHECK(comms_from(config).range_fraction == doctest::Approx(0.15));
  config.protocol = "full";
  CHECK(comms_from(config).protocol == Protocol::kFull);
  config.protocol = "los";
  CHECK(comms_from(config).protocol == Protocol::kLineOfSight);
}

TEST_CASE("a single run emits a full record, a timing file, and a trace") {
  TempDir tmp;
  RunConfig config;
  config.map_path = write_file(tmp.path, "open.map", open_map_text(8, 8)).string();
  config.solver = "prism";
  config.protocol = "full";
  config.agents = 2;
  config.tasks = 2;
  const GridMap map = load_map(config.map_path);
  const RunArtifacts artifacts = run_single(config, 11, map);

  const auto doc = nlohmann::json::parse(artifacts.result_json);
  CHECK(doc.at("schema_version") == 1);
  CHECK(doc.at("solver") == "prism");
  CHECK(doc.at("seed") == 11);
  CHECK(doc.at("status") == "success");
  CHECK(doc.at("replay_collision_count") == 0);
  CHECK(doc.at("invariant_violations").empty());
  const auto& trajectories = doc.at("trajectories");
  REQUIRE(trajectories.size() == 2);
  const int ticks = doc.at("ticks").get<int>();
  for (const auto& traj : trajectories)
    CHECK(traj.size() == static_cast<size_t>(ticks) + 1);

  const auto timing = nlohmann::json::parse(artifacts.timing_json);
  CHECK(timing.contains("wall_s"));
  CHECK(timing.contains("planning_time_s"));
  CHECK(timing.contains("allocator_time_s"));

  // Trace shape: header plus one row per agent per recorded state.
  std::istringstream csv(artifacts.packet_csv);
  std::string line;
  REQUIRE(std::getline(csv, line));
  CHECK(line == "tick,agent,bounded,infinite");
  int rows = 0;
  while (std::getline(csv, line))
    if (!line.empty()) ++rows;
  CHECK(rows == (ticks + 1) * config.agents);
}

TEST_CASE("identical seed and configuration reproduce identical records") {
  TempDir tmp;
  RunConfig config;
  config.map_path =
      write_file(tmp.path, "open.map", open_map_text(10, 10)).string();
  config.solver = "prism";
  config.protocol = "prox";
  config.range = "0.1";
  config.agents = 3;
  config.tasks = 4;
  const GridMap map = load_map(config.map_path);
  const RunArtifacts first = run_single(config, 21, map);
  const RunArtifacts second = run_single(config, 21, map);
  CHECK(first.result_json == second.result_json);
  CHECK(first.packet_csv == second.packet_csv);
}

TEST_CASE("batches report one row per seed and exact aggregates") {
  TempDir tmp;
  RunConfig config;
  config.map_path =
      write_file(tmp.path, "open.map", open_map_text(10, 10)).string();
  config.solver = "prism";
  config.protocol = "full";
  config.agents = 2;
  config.tasks = 3;
  config.seed = 100;
  config.runs = 5;
  config.out_dir = (tmp.path / "out").string();
  const BatchSummary summary = run_batch(config);

  REQUIRE(summary.rows.size() == 5);
  for (int r = 0; r < 5; ++r)
    CHECK(summary.rows[r].seed == 100 + static_cast<std::uint64_t>(r));

  // The aggregate numbers must be recomputable from the emitted rows.
  std::vector<double> costs;
  std::vector<double> runtimes;
  int successes = 0;
  for (const BatchRow& row : summary.rows) {
    runtimes.push_back(row.runtime_s);
    if (row.status == "success") {
      ++successes;
      costs.push_back(static_cast<double>(row.sum_of_costs));
    }
    CHECK(row.error.empty());
  }
  REQUIRE(successes == summary.successes);
  REQUIRE(successes > 0);
  double cost_mean = 0.0;
  for (double c : costs) cost_mean += c;
  cost_mean /= successes;
  double cost_sq = 0.0;
  for (double c : costs) cost_sq += (c - cost_mean) * (c - cost_mean);
  const double cost_stddev =
      costs.size() < 2 ? 0.0 : std::sqrt(cost_sq / costs.size());
  CHECK(summary.mean_cost == cost_mean);
  CHECK(summary.stddev_cost == cost_stddev);
  double run_mean = 0.0;
  for (double t : runtimes) run_mean += t;
  run_mean /= runtimes.size();
  CHECK(summary.mean_runtime_s == run_mean);

  // The summary document carries the same numbers and all the rows.
  const auto doc = nlohmann::json::parse(summary.json);
  CHECK(doc.at("runs") == 5);
  CHECK(doc.at("successes") == summary.successes);
  CHECK(doc.at("mean_cost") == summary.mean_cost);
  CHECK(doc.at("rows").size() == 5);
  CHECK(fs::exists(fs::path(config.out_dir) / "summary.json"));
  CHECK(fs::exists(fs::path(config.out_dir) / "prism_s100.result.json"));
  CHECK(fs::exists(fs::path(config.out_dir) / "prism_s104.packets.csv"));

  CHECK(summary.report_line.find("success=") != std::string::npos);
  CHECK(summary.report_line.find("runtime_s=") != std::string::npos);
  CHECK(summary.report_line.find("cost=") != std::string::npos);
}

TEST_CASE("an empty batch reports cleanly") {
  TempDir tmp;
  RunConfig config;
  config.map_path =
      write_file(tmp.path, "open.map", open_map_text(6, 6)).string();
  config.runs = 0;
  const BatchSummary summary = run_batch(config);
  CHECK(summary.runs == 0);
  CHECK(summary.successes == 0);
  CHECK(summary.rows.empty());
  CHECK(nlohmann::json::parse(summary.json).at("rows").empty());
  CHECK_FALSE(summary.report_line.empty());
}

TEST_CASE("a run cut off by the wall clock reports the cap as its runtime") {
  TempDir tmp;
  RunConfig config;
  config.map_path =
      write_file(tmp.path, "open.map", open_map_text(12, 12)).string();
  config.solver = "prism";
  config.protocol = "full";
  config.agents = 3;
  config.tasks = 6;
  config.time_limit_s = 1e-7;  // impossible budget: every run is cut off
  config.runs = 2;
  const BatchSummary summary = run_batch(config);
  REQUIRE(summary.rows.size() == 2);
  for (const BatchRow& row : summary.rows) {
    CHECK(row.status == "timeout");
    CHECK(row.runtime_s == config.time_limit_s);
  }
  CHECK(summary.successes == 0);
  CHECK(summary.mean_runtime_s == config.time_limit_s);
}

TEST_CASE("a failing scenario is reported in its row, not thrown") {
  TempDir tmp;
  RunConfig config;
  config.map_path =
      write_file(tmp.path, "tiny.map", open_map_text(4, 4)).string();
  config.solver = "prism";
  config.agents = 6;  // needs 6 + 2*8 = 22 cells; the map has 16
  config.tasks = 8;
  config.runs = 3;
  const BatchSummary summary = run_batch(config);
  REQUIRE(summary.rows.size() == 3);
  for (const BatchRow& row : summary.rows) {
    CHECK(row.status == "error");
    CHECK_FALSE(row.error.empty());
  }
  CHECK(summary.successes == 0);
}

TEST_CASE("a file that cannot be written marks its row and the batch goes on") {
  TempDir tmp;
  RunConfig config;
  config.map_path =
      write_file(tmp.path, "open.map", open_map_text(8, 8)).string();
  config.solver = "prism";
  config.protocol = "full";
  config.agents = 2;
  config.tasks = 2;
  config.seed = 7;
  config.runs = 2;
  config.out_dir = (tmp.path / "out").string();
  // Make seed 7's result file unwritable by planting a directory in its place.
  fs::create_directories(fs::path(config.out_dir) / "prism_s7.result.json");
  const BatchSummary summary = run_batch(config);
  REQUIRE(summary.rows.size() == 2);
  CHECK(summary.rows[0].error.find("prism_s7.result.json") !=
        std::string::npos);
  CHECK(summary.rows[0].status == "success");  // the run itself was fine
  CHECK(summary.rows[1].error.empty());
  CHECK(fs::exists(fs::path(config.out_dir) / "prism_s8.result.json"));
}

}  // namespace
}  // namespace prism
