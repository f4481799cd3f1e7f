#include "prism/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace prism {

using ordered_json = nlohmann::ordered_json;

int Rng::uniform(int bound) {
  if (bound <= 0) throw std::invalid_argument("uniform bound must be positive");
  const std::uint64_t b = static_cast<std::uint64_t>(bound);
  const std::uint64_t scale = std::numeric_limits<std::uint64_t>::max() / b;
  std::uint64_t value;
  do {
    value = gen_() / scale;
  } while (value >= b);
  return static_cast<int>(value);
}

double Rng::unit() {
  return static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0);
}

std::vector<Vertex> largest_component(const GridMap& map) {
  std::vector<char> seen(map.size(), 0);
  std::vector<Vertex> best;
  for (int idx = 0; idx < map.size(); ++idx) {
    const Vertex seed = map.vertex(idx);
    if (!map.passable(seed) || seen[idx]) continue;
    std::vector<Vertex> component;
    std::queue<Vertex> frontier;
    frontier.push(seed);
    seen[idx] = 1;
    while (!frontier.empty()) {
      const Vertex v = frontier.front();
      frontier.pop();
      component.push_back(v);
      for (const Vertex& n : map.neighbors(v)) {
        if (!seen[map.index(n)]) {
          seen[map.index(n)] = 1;
          frontier.push(n);
        }
      }
    }
    if (component.size() > best.size()) best = std::move(component);
  }
  std::sort(best.begin(), best.end());
  return best;
}

Instance make_instance(const GridMap& map, int agents, int tasks, Rng& rng) {
  Instance inst;
  inst.map = map;
  std::vector<Vertex> pool = largest_component(map);
  const int needed = agents + 2 * tasks;
  if (static_cast<int>(pool.size()) < needed)
    throw std::runtime_error("map has " + std::to_string(pool.size()) +
                             " connected cells, instance needs " +
                             std::to_string(needed));
  auto draw = [&] {
    const int k = rng.uniform(static_cast<int>(pool.size()));
    const Vertex v = pool[k];
    pool[k] = pool.back();
    pool.pop_back();
    return v;
  };
  for (int i = 0; i < agents; ++i) inst.starts.push_back(draw());
  for (int i = 0; i < tasks; ++i) {
    Task t;
    t.id = i;
    t.start = draw();
    t.goal = draw();
    inst.missions.push_back(t);
  }
  return inst;
}

Instance make_instance(const GridMap& map,
                       const std::vector<ScenarioEntry>& entries, int agents,
                       int tasks) {
  if (static_cast<int>(entries.size()) < agents + tasks)
    throw std::runtime_error("scenario has " + std::to_string(entries.size()) +
                             " entries, instance needs " +
                             std::to_string(agents + tasks));
  Instance inst;
  inst.map = map;
  for (int i = 0; i < agents; ++i) inst.starts.push_back(entries[i].start);
  for (int i = 0; i < tasks; ++i) {
    Task t;
    t.id = i;
    t.start = entries[agents + i].start;
    t.goal = entries[agents + i].goal;
    inst.missions.push_back(t);
  }
  return inst;
}

GridMap generate_maze(int width, int height, std::uint64_t seed,
                      int extra_openings) {
  const int rooms_x = std::max(1, (width - 1) / 3);
  const int rooms_y = std::max(1, (height - 1) / 3);
  std::vector<uint8_t> open(static_cast<size_t>(width) * height, 0);
  auto carve = [&](int x, int y) {
    if (x >= 0 && x < width && y >= 0 && y < height) open[y * width + x] = 1;
  };
  auto carve_room = [&](int rx, int ry) {
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) carve(3 * rx + 1 + dx, 3 * ry + 1 + dy);
  };
  // Knock out the 2-cell wall segment between two adjacent rooms.
  auto carve_link = [&](int rx, int ry, int nx, int ny) {
    if (nx != rx) {  // horizontal neighbors
      const int wall_x = 3 * std::max(rx, nx);
      carve(wall_x, 3 * ry + 1);
      carve(wall_x, 3 * ry + 2);
    } else {
      const int wall_y = 3 * std::max(ry, ny);
      carve(3 * rx + 1, wall_y);
      carve(3 * rx + 2, wall_y);
    }
  };

  Rng rng(seed);
  for (int ry = 0; ry < rooms_y; ++ry)
    for (int rx = 0; rx < rooms_x; ++rx) carve_room(rx, ry);

  std::vector<char> visited(static_cast<size_t>(rooms_x) * rooms_y, 0);
  std::vector<std::pair<int, int>> stack = {{0, 0}};
  visited[0] = 1;
  const int dirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  while (!stack.empty()) {
    const auto [rx, ry] = stack.back();
    std::vector<std::pair<int, int>> next;
    for (const auto& d : dirs) {
      const int nx = rx + d[0], ny = ry + d[1];
      if (nx < 0 || nx >= rooms_x || ny < 0 || ny >= rooms_y) continue;
      if (!visited[ny * rooms_x + nx]) next.push_back({nx, ny});
    }
    if (next.empty()) {
      stack.pop_back();
      continue;
    }
    const auto [nx, ny] = next[rng.uniform(static_cast<int>(next.size()))];
    visited[ny * rooms_x + nx] = 1;
    carve_link(rx, ry, nx, ny);
    stack.push_back({nx, ny});
  }
  for (int i = 0; i < extra_openings; ++i) {
    const int rx = rng.uniform(rooms_x);
    const int ry = rng.uniform(rooms_y);
    const auto& d = dirs[rng.uniform(4)];
    const int nx = rx + d[0], ny = ry + d[1];
    if (nx < 0 || nx >= rooms_x || ny < 0 || ny >= rooms_y) continue;
    carve_link(rx, ry, nx, ny);
  }
  return GridMap(width, height, std::move(open));
}

GridMap generate_obstacle_map(int width, int height, double density,
                              std::uint64_t seed) {
  Rng rng(seed);
  std::vector<uint8_t> open(static_cast<size_t>(width) * height, 0);
  for (auto& cell : open) cell = rng.unit() >= density ? 1 : 0;
  GridMap draft(width, height, std::move(open));
  // Wall off everything outside the largest connected region.
  std::vector<uint8_t> kept(static_cast<size_t>(width) * height, 0);
  for (const Vertex& v : largest_component(draft)) kept[draft.index(v)] = 1;
  return GridMap(width, height, std::move(kept));
}

CommsConfig comms_from(const RunConfig& config) {
  CommsConfig comms;
  comms.protocol = parse_protocol(config.protocol);
  comms.range_fraction = config.range == "min" ? 0.0 : std::stod(config.range);
  return comms;
}

namespace {

EngineLimits limits_from(const RunConfig& config) {
  EngineLimits limits;
  limits.max_ticks = config.max_ticks;
  limits.wall_clock_limit_s = config.time_limit_s;
  return limits;
}

SimulationResult run_centralized(const RunConfig& config, const GridMap& map,
                                 const Instance& inst) {
  if (static_cast<int>(inst.missions.size()) <
      static_cast<int>(inst.starts.size()))
    throw std::runtime_error(
        "solver cbs pairs agent i with task i and needs tasks >= agents");
  std::vector<Vertex> goals;
  for (size_t i = 0; i < inst.starts.size(); ++i)
    goals.push_back(inst.missions[i].goal);
  const auto t0 = std::chrono::steady_clock::now();
  const CentralizedPlan plan = centralized_cbs(map, inst.starts, goals);
  SimulationResult result;
  result.planning_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  result.status = plan.success ? RunStatus::kSuccess : RunStatus::kTimeout;
  result.sum_of_costs = plan.sum_of_costs;
  result.ct_nodes_expanded = plan.stats.nodes_expanded;
  result.lowlevel_calls = plan.stats.lowlevel_calls;
  result.cbs_calls = 1;
  Timestep makespan = 0;
  for (const auto& [id, path] : plan.paths)
    makespan = std::max(makespan, path.arrival_time());
  result.ticks = makespan;
  result.trajectories.resize(inst.starts.size());
  for (const auto& [id, path] : plan.paths)
    for (Timestep t = 0; t <= makespan; ++t)
      result.trajectories[id].push_back(path.at(t));
  return result;
}

std::string csv_of(const SimulationResult& result) {
  std::ostringstream csv;
  csv << "tick,agent,bounded,infinite\n";
  for (const auto& row : result.packet_trace)
    csv << row.tick << "," << row.agent << "," << row.bounded << ","
        << row.infinite << "\n";
  return csv.str();
}

}  // namespace

RunArtifacts run_single(const RunConfig& config, std::uint64_t seed,
                        const GridMap& map) {
  Instance inst;
  if (config.scen_path.empty()) {
    Rng rng(seed);
    inst = make_instance(map, config.agents, config.tasks, rng);
  } else {
    inst = make_instance(map, load_scenario(config.scen_path, map),
                         config.agents, config.tasks);
  }

  const auto wall0 = std::chrono::steady_clock::now();
  SimulationResult result;
  if (config.solver == "prism") {
    Engine engine(map, inst.starts, inst.missions, comms_from(config),
                  limits_from(config));
    result = engine.run();
  } else if (config.solver == "tpts") {
    result = tpts_run(map, inst.starts, inst.missions, limits_from(config));
  } else if (config.solver == "cbs") {
    result = run_centralized(config, map, inst);
  } else {
    throw std::runtime_error("unknown solver: " + config.solver);
  }
  const double wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0)
          .count();

  const auto collisions = replay_conflicts(result.trajectories);

  RunArtifacts out;
  out.result = result;

  ordered_json doc;
  doc["schema_version"] = 1;
  doc["solver"] = config.solver;
  doc["protocol"] = config.protocol;
  doc["range"] = config.range;
  doc["map"] = {{"width", map.width()},
                {"height", map.height()},
                {"passable_cells", map.passable_count()}};
  doc["agents"] = config.agents;
  doc["tasks"] = static_cast<int>(inst.missions.size());
  doc["seed"] = seed;
  doc["status"] = to_string(result.status);
  doc["sum_of_costs"] = result.sum_of_costs;
  doc["ticks"] = result.ticks;
  doc["cbs_calls"] = result.cbs_calls;
  doc["ct_nodes_expanded"] = result.ct_nodes_expanded;
  doc["lowlevel_calls"] = result.lowlevel_calls;
  doc["packets_bounded_created"] = result.packets_bounded_created;
  doc["packets_infinite_created"] = result.packets_infinite_created;
  doc["invariant_violations"] = result.invariant_violations;
  doc["replay_collision_count"] = static_cast<int>(collisions.size());
  ordered_json trajectories = ordered_json::array();
  for (const auto& traj : result.trajectories) {
    ordered_json one = ordered_json::array();
    for (const Vertex& v : traj) one.push_back({v.x, v.y});
    trajectories.push_back(std::move(one));
  }
  doc["trajectories"] = std::move(trajectories);
  out.result_json = doc.dump(2) + "\n";

  ordered_json timing;
  timing["wall_s"] = wall_s;
  timing["planning_time_s"] = result.planning_time_s;
  timing["allocator_time_s"] = result.allocator_time_s;
  out.timing_json = timing.dump(2) + "\n";

  out.packet_csv = csv_of(result);
  return out;
}

namespace {

// Population standard deviation; zero for empty or single-value sets.
double stddev_of(const std::vector<double>& values, double mean) {
  if (values.size() < 2) return 0.0;
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return std::sqrt(sq / static_cast<double>(values.size()));
}

}  // namespace

BatchSummary run_batch(const RunConfig& config) {
  const GridMap map = load_map(config.map_path);
  namespace fs = std::filesystem;
  if (!config.out_dir.empty()) fs::create_directories(config.out_dir);

  BatchSummary summary;
  summary.runs = config.runs;
  std::vector<double> costs;
  std::vector<double> runtimes;
  long long ticks_total = 0;
  double planning_total = 0.0;
  for (int r = 0; r < config.runs; ++r) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(r);
    BatchRow row;
    row.seed = seed;
    const auto wall0 = std::chrono::steady_clock::now();
    try {
      const RunArtifacts artifacts = run_single(config, seed, map);
      row.status = to_string(artifacts.result.status);
      row.sum_of_costs = artifacts.result.sum_of_costs;
      row.ticks = artifacts.result.ticks;
      planning_total += artifacts.result.planning_time_s;
      if (artifacts.result.status == RunStatus::kSuccess) {
        ++summary.successes;
        costs.push_back(static_cast<double>(artifacts.result.sum_of_costs));
        ticks_total += artifacts.result.ticks;
      }
      if (!config.out_dir.empty()) {
        const std::string stem = config.solver + "_s" + std::to_string(seed);
        const auto emit = [&](const std::string& name,
                              const std::string& body) {
          std::ofstream out(fs::path(config.out_dir) / name);
          out << body;
          if (!out) row.error = "failed to write " + name;
        };
        emit(stem + ".result.json", artifacts.result_json);
        emit(stem + ".timing.json", artifacts.timing_json);
        emit(stem + ".packets.csv", artifacts.packet_csv);
      }
    } catch (const std::exception& e) {
      row.status = "error";
      row.error = e.what();
    }
    row.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0)
            .count();
    // A run cut off by the wall-clock limit reports the limit itself, so
    // capped runs are comparable across machines.
    if (config.time_limit_s > 0)
      row.runtime_s = std::min(row.runtime_s, config.time_limit_s);
    runtimes.push_back(row.runtime_s);
    summary.rows.push_back(std::move(row));
  }
  if (summary.successes > 0) {
    double cost_total = 0.0;
    for (double c : costs) cost_total += c;
    summary.mean_cost = cost_total / summary.successes;
    summary.stddev_cost = stddev_of(costs, summary.mean_cost);
    summary.mean_ticks = static_cast<double>(ticks_total) / summary.successes;
  }
  if (config.runs > 0) {
    double runtime_total = 0.0;
    for (double t : runtimes) runtime_total += t;
    summary.mean_runtime_s = runtime_total / config.runs;
    summary.stddev_runtime_s = stddev_of(runtimes, summary.mean_runtime_s);
    summary.mean_planning_s = planning_total / config.runs;
  }

  ordered_json doc;
  doc["solver"] = config.solver;
  doc["protocol"] = config.protocol;
  doc["range"] = config.range;
  doc["map_path"] = config.map_path;
  doc["agents"] = config.agents;
  doc["tasks"] = config.tasks;
  doc["first_seed"] = config.seed;
  doc["runs"] = summary.runs;
  doc["successes"] = summary.successes;
  doc["mean_cost"] = summary.mean_cost;
  doc["stddev_cost"] = summary.stddev_cost;
  doc["mean_ticks"] = summary.mean_ticks;
  doc["mean_runtime_s"] = summary.mean_runtime_s;
  doc["stddev_runtime_s"] = summary.stddev_runtime_s;
  doc["mean_planning_s"] = summary.mean_planning_s;
  ordered_json rows = ordered_json::array();
  for (const BatchRow& row : summary.rows) {
    ordered_json one;
    one["seed"] = row.seed;
    one["status"] = row.status;
    one["sum_of_costs"] = row.sum_of_costs;
    one["ticks"] = row.ticks;
    one["runtime_s"] = row.runtime_s;
    one["error"] = row.error;
    rows.push_back(std::move(one));
  }
  doc["rows"] = std::move(rows);
  summary.json = doc.dump(2) + "\n";
  if (!config.out_dir.empty())
    std::ofstream(fs::path(config.out_dir) / "summary.json") << summary.json;

  std::ostringstream line;
  line << "solver=" << config.solver << " protocol=" << config.protocol
       << " range=" << config.range << " agents=" << config.agents
       << " tasks=" << config.tasks << " runs=" << summary.runs
       << " success=" << summary.successes << "/" << summary.runs
       << " runtime_s=" << summary.mean_runtime_s << "+/-"
       << summary.stddev_runtime_s << " cost=" << summary.mean_cost << "+/-"
       << summary.stddev_cost;
  summary.report_line = line.str();
  return summary;
}

}  // namespace prism
