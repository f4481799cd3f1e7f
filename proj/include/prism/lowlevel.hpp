#pragma once

#include <optional>
#include <vector>

#include "prism/env.hpp"

namespace prism {

// Space-time motion constraint produced by conflict resolution.
struct Constraint {
  enum class Kind { kVertex, kEdge };

  Kind kind = Kind::kVertex;
  Vertex cell;        // vertex: the forbidden cell; edge: the departure cell
  Vertex to;          // edge only: the arrival cell
  Timestep time = 0;  // vertex: forbidden occupancy time; edge: departure time
  AgentId source = -1;  // agent whose path this constraint protects

  static Constraint vertex(Vertex v, Timestep t, AgentId src) {
    Constraint c;
    c.kind = Kind::kVertex;
    c.cell = v;
    c.time = t;
    c.source = src;
    return c;
  }
  static Constraint edge(Vertex from, Vertex dest, Timestep t, AgentId src) {
    Constraint c;
    c.kind = Kind::kEdge;
    c.cell = from;
    c.to = dest;
    c.time = t;
    c.source = src;
    return c;
  }

  bool operator==(const Constraint& o) const {
    return kind == o.kind && cell == o.cell && to == o.to && time == o.time &&
           source == o.source;
  }
  bool operator<(const Constraint& o) const {
    if (time != o.time) return time < o.time;
    if (kind != o.kind) return kind < o.kind;
    if (!(cell == o.cell)) return cell < o.cell;
    if (!(to == o.to)) return to < o.to;
    return source < o.source;
  }
};

std::string to_string(const Constraint& c);

// Timed sequence of cells; one entry per timestep starting at start_time.
// An agent rests at the final cell forever after the path ends.
struct Path {
  Timestep start_time = 0;
  std::vector<Vertex> steps;

  bool valid() const { return !steps.empty(); }
  Timestep arrival_time() const {
    return start_time + static_cast<Timestep>(steps.size()) - 1;
  }
  int cost() const { return static_cast<int>(steps.size()) - 1; }

  // Occupancy at any absolute time, rest-extended on both ends.
  Vertex at(Timestep t) const {
    if (t <= start_time) return steps.front();
    size_t k = static_cast<size_t>(t - start_time);
    return k >= steps.size() ? steps.back() : steps[k];
  }

  // The remaining path re-rooted at time t (clamped into the path's span).
  Path suffix_from(Timestep t) const;

  bool operator==(const Path& o) const {
    return start_time == o.start_time && steps == o.steps;
  }
};

// Cells that are never enterable for one agent's searches (private obstacles).
struct StaticObstacleSet {
  std::vector<Vertex> cells;
};

// Cell blocked for every timestep >= from (an agent parked there for good).
struct TimedObstacle {
  Vertex cell;
  Timestep from = 0;
};

// Standard search bound: latest constrained time plus one sweep of the map per
// moving body, so a feasible path is never cut off by the cap.
Timestep plan_horizon(const GridMap& map, int bodies, Timestep start_time,
                      const std::vector<Constraint>& constraints);

// Optimal single-agent plan on the time-expanded grid.
//
// Vertex constraints bind at times strictly after start_time (the start cell is
// an executed fact); edge constraints bind at departure times >= start_time.
// The arrival time is pushed past the last vertex constraint on the goal so
// resting at the goal is safe forever. Among all minimum-cost paths the
// lexicographically smallest position sequence (ordered by (y, x) per step) is
// returned, which makes the suffix from any intermediate state identical to a
// fresh plan from that state — the property packet-based reconstruction needs.
// Returns nullopt when no path exists within the horizon.
std::optional<Path> plan_path(const GridMap& map, Vertex start, Vertex goal,
                              Timestep start_time,
                              const std::vector<Constraint>& constraints = {},
                              const StaticObstacleSet& obstacles = {},
                              const std::vector<TimedObstacle>& parked = {},
                              std::optional<Timestep> horizon = std::nullopt);

}  // namespace prism
