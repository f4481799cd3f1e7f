#include "doctest.h"

#include <algorithm>

#include "oracles.hpp"
#include "prism/harness.hpp"
#include "prism/lowlevel.hpp"

using namespace prism;

namespace {

const GridMap kCorridor4 = oracle::grid_from({"...."});
const GridMap kOpen3 = oracle::grid_from({"...", "...", "..."});

}  // namespace

TEST_CASE("straight corridor plan is the direct walk") {
  const auto path = plan_path(kCorridor4, {0, 0}, {3, 0}, 0);
  REQUIRE(path.has_value());
  CHECK(path->steps.size() == 4);
  CHECK(path->cost() == 3);
  CHECK(path->steps.front() == Vertex{0, 0});
  CHECK(path->steps.back() == Vertex{3, 0});
}

TEST_CASE("a vertex constraint costs one wait in the corridor") {
  const std::vector<Constraint> cstr = {Constraint::vertex({1, 0}, 1, 9)};
  const auto path = plan_path(kCorridor4, {0, 0}, {3, 0}, 0, cstr);
  REQUIRE(path.has_value());
  CHECK(path->cost() == 4);
  CHECK(path->at(1) != Vertex{1, 0});
  CHECK(oracle::shortest_cost(kCorridor4, {0, 0}, {3, 0}, 0, cstr) == 4);
  CHECK(oracle::check_path(kCorridor4, *path, {0, 0}, {3, 0}, 0, cstr).empty());
}

TEST_CASE("start equal to goal is a zero-cost singleton") {
  const auto path = plan_path(kOpen3, {1, 1}, {1, 1}, 0);
  REQUIRE(path.has_value());
  CHECK(path->steps.size() == 1);
  CHECK(path->cost() == 0);
}

TEST_CASE("goal walled off by private obstacles is infeasible") {
  StaticObstacleSet walls;
  walls.cells = {{2, 1}, {1, 2}};  // seals corner (2,2) of the open 3x3
  CHECK_FALSE(plan_path(kOpen3, {0, 0}, {2, 2}, 0, {}, walls).has_value());
}

TEST_CASE("goal rest is pushed past the last goal constraint") {
  const std::vector<Constraint> cstr = {Constraint::vertex({3, 0}, 5, 9)};
  const auto path = plan_path(kCorridor4, {0, 0}, {3, 0}, 0, cstr);
  REQUIRE(path.has_value());
  CHECK(path->arrival_time() == 6);
  CHECK(path->cost() == 6);
  CHECK(oracle::shortest_cost(kCorridor4, {0, 0}, {3, 0}, 0, cstr) == 6);
}

TEST_CASE("waiting into a constrained cell is forbidden") {
  // Both cells blocked at t=1: no legal occupancy exists at that timestep.
  const std::vector<Constraint> cstr = {Constraint::vertex({0, 0}, 1, 8),
                                        Constraint::vertex({1, 0}, 1, 9)};
  const GridMap two = oracle::grid_from({".."});
  CHECK_FALSE(plan_path(two, {0, 0}, {1, 0}, 0, cstr).has_value());
  CHECK_FALSE(oracle::shortest_cost(two, {0, 0}, {1, 0}, 0, cstr).has_value());
}

TEST_CASE("edge constraints block only the constrained direction") {
  const std::vector<Constraint> out = {Constraint::edge({0, 0}, {1, 0}, 0, 9)};
  const auto path = plan_path(kCorridor4, {0, 0}, {3, 0}, 0, out);
  REQUIRE(path.has_value());
  CHECK(path->cost() == 4);  // wait once, then walk

  const std::vector<Constraint> back = {Constraint::edge({1, 0}, {0, 0}, 0, 9)};
  const auto unaffected = plan_path(kCorridor4, {0, 0}, {3, 0}, 0, back);
  REQUIRE(unaffected.has_value());
  CHECK(unaffected->cost() == 3);
}

TEST_CASE("the start cell is an executed fact, not a constraint target") {
  const std::vector<Constraint> cstr = {Constraint::vertex({0, 0}, 4, 9)};
  const auto path = plan_path(kCorridor4, {0, 0}, {3, 0}, 4, cstr);
  REQUIRE(path.has_value());
  CHECK(path->start_time == 4);
  CHECK(path->steps.front() == Vertex{0, 0});
  CHECK(path->cost() == 3);
}

TEST_CASE("parked cells act as walls from their activation time") {
  const std::vector<TimedObstacle> now = {{{2, 0}, 0}};
  CHECK_FALSE(plan_path(kCorridor4, {0, 0}, {3, 0}, 0, {}, {}, now).has_value());

  // Activation far in the future: the agent slips through first.
  const std::vector<TimedObstacle> later = {{{2, 0}, 10}};
  const auto path = plan_path(kCorridor4, {0, 0}, {3, 0}, 0, {}, {}, later);
  REQUIRE(path.has_value());
  CHECK(path->cost() == 3);

  // Parked on the goal: resting there forever is impossible.
  const std::vector<TimedObstacle> on_goal = {{{3, 0}, 10}};
  CHECK_FALSE(
      plan_path(kCorridor4, {0, 0}, {3, 0}, 0, {}, {}, on_goal).has_value());
}

TEST_CASE("deterministic lexicographic tie-breaking") {
  const auto path = plan_path(kOpen3, {0, 0}, {2, 2}, 0);
  REQUIRE(path.has_value());
  const std::vector<Vertex> expected = {{0, 0}, {1, 0}, {2, 0}, {2, 1}, {2, 2}};
  CHECK(path->steps == expected);
  const auto again = plan_path(kOpen3, {0, 0}, {2, 2}, 0);
  CHECK(path->steps == again->steps);
}

TEST_CASE("plan horizon covers the map sweep and every constraint") {
  const std::vector<Constraint> cstr = {Constraint::vertex({1, 0}, 40, 9)};
  const Timestep h = plan_horizon(kCorridor4, 3, 5, cstr);
  CHECK(h > 40);
  CHECK(h >= 5 + 3 * kCorridor4.passable_count());
}

TEST_CASE("suffix_from re-roots a path") {
  const Path path{2, {{0, 0}, {1, 0}, {1, 0}, {2, 0}}};
  const Path mid = path.suffix_from(4);
  CHECK(mid.start_time == 4);
  CHECK(mid.steps == std::vector<Vertex>{{1, 0}, {2, 0}});
  CHECK(path.suffix_from(0) == path);        // clamped before the start
  const Path after = path.suffix_from(99);   // clamped to the resting tail
  CHECK(after.steps == std::vector<Vertex>{{2, 0}});
  CHECK(after.start_time == 99);
}

TEST_CASE("randomized plans match the time-expanded oracle") {
  Rng rng(4242);
  int feasible = 0, infeasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int w = rng.range(2, 6), h = rng.range(2, 6);
    const GridMap map = generate_obstacle_map(w, h, 0.2, rng.next_u64());
    const auto pool = largest_component(map);
    if (pool.size() < 2) continue;
    Rng draw(rng.next_u64());
    const Vertex start = pool[draw.uniform(static_cast<int>(pool.size()))];
    const Vertex goal = pool[draw.uniform(static_cast<int>(pool.size()))];
    const Timestep start_time = draw.uniform(3);

    // A third of the trials scatter private walls; some of those cut the
    // goal off entirely, exercising the infeasible verdict on both sides.
    StaticObstacleSet walls;
    if (draw.uniform(3) == 0) {
      const int n_walls = draw.range(1, 4);
      for (int k = 0; k < n_walls; ++k) {
        const Vertex cell = pool[draw.uniform(static_cast<int>(pool.size()))];
        if (cell != start && cell != goal) walls.cells.push_back(cell);
      }
    }

    std::vector<Constraint> cstr;
    const int n_cstr = draw.uniform(9);
    for (int k = 0; k < n_cstr; ++k) {
      const Vertex cell = pool[draw.uniform(static_cast<int>(pool.size()))];
      const Timestep t = start_time + draw.range(0, 10);
      if (draw.uniform(2) == 0) {
        cstr.push_back(Constraint::vertex(cell, t, 99));
      } else {
        const auto ns = map.neighbors(cell);
        if (ns.empty()) continue;
        cstr.push_back(Constraint::edge(
            cell, ns[draw.uniform(static_cast<int>(ns.size()))], t, 99));
      }
    }

    const auto got = plan_path(map, start, goal, start_time, cstr, walls);
    const auto want =
        oracle::shortest_cost(map, start, goal, start_time, cstr, walls);
    if (!want.has_value()) {
      ++infeasible;
      CHECK_FALSE(got.has_value());
      continue;
    }
    ++feasible;
    REQUIRE(got.has_value());
    CHECK(got->cost() == *want);
    const auto problems =
        oracle::check_path(map, *got, start, goal, start_time, cstr, walls);
    INFO("first violation: " << (problems.empty() ? "" : problems.front()));
    CHECK(problems.empty());

    // Monotonicity: one more constraint never makes the plan cheaper.
    if (!got->steps.empty()) {
      const Timestep hit = start_time + 1 + draw.uniform(got->cost() + 1);
      auto grown = cstr;
      grown.push_back(Constraint::vertex(got->at(hit), hit, 98));
      const auto tighter = plan_path(map, start, goal, start_time, grown, walls);
      if (tighter.has_value()) CHECK(tighter->cost() >= got->cost());
    }

    // Canonical suffix: replanning from any intermediate state reproduces
    // the tail of the original plan exactly.
    const Timestep probe =
        start_time + draw.uniform(static_cast<int>(got->steps.size()));
    const auto replan = plan_path(map, got->at(probe), goal, probe, cstr, walls);
    REQUIRE(replan.has_value());
    CHECK(*replan == got->suffix_from(probe));
  }
  // The sampler must exercise both outcomes for the comparison to mean much.
  CHECK(feasible > 100);
  CHECK(infeasible > 5);
}
