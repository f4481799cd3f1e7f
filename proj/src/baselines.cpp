#include "prism/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <optional>
#include <stdexcept>

namespace prism {

CentralizedPlan centralized_cbs(const GridMap& map,
                                const std::vector<Vertex>& starts,
                                const std::vector<Vertex>& goals,
                                const CbsLimits& limits) {
  if (starts.size() != goals.size())
    throw std::invalid_argument("starts and goals differ in length");
  CentralizedPlan out;
  std::vector<PlanRequest> requests;
  for (int i = 0; i < static_cast<int>(starts.size()); ++i) {
    PlanRequest req;
    req.id = i;
    req.position = starts[i];
    req.goal = goals[i];
    auto independent = plan_path(map, starts[i], goals[i], 0);
    if (!independent) return out;
    req.current_path = *independent;
    requests.push_back(std::move(req));
  }
  const CbsOutcome joint = modified_cbs(map, requests, {}, 0, limits);
  out.stats = joint.stats;
  if (!joint.success) return out;
  out.success = true;
  for (const auto& [id, plan] : joint.agents) {
    out.paths[id] = plan.path;
    out.sum_of_costs += plan.path.cost();
  }
  return out;
}

namespace {

struct TokenAgent {
  AgentId id = -1;
  Vertex position;
  Vertex rest;
  Path path;                        // the standing reservation
  std::optional<int> mission;       // claimed mission id
  Timestep pickup_time = 0;         // reserved arrival at the mission start
  long long failed_version = -1;    // token state at the last failed attempt
  Timestep last_active = 0;
};

// Everyone else's reservation as planning input: timed occupancy while their
// paths run, then a permanent block where each path ends.
void reservation_tables(const std::vector<TokenAgent>& agents, AgentId self,
                        Timestep now, std::vector<Constraint>& constraints,
                        std::vector<TimedObstacle>& parked) {
  constraints.clear();
  parked.clear();
  for (const auto& other : agents) {
    if (other.id == self) continue;
    const Path& p = other.path;
    const Timestep arrival = p.arrival_time();
    for (Timestep t = now + 1; t <= arrival; ++t)
      constraints.push_back(Constraint::vertex(p.at(t), t, other.id));
    for (Timestep t = now; t < arrival; ++t) {
      const Vertex from = p.at(t);
      const Vertex to = p.at(t + 1);
      if (from != to)
        constraints.push_back(Constraint::edge(to, from, t, other.id));
    }
    parked.push_back(TimedObstacle{p.at(arrival), std::max(arrival, now)});
  }
}

Path concat_legs(const Path& first, const Path& second) {
  Path joined = first;
  joined.steps.insert(joined.steps.end(), second.steps.begin() + 1,
                      second.steps.end());
  return joined;
}

}  // namespace

SimulationResult tpts_run(const GridMap& map,
                          const std::vector<Vertex>& agent_starts,
                          const std::vector<Task>& missions_in,
                          const EngineLimits& limits) {
  const auto wall_start = std::chrono::steady_clock::now();
  SimulationResult result;

  std::vector<Task> missions(missions_in);
  for (int i = 0; i < static_cast<int>(missions.size()); ++i) {
    missions[i].id = i;
    missions[i].kind = Task::Kind::kMission;
    missions[i].state = Task::State::kUnstarted;
    missions[i].assignee = -1;
  }

  const int n = static_cast<int>(agent_starts.size());
  std::vector<TokenAgent> agents(n);
  std::deque<AgentId> queue;
  for (int i = 0; i < n; ++i) {
    agents[i].id = i;
    agents[i].position = agent_starts[i];
    agents[i].rest = agent_starts[i];
    agents[i].path = Path{0, {agent_starts[i]}};
    queue.push_back(i);
  }
  result.trajectories.resize(n);
  for (int i = 0; i < n; ++i) result.trajectories[i] = {agent_starts[i]};

  long long version = 0;  // bumped whenever any reservation changes
  Timestep clock = 0;
  long long stall_ticks = 0;
  const long long stall_limit =
      static_cast<long long>(limits.stall_factor) * map.size();

  auto all_done = [&] {
    return std::all_of(missions.begin(), missions.end(), [](const Task& m) {
      return m.state == Task::State::kDone;
    });
  };
  auto no_future_motion = [&] {
    return std::all_of(agents.begin(), agents.end(), [&](const TokenAgent& a) {
      return clock >= a.path.arrival_time();
    });
  };
  auto finish = [&](RunStatus status) {
    result.status = status;
    result.ticks = clock;
    for (const auto& a : agents) result.sum_of_costs += a.last_active;
    result.planning_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      wall_start)
            .count();
    return result;
  };

  std::vector<Constraint> constraints;
  std::vector<TimedObstacle> parked;

  while (true) {
    // Token phase: the queue holds every agent wanting work, FIFO. An agent
    // either claims a task (and leaves the queue), re-parks toward its rest
    // cell, or stays queued until the token state changes.
    std::deque<AgentId> blocked;
    while (!queue.empty()) {
      const AgentId id = queue.front();
      queue.pop_front();
      TokenAgent& me = agents[id];
      if (me.failed_version == version) {
        blocked.push_back(id);
        continue;
      }

      std::vector<int> candidates;
      for (const auto& m : missions) {
        if (m.state != Task::State::kUnstarted) continue;
        if (m.assignee >= 0) {
          const TokenAgent& owner = agents[m.assignee];
          if (manhattan(me.position, m.start) >=
              manhattan(owner.position, m.start))
            continue;  // stealing needs a strict improvement
        }
        candidates.push_back(m.id);
      }
      std::sort(candidates.begin(), candidates.end(), [&](int a, int b) {
        const int da = manhattan(me.position, missions[a].start);
        const int db = manhattan(me.position, missions[b].start);
        return da != db ? da < db : a < b;
      });

      bool claimed = false;
      for (int mid : candidates) {
        // Taking over someone else's unstarted task halts that agent where it
        // stands; it replans for itself later in this same phase. The halt is
        // legal only if its seat stays clear of every other reservation, and
        // the takeover only goes through if both legs plan against the halted
        // picture — otherwise everything is rolled back untouched.
        TokenAgent* owner =
            missions[mid].assignee >= 0 ? &agents[missions[mid].assignee] : nullptr;
        Path owner_saved;
        if (owner) {
          bool seat_clear = true;
          for (const auto& other : agents) {
            if (other.id == owner->id || other.id == id) continue;
            const Timestep arrival = other.path.arrival_time();
            for (Timestep t = clock; t <= arrival && seat_clear; ++t)
              if (other.path.at(t) == owner->position) seat_clear = false;
            if (other.path.at(arrival) == owner->position) seat_clear = false;
            if (!seat_clear) break;
          }
          if (!seat_clear) continue;
          owner_saved = owner->path;
          owner->path = Path{clock, {owner->position}};
        }
        reservation_tables(agents, id, clock, constraints, parked);
        result.lowlevel_calls += 2;
        auto leg1 = plan_path(map, me.position, missions[mid].start, clock,
                              constraints, {}, parked);
        auto leg2 = leg1 ? plan_path(map, missions[mid].start,
                                     missions[mid].goal, leg1->arrival_time(),
                                     constraints, {}, parked)
                         : std::nullopt;
        if (!leg1 || !leg2) {
          if (owner) owner->path = std::move(owner_saved);
          continue;
        }
        if (owner) {
          owner->mission.reset();
          owner->failed_version = -1;
          queue.push_back(owner->id);  // displaced; replans this same phase
        }
        missions[mid].assignee = id;
        me.mission = mid;
        me.pickup_time = leg1->arrival_time();
        me.path = concat_legs(*leg1, *leg2);
        ++version;
        claimed = true;
        break;
      }
      if (claimed) continue;

      me.failed_version = version;
      // No work available: re-park toward the rest cell when off it, but
      // never cut a standing reservation others already planned around.
      if (clock >= me.path.arrival_time() && me.position != me.rest) {
        reservation_tables(agents, id, clock, constraints, parked);
        ++result.lowlevel_calls;
        if (auto home = plan_path(map, me.position, me.rest, clock,
                                  constraints, {}, parked)) {
          me.path = *home;
          ++version;
        }
      }
      blocked.push_back(id);
    }
    queue = std::move(blocked);

    if (all_done() && no_future_motion()) return finish(RunStatus::kSuccess);
    if (!all_done() && no_future_motion()) {
      const bool retry_pending =
          std::any_of(queue.begin(), queue.end(), [&](AgentId id) {
            return agents[id].failed_version != version;
          });
      if (!retry_pending) return finish(RunStatus::kIllFormed);
    }
    if (clock >= limits.max_ticks) return finish(RunStatus::kTimeout);
    if (limits.wall_clock_limit_s > 0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      wall_start)
                .count() > limits.wall_clock_limit_s)
      return finish(RunStatus::kTimeout);

    // Motion phase: everyone advances one step along their reservation.
    ++clock;
    const long long version_before = version;
    bool moved = false;
    bool completed = false;
    for (auto& me : agents) {
      const Vertex next = me.path.at(clock);
      if (next != me.position) moved = true;
      me.position = next;
      result.trajectories[me.id].push_back(next);
      if (me.mission) {
        Task& m = missions[*me.mission];
        if (m.state == Task::State::kUnstarted && clock >= me.pickup_time)
          m.state = Task::State::kStarted;
        if (clock >= me.path.arrival_time() && me.position == m.goal) {
          m.state = Task::State::kDone;
          me.rest = m.goal;
          me.mission.reset();
          me.failed_version = -1;
          ++version;
          queue.push_back(me.id);
          completed = true;
        }
      }
      const bool parked_home =
          !me.mission && me.position == me.rest && clock >= me.path.arrival_time();
      if (me.mission || !parked_home ||
          me.position != result.trajectories[me.id][clock - 1])
        me.last_active = clock;
    }
    if (!moved && !completed && version == version_before)
      ++stall_ticks;
    else
      stall_ticks = 0;
    if (stall_ticks >= stall_limit) return finish(RunStatus::kStalled);
  }
}

}  // namespace prism
