#pragma once

#include <map>
#include <optional>
#include <vector>

#include "prism/env.hpp"

namespace prism {

// One unit of work. Missions come from the instance; transitions are the
// per-agent legs from wherever an agent stands to its mission's start.
struct Task {
  enum class Kind { kMission, kTransition };
  enum class State { kUnstarted, kStarted, kDone };

  int id = -1;
  Vertex start;
  Vertex goal;
  Kind kind = Kind::kMission;
  State state = State::kUnstarted;
  AgentId assignee = -1;

  bool operator==(const Task& o) const {
    return id == o.id && start == o.start && goal == o.goal && kind == o.kind &&
           state == o.state && assignee == o.assignee;
  }
};

std::string to_string(const Task& t);

// What the allocator sees of one agent. Only requesters and holders of
// not-yet-started missions take part; everyone else is out of the market.
struct AllocatorAgent {
  AgentId id = -1;
  Vertex position;
  bool requesting = false;
  std::optional<int> assigned_unstarted;  // id of a held unstarted mission
};

// Desired holders of every unstarted mission after this allocation round:
// greedy nearest-start matching for requesters (Manhattan, ties to the lower
// task id, requesters in ascending id order), then an improvement pass —
// transfers to idle market agents and pairwise exchanges — run to a fixed
// point, capped at one pass per agent. A mission absent from the result stays
// in the pool; an agent absent from the result holds nothing afterwards.
std::map<AgentId, Task> allocate_tasks(const std::vector<Task>& unstarted,
                                       const std::vector<AllocatorAgent>& agents);

// The allocator's objective for a given assignment, for tests and diagnostics:
// lexicographic (unassigned task count, sum of Manhattan start distances).
std::pair<int, long long> assignment_objective(
    const std::vector<Task>& unstarted, const std::vector<AllocatorAgent>& agents,
    const std::map<AgentId, Task>& assignment);

}  // namespace prism
