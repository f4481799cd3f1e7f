#pragma once

#include "prism/cbs.hpp"
#include "prism/engine.hpp"

namespace prism {

// One-shot joint planning from fixed starts to fixed goals with every agent
// visible to the planner. Paths are collision-free and the total cost is the
// optimum for the instance (unit step costs, agents rest on their goals).
struct CentralizedPlan {
  bool success = false;
  std::map<AgentId, Path> paths;
  long long sum_of_costs = 0;
  CbsStats stats;
};

CentralizedPlan centralized_cbs(const GridMap& map,
                                const std::vector<Vertex>& starts,
                                const std::vector<Vertex>& goals,
                                const CbsLimits& limits = {});

// Token-passing baseline. A single token visits requesting agents in FIFO
// order; the holder claims the unstarted task nearest to it (stealing an
// unpicked assignment only when strictly closer than its current owner) and
// reserves a two-leg path to the task start and on to the goal against every
// other reservation. Agents without work walk their reservations out and park
// at their rest cell — permanently blocking it. Instances where a parked
// agent seals off another agent's task deadlock; that outcome is reported as
// ill_formed.
SimulationResult tpts_run(const GridMap& map,
                          const std::vector<Vertex>& agent_starts,
                          const std::vector<Task>& missions,
                          const EngineLimits& limits = {});

}  // namespace prism
