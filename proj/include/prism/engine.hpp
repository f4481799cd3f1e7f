#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "prism/cbs.hpp"
#include "prism/comms.hpp"

namespace prism {

struct EngineLimits {
  int max_ticks = 100000;
  double wall_clock_limit_s = 0.0;  // <= 0 means unlimited
  // Abort after stall_factor * map cells consecutive ticks with no motion,
  // no completion, and no new assignment.
  int stall_factor = 4;
  CbsLimits cbs;
};

enum class RunStatus { kSuccess, kStalled, kTimeout, kIllFormed };
std::string to_string(RunStatus status);

struct PacketTraceRow {
  Timestep tick = 0;
  AgentId agent = -1;
  int bounded = 0;
  int infinite = 0;
};

struct SimulationResult {
  RunStatus status = RunStatus::kSuccess;
  long long sum_of_costs = 0;
  Timestep ticks = 0;
  double planning_time_s = 0.0;   // wall clock inside conflict-tree planning
  double allocator_time_s = 0.0;  // wall clock inside task allocation
  int cbs_calls = 0;
  int ct_nodes_expanded = 0;
  int lowlevel_calls = 0;
  int packets_bounded_created = 0;
  int packets_infinite_created = 0;
  std::vector<std::vector<Vertex>> trajectories;  // [agent][clock]
  std::vector<PacketTraceRow> packet_trace;       // per agent per tick
  std::vector<std::string> invariant_violations;
};

// Vertex/edge collisions in executed trajectories; empty means safe motion.
std::vector<std::string> replay_conflicts(
    const std::vector<std::vector<Vertex>>& trajectories);

struct AgentState {
  AgentId id = -1;
  Vertex position;
  Vertex rest_position;  // initial cell, later each finished mission's goal
  std::optional<Task> objective;       // live transition or mission leg
  std::optional<int> pending_mission;  // mission to start when the leg ends
  Path path;
  std::vector<Constraint> constraints;
  std::vector<InfoPacket> packets;
  Timestep last_active = 0;
};

// Online decentralized execution: per tick, agents advance one step, finished
// tasks hand out new ones, communication networks are recomputed with packet
// exchange at separations, and every network whose membership or workload
// changed replans jointly before anyone moves again.
class Engine {
 public:
  Engine(GridMap map, std::vector<Vertex> agent_starts,
         std::vector<Task> missions, CommsConfig comms,
         EngineLimits limits = {});

  SimulationResult run();

  // Stepwise interface for tests.
  void initialize();
  void tick();
  bool finished() const;

  Timestep clock() const { return clock_; }
  const GridMap& map() const { return map_; }
  const std::vector<AgentState>& agents() const { return agents_; }
  const std::vector<Task>& missions() const { return missions_; }
  const NetworkPartition& partition() const { return partition_; }
  bool at_rest(const AgentState& agent) const;
  int cbs_calls() const { return cbs_calls_; }

  // Result assembled from the current state (used by run and by tests).
  SimulationResult snapshot(RunStatus status) const;

 private:
  void validate_instance() const;
  void step_phase();
  void allocate_phase();
  void update_phase();
  void plan_phase();
  void finish_tick();

  void assign_objective(AgentState& agent, const Task& mission);
  void drop_objective(AgentState& agent);
  void complete_objective(AgentState& agent);
  void plan_unconstrained(AgentState& agent, Vertex goal);
  void flush_for_task_change(AgentState& agent);
  PacketAgentView view_of(const AgentState& agent) const;
  std::vector<Vertex> private_obstacles(const AgentState& agent) const;
  void plan_network(const std::vector<AgentId>& members);
  void check_invariants();

  GridMap map_;
  CommsConfig comms_;
  EngineLimits limits_;
  std::vector<AgentState> agents_;
  std::vector<Task> missions_;
  std::vector<std::vector<Vertex>> trajectories_;
  std::vector<PacketTraceRow> trace_;
  std::vector<std::string> violations_;

  Timestep clock_ = 0;
  NetworkPartition partition_;
  std::map<AgentId, std::vector<AgentId>> previous_members_;
  std::set<AgentId> requesters_;
  std::set<AgentId> task_changed_;
  std::set<AgentId> replan_pending_;  // members of networks whose plan failed
  std::set<AgentId> marked_networks_;

  bool initialized_ = false;
  bool moved_this_tick_ = false;
  bool completed_this_tick_ = false;
  bool assigned_this_tick_ = false;
  std::vector<char> had_objective_;  // objective held at tick start, by agent
  long long stall_ticks_ = 0;

  int cbs_calls_ = 0;
  int ct_nodes_expanded_ = 0;
  int lowlevel_calls_ = 0;
  int packets_bounded_created_ = 0;
  int packets_infinite_created_ = 0;
  double planning_time_s_ = 0.0;
  double allocator_time_s_ = 0.0;
};

}  // namespace prism
