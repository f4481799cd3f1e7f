#include "prism/engine.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace prism {
namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

std::string cell_text(Vertex v) {
  std::ostringstream out;
  out << "(" << v.x << "," << v.y << ")";
  return out.str();
}

}  // namespace

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::kSuccess:
      return "success";
    case RunStatus::kStalled:
      return "stalled";
    case RunStatus::kTimeout:
      return "timeout";
    case RunStatus::kIllFormed:
      return "ill_formed";
  }
  return "unknown";
}

std::vector<std::string> replay_conflicts(
    const std::vector<std::vector<Vertex>>& trajectories) {
  std::vector<std::string> out;
  const int n = static_cast<int>(trajectories.size());
  Timestep horizon = 0;
  for (const auto& t : trajectories)
    horizon = std::max<Timestep>(horizon, static_cast<Timestep>(t.size()));
  auto at = [&](int i, Timestep t) {
    const auto& traj = trajectories[i];
    if (traj.empty()) return Vertex{0, 0};
    if (t < static_cast<Timestep>(traj.size())) return traj[t];
    return traj.back();
  };
  for (Timestep t = 0; t < horizon; ++t) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (at(i, t) == at(j, t)) {
          std::ostringstream msg;
          msg << "vertex collision: agents " << i << "," << j << " at "
              << cell_text(at(i, t)) << " t=" << t;
          out.push_back(msg.str());
        }
        if (t > 0 && at(i, t) == at(j, t - 1) && at(j, t) == at(i, t - 1) &&
            at(i, t) != at(i, t - 1)) {
          std::ostringstream msg;
          msg << "edge collision: agents " << i << "," << j << " swap "
              << cell_text(at(i, t - 1)) << "<->" << cell_text(at(j, t - 1))
              << " t=" << t - 1;
          out.push_back(msg.str());
        }
      }
    }
  }
  return out;
}

Engine::Engine(GridMap map, std::vector<Vertex> agent_starts,
               std::vector<Task> missions, CommsConfig comms,
               EngineLimits limits)
    : map_(std::move(map)), comms_(comms), limits_(limits) {
  agents_.resize(agent_starts.size());
  trajectories_.resize(agent_starts.size());
  for (int i = 0; i < static_cast<int>(agent_starts.size()); ++i) {
    agents_[i].id = i;
    agents_[i].position = agent_starts[i];
    agents_[i].rest_position = agent_starts[i];
    agents_[i].path = Path{0, {agent_starts[i]}};
  }
  missions_.resize(missions.size());
  for (int i = 0; i < static_cast<int>(missions.size()); ++i) {
    missions_[i] = missions[i];
    missions_[i].id = i;
    missions_[i].kind = Task::Kind::kMission;
    missions_[i].state = Task::State::kUnstarted;
    missions_[i].assignee = -1;
  }
  validate_instance();
}

void Engine::validate_instance() const {
  std::set<Vertex> starts;
  for (const auto& a : agents_) {
    if (!map_.in_bounds(a.position) || !map_.passable(a.position))
      throw std::invalid_argument("agent " + std::to_string(a.id) +
                                  " starts on an impassable cell " +
                                  cell_text(a.position));
    if (!starts.insert(a.position).second)
      throw std::invalid_argument("two agents share start cell " +
                                  cell_text(a.position));
  }
  std::set<Vertex> endpoints;
  for (const auto& m : missions_) {
    for (Vertex v : {m.start, m.goal}) {
      if (!map_.in_bounds(v) || !map_.passable(v))
        throw std::invalid_argument("task " + std::to_string(m.id) +
                                    " uses an impassable cell " + cell_text(v));
      if (!endpoints.insert(v).second)
        throw std::invalid_argument("task endpoints are not pairwise distinct: " +
                                    cell_text(v));
    }
  }
}

bool Engine::at_rest(const AgentState& agent) const {
  return !agent.objective && agent.position == agent.rest_position &&
         clock_ >= agent.path.arrival_time();
}

bool Engine::finished() const {
  for (const auto& m : missions_)
    if (m.state != Task::State::kDone) return false;
  for (const auto& a : agents_)
    if (!at_rest(a)) return false;
  return true;
}

std::vector<Vertex> Engine::private_obstacles(const AgentState& agent) const {
  std::vector<Vertex> cells;
  for (const auto& p : agent.packets)
    if (p.infinite()) cells.push_back(p.subject_position);
  return cells;
}

PacketAgentView Engine::view_of(const AgentState& agent) const {
  PacketAgentView view;
  view.id = agent.id;
  view.position = agent.position;
  view.goal = agent.objective ? agent.objective->goal : agent.rest_position;
  view.at_rest = at_rest(agent);
  view.has_active_task = agent.objective.has_value();
  if (agent.objective) view.task = *agent.objective;
  view.constraints = agent.constraints;
  view.private_obstacles = private_obstacles(agent);
  view.infinite_packets_held = 0;
  for (const auto& p : agent.packets)
    if (p.infinite()) ++view.infinite_packets_held;
  view.fleet_size = static_cast<int>(agents_.size());
  return view;
}

void Engine::plan_unconstrained(AgentState& agent, Vertex goal) {
  ++lowlevel_calls_;
  auto path = plan_path(map_, agent.position, goal, clock_, {},
                        StaticObstacleSet{private_obstacles(agent)});
  agent.path = path ? *path : Path{clock_, {agent.position}};
}

void Engine::flush_for_task_change(AgentState& agent) {
  agent.packets.clear();
  agent.constraints.clear();
}

void Engine::assign_objective(AgentState& agent, const Task& mission) {
  Task& stored = missions_[mission.id];
  stored.assignee = agent.id;
  flush_for_task_change(agent);
  task_changed_.insert(agent.id);
  assigned_this_tick_ = true;
  if (agent.position == stored.start) {
    stored.state = Task::State::kStarted;
    agent.pending_mission.reset();
    agent.objective = stored;
  } else {
    agent.pending_mission = stored.id;
    Task leg;
    leg.id = stored.id;
    leg.kind = Task::Kind::kTransition;
    leg.state = Task::State::kStarted;
    leg.start = agent.position;
    leg.goal = stored.start;
    leg.assignee = agent.id;
    agent.objective = leg;
  }
  plan_unconstrained(agent, agent.objective->goal);
}

void Engine::drop_objective(AgentState& agent) {
  if (agent.pending_mission) {
    Task& stored = missions_[*agent.pending_mission];
    if (stored.assignee == agent.id) stored.assignee = -1;
  }
  agent.pending_mission.reset();
  agent.objective.reset();
  flush_for_task_change(agent);
  task_changed_.insert(agent.id);
  assigned_this_tick_ = true;
  if (agent.position == agent.rest_position)
    agent.path = Path{clock_, {agent.position}};
  else
    plan_unconstrained(agent, agent.rest_position);
}

void Engine::complete_objective(AgentState& agent) {
  completed_this_tick_ = true;
  const Task finished_leg = *agent.objective;
  if (finished_leg.kind == Task::Kind::kTransition) {
    Task& stored = missions_[*agent.pending_mission];
    stored.state = Task::State::kStarted;
    agent.pending_mission.reset();
    agent.objective = stored;
    flush_for_task_change(agent);
    task_changed_.insert(agent.id);
    plan_unconstrained(agent, stored.goal);
  } else {
    Task& stored = missions_[finished_leg.id];
    stored.state = Task::State::kDone;
    agent.rest_position = finished_leg.goal;
    agent.objective.reset();
    agent.pending_mission.reset();
    flush_for_task_change(agent);
    task_changed_.insert(agent.id);
    agent.path = Path{clock_, {agent.position}};
    requesters_.insert(agent.id);
  }
}

void Engine::step_phase() {
  for (auto& agent : agents_) {
    const Vertex next = agent.path.at(clock_);
    if (next != agent.position) moved_this_tick_ = true;
    agent.position = next;
    trajectories_[agent.id].push_back(next);
  }
  for (auto& agent : agents_) {
    if (agent.objective && clock_ >= agent.path.arrival_time() &&
        agent.position == agent.objective->goal)
      complete_objective(agent);
  }
  for (auto& agent : agents_) flush_expired(agent.packets, clock_);
}

void Engine::allocate_phase() {
  if (requesters_.empty()) return;
  std::vector<Task> unstarted;
  for (const auto& m : missions_)
    if (m.state == Task::State::kUnstarted) unstarted.push_back(m);
  std::vector<AllocatorAgent> market;
  market.reserve(agents_.size());
  for (const auto& agent : agents_) {
    AllocatorAgent a;
    a.id = agent.id;
    a.position = agent.position;
    a.requesting = requesters_.count(agent.id) > 0;
    if (agent.objective && agent.objective->kind == Task::Kind::kTransition)
      a.assigned_unstarted = agent.pending_mission;
    market.push_back(a);
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto assignment = allocate_tasks(unstarted, market);
  allocator_time_s_ += seconds_since(t0);
  requesters_.clear();

  // Releases first so reassigned missions change hands consistently.
  for (auto& agent : agents_) {
    if (!agent.pending_mission) continue;
    auto it = assignment.find(agent.id);
    if (it == assignment.end() || it->second.id != *agent.pending_mission)
      drop_objective(agent);
  }
  for (const auto& [id, task] : assignment) {
    AgentState& agent = agents_[id];
    if (agent.pending_mission && *agent.pending_mission == task.id) continue;
    assign_objective(agent, missions_[task.id]);
  }
}

void Engine::update_phase() {
  std::map<AgentId, Vertex> positions;
  for (const auto& agent : agents_) positions[agent.id] = agent.position;
  partition_ = compute_networks(comms_, map_, positions);

  // Packet exchange for every pair that was together and is now apart.
  for (const auto& first : agents_) {
    auto prev = previous_members_.find(first.id);
    if (prev == previous_members_.end()) continue;
    for (AgentId other : prev->second) {
      if (other <= first.id) continue;
      if (partition_.network_of.at(first.id) ==
          partition_.network_of.at(other))
        continue;
      const AgentState& second = agents_[other];
      const auto packets = create_packets_on_separation(
          map_, view_of(first), view_of(second), clock_);
      for (const auto& [holder, pkt] :
           {std::pair<AgentId, const std::optional<InfoPacket>&>{
                first.id, packets.for_first},
            std::pair<AgentId, const std::optional<InfoPacket>&>{
                second.id, packets.for_second}}) {
        if (!pkt) continue;
        agents_[holder].packets.push_back(*pkt);
        if (pkt->infinite()) {
          ++packets_infinite_created_;
        } else {
          ++packets_bounded_created_;
          // A holder must be able to rebuild the subject's remaining path
          // from the snapshot alone.
          const AgentState& subject = agents_[pkt->subject];
          const Vertex subject_goal = subject.objective
                                          ? subject.objective->goal
                                          : subject.rest_position;
          if (!subject.path.steps.empty() &&
              subject.path.steps.back() == subject_goal) {
            ++lowlevel_calls_;
            const Path rebuilt = expand_packet_path(*pkt, map_);
            if (!(rebuilt == subject.path.suffix_from(clock_))) {
              std::ostringstream msg;
              msg << "tick " << clock_ << ": packet about agent "
                  << pkt->subject << " held by " << holder
                  << " does not rebuild the subject's path";
              violations_.push_back(msg.str());
            }
          }
        }
      }
    }
  }

  // Replan triggers: changed membership, changed workload, failed last plan.
  for (const auto& agent : agents_) {
    auto prev = previous_members_.find(agent.id);
    if (prev == previous_members_.end() ||
        prev->second != partition_.members_of(agent.id))
      marked_networks_.insert(partition_.network_of.at(agent.id));
  }
  for (AgentId id : task_changed_)
    marked_networks_.insert(partition_.network_of.at(id));
  task_changed_.clear();
  for (AgentId id : replan_pending_)
    marked_networks_.insert(partition_.network_of.at(id));

  // Direct contact supersedes any carried snapshot of a teammate.
  for (auto& agent : agents_) {
    const auto& members = partition_.members_of(agent.id);
    auto is_member = [&](const InfoPacket& p) {
      return std::binary_search(members.begin(), members.end(), p.subject);
    };
    agent.packets.erase(
        std::remove_if(agent.packets.begin(), agent.packets.end(), is_member),
        agent.packets.end());
  }

  for (const auto& agent : agents_)
    previous_members_[agent.id] = partition_.members_of(agent.id);
}

void Engine::plan_network(const std::vector<AgentId>& members) {
  std::vector<std::pair<AgentId, const InfoPacket*>> held;
  for (AgentId id : members)
    for (const auto& p : agents_[id].packets) held.emplace_back(id, &p);
  const auto shared = synchronize(held, members);

  std::vector<PlanRequest> requests;
  requests.reserve(members.size());
  for (AgentId id : members) {
    const AgentState& agent = agents_[id];
    PlanRequest req;
    req.id = id;
    req.position = agent.position;
    req.goal = agent.objective ? agent.objective->goal : agent.rest_position;
    req.current_path = agent.path.suffix_from(clock_);
    req.constraints = agent.constraints;
    req.private_obstacles = private_obstacles(agent);
    requests.push_back(std::move(req));
  }

  const auto t0 = std::chrono::steady_clock::now();
  const CbsOutcome outcome =
      modified_cbs(map_, requests, shared, clock_, limits_.cbs);
  planning_time_s_ += seconds_since(t0);
  ++cbs_calls_;
  ct_nodes_expanded_ += outcome.stats.nodes_expanded;
  lowlevel_calls_ += outcome.stats.lowlevel_calls;

  if (outcome.success) {
    for (AgentId id : members) {
      const auto& plan = outcome.agents.at(id);
      agents_[id].path = plan.path;
      agents_[id].constraints = plan.constraints;
      replan_pending_.erase(id);
    }
  } else {
    // Freeze the whole network in place; retry every tick until it resolves.
    for (AgentId id : members) {
      agents_[id].path = Path{clock_, {agents_[id].position}};
      replan_pending_.insert(id);
    }
  }
}

void Engine::plan_phase() {
  const auto marked = marked_networks_;
  marked_networks_.clear();
  for (AgentId net : marked) {
    auto it = partition_.members.find(net);
    if (it == partition_.members.end()) continue;
    plan_network(it->second);
  }
}

void Engine::check_invariants() {
  const int cap = static_cast<int>(agents_.size()) - 2;
  for (const auto& agent : agents_) {
    int infinite = 0;
    for (const auto& p : agent.packets) {
      if (p.infinite()) {
        ++infinite;
        if (!agent.objective) {
          std::ostringstream msg;
          msg << "tick " << clock_ << ": agent " << agent.id
              << " holds an infinite packet without an active task";
          violations_.push_back(msg.str());
        }
      } else if (p.t_flush <= clock_) {
        std::ostringstream msg;
        msg << "tick " << clock_ << ": agent " << agent.id
            << " holds an expired packet about " << p.subject;
        violations_.push_back(msg.str());
      }
    }
    if (infinite > std::max(cap, 0)) {
      std::ostringstream msg;
      msg << "tick " << clock_ << ": agent " << agent.id << " holds "
          << infinite << " infinite packets, cap " << std::max(cap, 0);
      violations_.push_back(msg.str());
    }
  }
}

void Engine::finish_tick() {
  for (const auto& agent : agents_) {
    PacketTraceRow row;
    row.tick = clock_;
    row.agent = agent.id;
    for (const auto& p : agent.packets)
      (p.infinite() ? row.infinite : row.bounded) += 1;
    trace_.push_back(row);
  }
  check_invariants();
  for (auto& agent : agents_) {
    const auto& traj = trajectories_[agent.id];
    const bool moved =
        clock_ > 0 && traj[clock_] != traj[clock_ - 1];
    const bool was_busy = agent.id < static_cast<AgentId>(had_objective_.size())
                              ? had_objective_[agent.id] != 0
                              : false;
    if (was_busy || agent.objective.has_value() || moved || !at_rest(agent))
      agent.last_active = clock_;
  }
  if (clock_ > 0) {
    if (!moved_this_tick_ && !completed_this_tick_ && !assigned_this_tick_)
      ++stall_ticks_;
    else
      stall_ticks_ = 0;
  }
}

void Engine::initialize() {
  if (initialized_) return;
  initialized_ = true;
  clock_ = 0;
  for (const auto& agent : agents_)
    trajectories_[agent.id] = {agent.position};
  had_objective_.assign(agents_.size(), 0);
  for (const auto& agent : agents_) requesters_.insert(agent.id);
  allocate_phase();
  update_phase();
  plan_phase();
  finish_tick();
}

void Engine::tick() {
  ++clock_;
  moved_this_tick_ = false;
  completed_this_tick_ = false;
  assigned_this_tick_ = false;
  had_objective_.assign(agents_.size(), 0);
  for (const auto& agent : agents_)
    had_objective_[agent.id] = agent.objective.has_value() ? 1 : 0;
  step_phase();
  allocate_phase();
  update_phase();
  plan_phase();
  finish_tick();
}

SimulationResult Engine::snapshot(RunStatus status) const {
  SimulationResult result;
  result.status = status;
  for (const auto& agent : agents_) result.sum_of_costs += agent.last_active;
  result.ticks = clock_;
  result.planning_time_s = planning_time_s_;
  result.allocator_time_s = allocator_time_s_;
  result.cbs_calls = cbs_calls_;
  result.ct_nodes_expanded = ct_nodes_expanded_;
  result.lowlevel_calls = lowlevel_calls_;
  result.packets_bounded_created = packets_bounded_created_;
  result.packets_infinite_created = packets_infinite_created_;
  result.trajectories = trajectories_;
  result.packet_trace = trace_;
  result.invariant_violations = violations_;
  return result;
}

SimulationResult Engine::run() {
  const auto t0 = std::chrono::steady_clock::now();
  initialize();
  const long long stall_limit =
      static_cast<long long>(limits_.stall_factor) * map_.size();
  while (!finished()) {
    if (clock_ >= limits_.max_ticks) return snapshot(RunStatus::kTimeout);
    if (limits_.wall_clock_limit_s > 0 &&
        seconds_since(t0) > limits_.wall_clock_limit_s)
      return snapshot(RunStatus::kTimeout);
    if (stall_ticks_ >= stall_limit) return snapshot(RunStatus::kStalled);
    tick();
  }
  return snapshot(RunStatus::kSuccess);
}

}  // namespace prism
