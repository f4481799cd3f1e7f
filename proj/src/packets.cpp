#include "prism/packets.hpp"

#include <algorithm>

namespace prism {

namespace {

// The packet body describing `who`, minus receive/flush bookkeeping.
InfoPacket snapshot_of(const PacketAgentView& who, Timestep now) {
  InfoPacket p;
  p.subject = who.id;
  if (who.has_active_task) {
    p.task = who.task;
  } else {
    // Displaced or resting: a synthetic leg to its rest cell stands in.
    p.task.id = -1;
    p.task.kind = Task::Kind::kTransition;
    p.task.start = who.position;
    p.task.goal = who.goal;
    p.task.state = Task::State::kStarted;
    p.task.assignee = who.id;
  }
  p.constraints = who.constraints;
  p.subject_position = who.position;
  p.snapshot_time = now;
  p.subject_obstacles = who.private_obstacles;
  p.t_receive = now;
  return p;
}

}  // namespace

Timestep calculate_flush_time(const std::vector<Constraint>& cstr_a, AgentId a,
                              const std::vector<Constraint>& cstr_b, AgentId b) {
  Timestep latest = 0;
  for (const Constraint& c : cstr_a)
    if (c.source == b) latest = std::max(latest, c.time);
  for (const Constraint& c : cstr_b)
    if (c.source == a) latest = std::max(latest, c.time);
  return latest;
}

bool verify_alternative_path(const GridMap& map, const PacketAgentView& holder,
                             Vertex resting_position) {
  StaticObstacleSet walls;
  walls.cells = holder.private_obstacles;
  walls.cells.push_back(resting_position);
  return plan_path(map, holder.position, holder.goal, 0, {}, walls).has_value();
}

SeparationPackets create_packets_on_separation(const GridMap& map,
                                               const PacketAgentView& first,
                                               const PacketAgentView& second,
                                               Timestep now) {
  SeparationPackets out;
  if (first.at_rest && second.at_rest) return out;

  if (first.at_rest || second.at_rest) {
    const PacketAgentView& rester = first.at_rest ? first : second;
    const PacketAgentView& mover = first.at_rest ? second : first;
    // Only an agent still working a real task pins a rester as an obstacle,
    // and never more of them than fleet size minus itself and one free cell.
    if (!mover.has_active_task) return out;
    if (mover.infinite_packets_held >= mover.fleet_size - 2) return out;
    if (!verify_alternative_path(map, mover, rester.position)) return out;
    InfoPacket p = snapshot_of(rester, now);
    p.t_flush = kInfiniteFlush;
    (first.at_rest ? out.for_second : out.for_first) = std::move(p);
    return out;
  }

  Timestep flush = calculate_flush_time(first.constraints, first.id,
                                        second.constraints, second.id);
  if (flush <= now) return out;  // influence already over: no packet at all
  InfoPacket about_second = snapshot_of(second, now);
  about_second.t_flush = flush;
  out.for_first = std::move(about_second);
  InfoPacket about_first = snapshot_of(first, now);
  about_first.t_flush = flush;
  out.for_second = std::move(about_first);
  return out;
}

void flush_expired(std::vector<InfoPacket>& held, Timestep now) {
  held.erase(std::remove_if(held.begin(), held.end(),
                            [now](const InfoPacket& p) {
                              return !p.infinite() && p.t_flush <= now;
                            }),
             held.end());
}

std::map<AgentId, InfoPacket> synchronize(
    const std::vector<std::pair<AgentId, const InfoPacket*>>& held,
    const std::vector<AgentId>& members) {
  std::map<AgentId, InfoPacket> agreed;
  std::map<AgentId, AgentId> chosen_holder;
  for (const auto& [holder, packet] : held) {
    if (packet->infinite()) continue;
    if (std::find(members.begin(), members.end(), packet->subject) !=
        members.end())
      continue;
    auto it = agreed.find(packet->subject);
    if (it == agreed.end() || packet->t_receive > it->second.t_receive ||
        (packet->t_receive == it->second.t_receive &&
         holder < chosen_holder[packet->subject])) {
      agreed[packet->subject] = *packet;
      chosen_holder[packet->subject] = holder;
    }
  }
  return agreed;
}

}  // namespace prism
