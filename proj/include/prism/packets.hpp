#pragma once

#include <limits>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "prism/lowlevel.hpp"
#include "prism/tasking.hpp"

namespace prism {

// Sentinel flush time: the packet lives until the holder's task changes.
constexpr Timestep kInfiniteFlush = std::numeric_limits<Timestep>::max();

// What one agent carries away about another at network separation. The
// snapshot holds everything needed to rebuild the subject's remaining path
// deterministically: its position, clock, constraint set, and the private
// obstacle cells its own planning honored.
struct InfoPacket {
  AgentId subject = -1;
  Task task;  // subject's objective when snapped (synthetic for resters)
  std::vector<Constraint> constraints;
  Vertex subject_position;
  Timestep snapshot_time = 0;
  std::vector<Vertex> subject_obstacles;
  Timestep t_receive = 0;
  Timestep t_flush = kInfiniteFlush;

  bool infinite() const { return t_flush == kInfiniteFlush; }
};

// One side of a separation as packet creation sees it.
struct PacketAgentView {
  AgentId id = -1;
  Vertex position;
  Vertex goal;  // current target: task goal, or rest cell when idle
  bool at_rest = false;
  bool has_active_task = false;
  Task task;  // meaningful when has_active_task
  std::vector<Constraint> constraints;
  std::vector<Vertex> private_obstacles;
  int infinite_packets_held = 0;
  int fleet_size = 0;
};

// Latest time either side's constraints mention the other as source — the
// moment the pair's mutual influence ends. Zero when they never constrained
// each other.
Timestep calculate_flush_time(const std::vector<Constraint>& cstr_a, AgentId a,
                              const std::vector<Constraint>& cstr_b, AgentId b);

// True when the holder can still reach its task goal with the resting agent's
// cell (and every obstacle the holder already honors) treated as a wall.
// Checked before any infinite packet is created.
bool verify_alternative_path(const GridMap& map, const PacketAgentView& holder,
                             Vertex resting_position);

struct SeparationPackets {
  std::optional<InfoPacket> for_first;   // entering first's held set
  std::optional<InfoPacket> for_second;  // entering second's held set
};

// Packet exchange for one separating pair:
//  - both at rest: nothing;
//  - one at rest: the moving side keeps an infinite packet about the rester,
//    gated by the alternative-path check and the fleet-size-minus-two cap;
//  - both moving: bounded packets both ways, only while mutual constraints
//    still reach past `now`.
SeparationPackets create_packets_on_separation(const GridMap& map,
                                               const PacketAgentView& first,
                                               const PacketAgentView& second,
                                               Timestep now);

// Drops every bounded packet whose flush time has arrived.
void flush_expired(std::vector<InfoPacket>& held, Timestep now);

// Network-wide agreement over the members' held packets: one packet per
// subject outside the network, newest t_receive wins, ties to the lower
// holder id. Infinite packets stay private to their holders and are excluded.
std::map<AgentId, InfoPacket> synchronize(
    const std::vector<std::pair<AgentId, const InfoPacket*>>& held,
    const std::vector<AgentId>& members);

}  // namespace prism
