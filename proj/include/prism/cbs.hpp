#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "prism/packets.hpp"

namespace prism {

// Two agents claiming the same cell, or trading cells, at the same time.
struct Conflict {
  enum class Kind { kVertex, kEdge };

  Kind kind = Kind::kVertex;
  AgentId a = -1, b = -1;  // a < b always
  Vertex cell;  // vertex: the shared cell; edge: a departs cell->to, b to->cell
  Vertex to;
  Timestep time = 0;  // vertex: occupancy time; edge: departure time

  bool operator==(const Conflict& o) const {
    return kind == o.kind && a == o.a && b == o.b && cell == o.cell &&
           to == o.to && time == o.time;
  }
};

std::string to_string(const Conflict& c);

// Earliest conflict among the paths (rest-extended at both ends), ordered by
// (time, vertex before edge, lower pair ids). Vertex conflicts are scanned
// from from_time + 1 — positions at from_time are already-executed, distinct
// facts — and edge conflicts from departure time from_time. Pairs made of two
// virtual ids never conflict.
std::optional<Conflict> detect_first_conflict(
    const std::map<AgentId, Path>& paths, Timestep from_time,
    const std::set<AgentId>& virtual_ids = {});

// Total conflict count under the same scan rules, for tree tie-breaking.
int count_conflicts(const std::map<AgentId, Path>& paths, Timestep from_time,
                    const std::set<AgentId>& virtual_ids = {});

// One network agent as the planner sees it at planning time.
struct PlanRequest {
  AgentId id = -1;
  Vertex position;
  Vertex goal;
  Path current_path;  // suffix from planning time; seeds the root node
  std::vector<Constraint> constraints;
  std::vector<Vertex> private_obstacles;
};

struct CbsLimits {
  int max_nodes = 50000;  // expanded tree nodes before reporting failure
};

struct CbsStats {
  int nodes_expanded = 0;
  int nodes_generated = 0;
  int lowlevel_calls = 0;
};

// Emitted once per generated child, for tree-shape assertions in tests.
struct CtEvent {
  int node = 0;
  int parent = 0;
  AgentId constrained = -1;
  Constraint added;
  long long cost = 0;
};
using CtObserver = std::function<void(const CtEvent&)>;

struct CbsAgentPlan {
  Path path;
  std::vector<Constraint> constraints;
};

struct CbsOutcome {
  bool success = false;
  std::map<AgentId, CbsAgentPlan> agents;
  CbsStats stats;
};

// Rebuilds the subject's remaining path from a packet snapshot. Deterministic
// planning from the snapshot state reproduces exactly the path the subject
// itself held when the packet was made.
Path expand_packet_path(const InfoPacket& packet, const GridMap& map);

// Best-first conflict-tree search over the network agents, with each packet's
// subject present as an immutable virtual agent. A conflict between two
// network agents branches both ways; a conflict touching a virtual participant
// branches only on the network side. Nodes are ordered by (cost, conflict
// count, insertion order); each agent's replan is capped by the standard
// horizon for the combined body count. Returns failure once the tree is
// exhausted or the node budget is spent.
CbsOutcome modified_cbs(const GridMap& map,
                        const std::vector<PlanRequest>& agents,
                        const std::map<AgentId, InfoPacket>& packets,
                        Timestep now, const CbsLimits& limits = {},
                        const CtObserver& observer = nullptr);

}  // namespace prism
