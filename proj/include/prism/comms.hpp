#pragma once

#include <map>
#include <vector>

#include "prism/env.hpp"

namespace prism {

enum class Protocol { kProximity, kLineOfSight, kFull };

struct CommsConfig {
  Protocol protocol = Protocol::kFull;
  // Proximity only: communication diameter as a fraction of the longer map
  // dimension; anything <= 0 means the 4-cell minimum diameter.
  double range_fraction = 0.0;

  // Effective diameter in cell units, floored at 4 so that two agents closing
  // head-on are always seen before a collision can become unavoidable.
  double diameter(const GridMap& map) const;
};

Protocol parse_protocol(const std::string& name);

// Every cell the closed segment between the two cell centers touches,
// corner-clipped cells included, endpoints first and last.
std::vector<Vertex> supercover_line(Vertex a, Vertex b);

// True when no obstacle cell lies on the segment between the cell centers.
bool segment_clear(const GridMap& map, Vertex a, Vertex b);

// Direct pairwise reachability under the protocol:
//   full         always true;
//   proximity    Euclidean center distance <= diameter;
//   line of sight  distance <= 4 cells (always visible) or a clear segment.
bool in_range(const CommsConfig& config, const GridMap& map, Vertex a, Vertex b);

// Connected components of the direct-reachability graph. Multi-hop relays
// count: an agent belongs to every teammate it can reach through any chain.
struct NetworkPartition {
  std::map<AgentId, AgentId> network_of;           // agent -> network id
  std::map<AgentId, std::vector<AgentId>> members;  // id -> ascending members

  // Network id is the lowest member id.
  const std::vector<AgentId>& members_of(AgentId agent) const {
    return members.at(network_of.at(agent));
  }
};

NetworkPartition compute_networks(const CommsConfig& config, const GridMap& map,
                                  const std::map<AgentId, Vertex>& positions);

}  // namespace prism
