#include "prism/comms.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

namespace prism {

double CommsConfig::diameter(const GridMap& map) const {
  double scaled = range_fraction * std::max(map.width(), map.height());
  return std::max(4.0, scaled);
}

Protocol parse_protocol(const std::string& name) {
  if (name == "prox" || name == "proximity") return Protocol::kProximity;
  if (name == "los" || name == "line-of-sight") return Protocol::kLineOfSight;
  if (name == "full") return Protocol::kFull;
  throw std::runtime_error("unknown protocol: " + name);
}

std::vector<Vertex> supercover_line(Vertex a, Vertex b) {
  std::vector<Vertex> cells;
  cells.push_back(a);
  int nx = std::abs(b.x - a.x), ny = std::abs(b.y - a.y);
  int sx = b.x > a.x ? 1 : -1, sy = b.y > a.y ? 1 : -1;
  int x = a.x, y = a.y;
  int ix = 0, iy = 0;
  while (ix < nx || iy < ny) {
    // Compare the next vertical and horizontal boundary crossings of the
    // center-to-center segment: (ix + 1/2) / nx versus (iy + 1/2) / ny,
    // cross-multiplied to stay in integers.
    long long vert = static_cast<long long>(1 + 2 * ix) * ny;
    long long horz = static_cast<long long>(1 + 2 * iy) * nx;
    if (vert == horz) {
      // The segment passes exactly through a cell corner: both cells that
      // share the corner with the diagonal are clipped and count as touched.
      cells.push_back({x + sx, y});
      cells.push_back({x, y + sy});
      x += sx;
      y += sy;
      ++ix;
      ++iy;
    } else if (vert < horz) {
      x += sx;
      ++ix;
    } else {
      y += sy;
      ++iy;
    }
    cells.push_back({x, y});
  }
  return cells;
}

bool segment_clear(const GridMap& map, Vertex a, Vertex b) {
  for (const Vertex& cell : supercover_line(a, b))
    if (!map.passable(cell)) return false;
  return true;
}

bool in_range(const CommsConfig& config, const GridMap& map, Vertex a,
              Vertex b) {
  if (config.protocol == Protocol::kFull) return true;
  long long dx = a.x - b.x, dy = a.y - b.y;
  double dist_sq = static_cast<double>(dx * dx + dy * dy);
  if (config.protocol == Protocol::kProximity) {
    double d = config.diameter(map);
    return dist_sq <= d * d;
  }
  // Line of sight: a short bubble is always visible, beyond it the segment
  // between the centers must cross no obstacle cell.
  if (dist_sq <= 16.0) return true;
  return segment_clear(map, a, b);
}

NetworkPartition compute_networks(const CommsConfig& config, const GridMap& map,
                                  const std::map<AgentId, Vertex>& positions) {
  std::vector<AgentId> ids;
  for (const auto& [id, pos] : positions) ids.push_back(id);

  // Union-find over the direct-reachability edges gives the relay closure.
  std::map<AgentId, AgentId> up;
  for (AgentId id : ids) up[id] = id;
  std::function<AgentId(AgentId)> find = [&](AgentId v) {
    while (up[v] != v) v = up[v] = up[up[v]];
    return v;
  };
  for (size_t i = 0; i < ids.size(); ++i) {
    for (size_t j = i + 1; j < ids.size(); ++j) {
      if (!in_range(config, map, positions.at(ids[i]), positions.at(ids[j])))
        continue;
      AgentId ra = find(ids[i]), rb = find(ids[j]);
      if (ra != rb) up[std::max(ra, rb)] = std::min(ra, rb);
    }
  }

  NetworkPartition out;
  for (AgentId id : ids) {
    AgentId root = find(id);
    out.network_of[id] = root;  // roots are minimal ids by the union rule
    out.members[root].push_back(id);
  }
  for (auto& [root, members] : out.members)
    std::sort(members.begin(), members.end());
  return out;
}

}  // namespace prism
