#include "prism/cbs.hpp"

#include <algorithm>
#include <cassert>
#include <queue>
#include <string>
#include <unordered_set>
#include <tuple>

namespace prism {

namespace {

Timestep latest_arrival(const std::map<AgentId, Path>& paths) {
  Timestep latest = 0;
  for (const auto& [id, path] : paths)
    latest = std::max(latest, path.arrival_time());
  return latest;
}

// Shared scan over every pair and timestep; stops early when the sink says so.
template <typename Sink>
void scan_conflicts(const std::map<AgentId, Path>& paths, Timestep from_time,
                    const std::set<AgentId>& virtual_ids, Sink&& sink) {
  std::vector<const std::pair<const AgentId, Path>*> items;
  items.reserve(paths.size());
  for (const auto& entry : paths) items.push_back(&entry);
  const Timestep last = latest_arrival(paths);

  for (Timestep t = from_time; t <= last; ++t) {
    for (size_t i = 0; i < items.size(); ++i) {
      for (size_t j = i + 1; j < items.size(); ++j) {
        AgentId a = items[i]->first, b = items[j]->first;
        if (virtual_ids.count(a) && virtual_ids.count(b)) continue;
        const Path& pa = items[i]->second;
        const Path& pb = items[j]->second;
        if (t > from_time && pa.at(t) == pb.at(t)) {
          Conflict c;
          c.kind = Conflict::Kind::kVertex;
          c.a = a;
          c.b = b;
          c.cell = pa.at(t);
          c.time = t;
          if (!sink(c)) return;
        }
      }
    }
    for (size_t i = 0; i < items.size(); ++i) {
      for (size_t j = i + 1; j < items.size(); ++j) {
        AgentId a = items[i]->first, b = items[j]->first;
        if (virtual_ids.count(a) && virtual_ids.count(b)) continue;
        const Path& pa = items[i]->second;
        const Path& pb = items[j]->second;
        if (pa.at(t) == pb.at(t + 1) && pb.at(t) == pa.at(t + 1) &&
            !(pa.at(t) == pa.at(t + 1))) {
          Conflict c;
          c.kind = Conflict::Kind::kEdge;
          c.a = a;
          c.b = b;
          c.cell = pa.at(t);
          c.to = pa.at(t + 1);
          c.time = t;
          if (!sink(c)) return;
        }
      }
    }
  }
}

// Tree nodes hold only their delta against the parent; the full plan set is
// rebuilt by walking the ancestry, which keeps a 50k-node tree small.
struct CtNode {
  int parent = -1;
  AgentId changed = -1;  // agent whose plan this node replaced (-1 at root)
  Path path;
  Constraint added;
  long long cost = 0;
  int conflict_count = 0;
  std::optional<Conflict> first;
  std::vector<std::pair<uint64_t, uint64_t>> key;  // sorted constraint set
};

// Identity of one (agent, constraint) for duplicate-node detection. Plans are
// a deterministic function of each agent's constraint set, so two tree nodes
// with equal sets are interchangeable and only the first is kept. Corridor
// standoffs otherwise re-derive the same sets in every branch order.
std::pair<uint64_t, uint64_t> encode_entry(const GridMap& map, AgentId agent,
                                           const Constraint& c) {
  const uint64_t hi = (static_cast<uint64_t>(agent) << 32) |
                      static_cast<uint32_t>(c.time);
  const uint64_t edge_bit = c.kind == Constraint::Kind::kEdge ? 1 : 0;
  const uint64_t to_idx =
      c.kind == Constraint::Kind::kEdge ? map.index(c.to) : 0;
  const uint64_t lo = (edge_bit << 63) |
                      (static_cast<uint64_t>(map.index(c.cell)) << 42) |
                      (to_idx << 21) |
                      static_cast<uint64_t>(c.source & 0x1FFFFF);
  return {hi, lo};
}

std::string key_bytes(const std::vector<std::pair<uint64_t, uint64_t>>& key) {
  return std::string(reinterpret_cast<const char*>(key.data()),
                     key.size() * sizeof(key[0]));
}

}  // namespace

std::string to_string(const Conflict& c) {
  if (c.kind == Conflict::Kind::kVertex)
    return "vertex<" + std::to_string(c.a) + "," + std::to_string(c.b) + "," +
           to_string(c.cell) + ",t=" + std::to_string(c.time) + ">";
  return "edge<" + std::to_string(c.a) + "," + std::to_string(c.b) + "," +
         to_string(c.cell) + "->" + to_string(c.to) +
         ",t=" + std::to_string(c.time) + ">";
}

std::optional<Conflict> detect_first_conflict(
    const std::map<AgentId, Path>& paths, Timestep from_time,
    const std::set<AgentId>& virtual_ids) {
  // Keep the minimum under (time, vertex-before-edge, id pair); the scan can
  // stop once a later timestep begins.
  std::optional<Conflict> best;
  scan_conflicts(paths, from_time, virtual_ids, [&](const Conflict& c) {
    if (best && best->time < c.time) return false;
    auto key = [](const Conflict& x) {
      return std::make_tuple(x.time, x.kind == Conflict::Kind::kEdge, x.a, x.b);
    };
    if (!best || key(c) < key(*best)) best = c;
    return true;
  });
  return best;
}

int count_conflicts(const std::map<AgentId, Path>& paths, Timestep from_time,
                    const std::set<AgentId>& virtual_ids) {
  int n = 0;
  scan_conflicts(paths, from_time, virtual_ids, [&](const Conflict&) {
    ++n;
    return true;
  });
  return n;
}

Path expand_packet_path(const InfoPacket& packet, const GridMap& map) {
  StaticObstacleSet walls;
  walls.cells = packet.subject_obstacles;
  auto path = plan_path(map, packet.subject_position, packet.task.goal,
                        packet.snapshot_time, packet.constraints, walls);
  if (path) return *path;
  // A snapshot of a feasible plan should always expand; resting in place is
  // the safe fallback if the instance somehow degenerated.
  Path rest;
  rest.start_time = packet.snapshot_time;
  rest.steps = {packet.subject_position};
  return rest;
}

CbsOutcome modified_cbs(const GridMap& map,
                        const std::vector<PlanRequest>& agents,
                        const std::map<AgentId, InfoPacket>& packets,
                        Timestep now, const CbsLimits& limits,
                        const CtObserver& observer) {
  CbsOutcome out;
  if (agents.empty()) {
    out.success = true;
    return out;
  }

  std::map<AgentId, const PlanRequest*> request_of;
  for (const PlanRequest& r : agents) request_of[r.id] = &r;

  // Packet subjects ride along as immutable virtual agents.
  std::map<AgentId, Path> virtual_paths;
  std::set<AgentId> virtual_ids;
  for (const auto& [subject, packet] : packets) {
    virtual_paths[subject] = expand_packet_path(packet, map);
    virtual_ids.insert(subject);
  }
  const int bodies =
      static_cast<int>(agents.size()) + static_cast<int>(packets.size());

  std::vector<CtNode> nodes;

  auto network_paths = [&](int seq) {
    std::map<AgentId, Path> paths;
    for (int n = seq; n > 0; n = nodes[n].parent)
      paths.emplace(nodes[n].changed, nodes[n].path);  // nearest delta wins
    for (const PlanRequest& r : agents) paths.emplace(r.id, r.current_path);
    return paths;
  };
  auto constraints_of = [&](int seq, AgentId agent) {
    std::vector<Constraint> added;
    for (int n = seq; n > 0; n = nodes[n].parent)
      if (nodes[n].changed == agent) added.push_back(nodes[n].added);
    std::vector<Constraint> full = request_of.at(agent)->constraints;
    full.insert(full.end(), added.rbegin(), added.rend());
    return full;
  };
  auto evaluate = [&](CtNode& node, const std::map<AgentId, Path>& paths) {
    std::map<AgentId, Path> all = virtual_paths;
    for (const auto& [id, path] : paths) all[id] = path;
    node.first = detect_first_conflict(all, now, virtual_ids);
    node.conflict_count =
        node.first ? count_conflicts(all, now, virtual_ids) : 0;
  };

  CtNode root;
  for (const PlanRequest& r : agents) {
    assert(r.current_path.valid());
    root.cost += r.current_path.cost();
  }
  {
    std::map<AgentId, Path> paths;
    for (const PlanRequest& r : agents) paths.emplace(r.id, r.current_path);
    evaluate(root, paths);
  }
  nodes.push_back(std::move(root));

  using QueueEntry = std::tuple<long long, int, int>;  // cost, conflicts, seq
  std::priority_queue<QueueEntry, std::vector<QueueEntry>,
                      std::greater<QueueEntry>>
      open;
  open.emplace(nodes[0].cost, nodes[0].conflict_count, 0);
  out.stats.nodes_generated = 1;
  // Every node's constraints extend the shared request baseline, so only the
  // additions identify a node.
  std::unordered_set<std::string> seen_keys;
  seen_keys.insert(key_bytes(nodes[0].key));

  while (!open.empty()) {
    auto [cost, conflicts, seq] = open.top();
    open.pop();

    if (!nodes[seq].first) {
      out.success = true;
      std::map<AgentId, Path> paths = network_paths(seq);
      for (const auto& [id, path] : paths)
        out.agents[id] = {path, constraints_of(seq, id)};
      return out;
    }
    if (out.stats.nodes_expanded >= limits.max_nodes) return out;
    ++out.stats.nodes_expanded;

    const Conflict conflict = *nodes[seq].first;
    const std::map<AgentId, Path> paths = network_paths(seq);

    for (int side = 0; side < 2; ++side) {
      AgentId agent = side == 0 ? conflict.a : conflict.b;
      if (virtual_ids.count(agent)) continue;  // packets are never replanned
      AgentId other = side == 0 ? conflict.b : conflict.a;

      Constraint added =
          conflict.kind == Conflict::Kind::kVertex
              ? Constraint::vertex(conflict.cell, conflict.time, other)
              : (side == 0 ? Constraint::edge(conflict.cell, conflict.to,
                                              conflict.time, other)
                           : Constraint::edge(conflict.to, conflict.cell,
                                              conflict.time, other));

      std::vector<Constraint> grown = constraints_of(seq, agent);
      if (std::find(grown.begin(), grown.end(), added) != grown.end())
        continue;  // would re-derive an already-applied constraint
      grown.push_back(added);

      auto key = nodes[seq].key;
      const auto entry = encode_entry(map, agent, added);
      key.insert(std::lower_bound(key.begin(), key.end(), entry), entry);
      if (!seen_keys.insert(key_bytes(key)).second)
        continue;  // an identical constraint set is already in the tree

      const PlanRequest& req = *request_of.at(agent);
      ++out.stats.lowlevel_calls;
      auto replanned =
          plan_path(map, req.position, req.goal, now, grown,
                    StaticObstacleSet{req.private_obstacles}, {},
                    plan_horizon(map, bodies, now, grown));
      if (!replanned) continue;

      CtNode child;
      child.parent = seq;
      child.changed = agent;
      child.added = added;
      child.cost = nodes[seq].cost - paths.at(agent).cost() + replanned->cost();
      child.path = std::move(*replanned);
      child.key = std::move(key);
      {
        std::map<AgentId, Path> child_paths = paths;
        child_paths[agent] = child.path;
        evaluate(child, child_paths);
      }

      int child_seq = static_cast<int>(nodes.size());
      if (observer) observer({child_seq, seq, agent, added, child.cost});
      open.emplace(child.cost, child.conflict_count, child_seq);
      nodes.push_back(std::move(child));
      ++out.stats.nodes_generated;
    }
  }
  return out;
}

}  // namespace prism
