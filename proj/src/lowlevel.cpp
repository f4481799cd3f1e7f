#include "prism/lowlevel.hpp"

#include <algorithm>
#include <cstdint>
#include <map>

namespace prism {

namespace {

using Bits = std::vector<uint64_t>;

// Occupancy bitsets over row-major cell indices with wrap-safe 4-neighbor
// shifts; masks keep east/west shifts from bleeding across row edges.
struct BitOps {
  int width = 0;
  int bits = 0;
  int words = 0;
  Bits passable;
  Bits not_first_col;
  Bits not_last_col;

  explicit BitOps(const GridMap& map)
      : width(map.width()), bits(map.size()), words((map.size() + 63) / 64) {
    passable.assign(words, 0);
    not_first_col.assign(words, ~uint64_t{0});
    not_last_col.assign(words, ~uint64_t{0});
    for (int i = 0; i < bits; ++i) {
      if (map.cells()[i]) set(passable, i);
      int x = i % width;
      if (x == 0) clear(not_first_col, i);
      if (x == width - 1) clear(not_last_col, i);
    }
    trim(not_first_col);
    trim(not_last_col);
  }

  static void set(Bits& b, int i) { b[i >> 6] |= uint64_t{1} << (i & 63); }
  static void clear(Bits& b, int i) { b[i >> 6] &= ~(uint64_t{1} << (i & 63)); }
  static bool test(const Bits& b, int i) {
    return (b[i >> 6] >> (i & 63)) & 1;
  }
  bool empty(const Bits& b) const {
    for (uint64_t w : b)
      if (w) return false;
    return true;
  }
  // Zero the bits past the grid size so layer comparisons stay exact.
  void trim(Bits& b) const {
    int spare = words * 64 - bits;
    if (spare > 0) b[words - 1] &= ~uint64_t{0} >> spare;
  }

  Bits shifted_left(const Bits& src, int k) const {  // toward higher indices
    Bits out(words, 0);
    int wo = k >> 6, bo = k & 63;
    for (int i = words - 1; i >= 0; --i) {
      uint64_t w = i - wo >= 0 ? src[i - wo] : 0;
      uint64_t lo = (bo && i - wo - 1 >= 0) ? src[i - wo - 1] : 0;
      out[i] = bo ? (w << bo) | (lo >> (64 - bo)) : w;
    }
    trim(out);
    return out;
  }
  Bits shifted_right(const Bits& src, int k) const {  // toward lower indices
    Bits out(words, 0);
    int wo = k >> 6, bo = k & 63;
    for (int i = 0; i < words; ++i) {
      uint64_t w = i + wo < words ? src[i + wo] : 0;
      uint64_t hi = (bo && i + wo + 1 < words) ? src[i + wo + 1] : 0;
      out[i] = bo ? (w >> bo) | (hi << (64 - bo)) : w;
    }
    return out;
  }

  static void or_into(Bits& dst, const Bits& src) {
    for (size_t i = 0; i < dst.size(); ++i) dst[i] |= src[i];
  }
  static void and_into(Bits& dst, const Bits& src) {
    for (size_t i = 0; i < dst.size(); ++i) dst[i] &= src[i];
  }
  static void and_not_into(Bits& dst, const Bits& src) {
    for (size_t i = 0; i < dst.size(); ++i) dst[i] &= ~src[i];
  }

  // All cells one legal grid move (including a wait) away from src.
  Bits neighborhood(const Bits& src) const {
    Bits out = src;
    Bits east = src;
    and_into(east, not_last_col);
    or_into(out, shifted_left(east, 1));
    Bits west = src;
    and_into(west, not_first_col);
    or_into(out, shifted_right(west, 1));
    or_into(out, shifted_left(src, width));
    or_into(out, shifted_right(src, width));
    return out;
  }
};

struct EdgeBan {
  int from = 0;
  int to = 0;
};

}  // namespace

std::string to_string(const Constraint& c) {
  if (c.kind == Constraint::Kind::kVertex)
    return "vertex" + to_string(c.cell) + "@t=" + std::to_string(c.time) +
           " src=" + std::to_string(c.source);
  return "edge" + to_string(c.cell) + "->" + to_string(c.to) +
         "@t=" + std::to_string(c.time) + " src=" + std::to_string(c.source);
}

Path Path::suffix_from(Timestep t) const {
  Path out;
  if (steps.empty()) return out;
  Timestep clamped = std::max(t, start_time);
  size_t k = std::min(static_cast<size_t>(clamped - start_time),
                      steps.size() - 1);
  out.start_time = clamped;
  out.steps.assign(steps.begin() + static_cast<long>(k), steps.end());
  return out;
}

Timestep plan_horizon(const GridMap& map, int bodies, Timestep start_time,
                      const std::vector<Constraint>& constraints) {
  Timestep latest = start_time;
  for (const Constraint& c : constraints) latest = std::max(latest, c.time);
  return latest + map.passable_count() * std::max(bodies, 1) + 1;
}

std::optional<Path> plan_path(const GridMap& map, Vertex start, Vertex goal,
                              Timestep start_time,
                              const std::vector<Constraint>& constraints,
                              const StaticObstacleSet& obstacles,
                              const std::vector<TimedObstacle>& parked,
                              std::optional<Timestep> horizon) {
  if (!map.passable(start) || !map.passable(goal)) return std::nullopt;
  const BitOps ops(map);
  const int start_idx = map.index(start);
  const int goal_idx = map.index(goal);

  Bits blocked(ops.words, 0);
  for (const Vertex& v : obstacles.cells) {
    if (!map.in_bounds(v)) continue;
    BitOps::set(blocked, map.index(v));
  }
  // A cell parked on forever can never host this agent's start or rest.
  std::vector<TimedObstacle> parked_pending;
  for (const TimedObstacle& p : parked) {
    if (!map.in_bounds(p.cell)) continue;
    if (map.index(p.cell) == goal_idx) return std::nullopt;
    if (map.index(p.cell) == start_idx && p.from <= start_time)
      return std::nullopt;
    parked_pending.push_back(p);
  }
  if (BitOps::test(blocked, start_idx) || BitOps::test(blocked, goal_idx))
    return std::nullopt;
  std::sort(parked_pending.begin(), parked_pending.end(),
            [](const TimedObstacle& a, const TimedObstacle& b) {
              return a.from < b.from;
            });

  // Constraint tables keyed by absolute time; past-time entries never bind.
  std::map<Timestep, std::vector<int>> vertex_at;
  std::map<Timestep, std::vector<EdgeBan>> edges_at;
  Timestep last_goal_constraint = start_time - 1;
  Timestep stable_after = start_time;
  for (const Constraint& c : constraints) {
    if (c.kind == Constraint::Kind::kVertex) {
      if (c.time <= start_time) continue;
      if (!map.in_bounds(c.cell)) continue;
      int idx = map.index(c.cell);
      vertex_at[c.time].push_back(idx);
      if (idx == goal_idx) last_goal_constraint = std::max(last_goal_constraint, c.time);
      stable_after = std::max(stable_after, c.time);
    } else {
      if (c.time < start_time) continue;
      if (!map.in_bounds(c.cell) || !map.in_bounds(c.to)) continue;
      edges_at[c.time].push_back({map.index(c.cell), map.index(c.to)});
      stable_after = std::max(stable_after, c.time + 1);
    }
  }
  for (const TimedObstacle& p : parked_pending)
    stable_after = std::max(stable_after, p.from);

  const Timestep cap =
      horizon ? *horizon : plan_horizon(map, 1, start_time, constraints);

  Bits base = ops.passable;  // passable minus every currently-active blocker
  BitOps::and_not_into(base, blocked);
  size_t parked_applied = 0;
  auto activate_parked = [&](Timestep t) {
    while (parked_applied < parked_pending.size() &&
           parked_pending[parked_applied].from <= t) {
      BitOps::clear(base, map.index(parked_pending[parked_applied].cell));
      ++parked_applied;
    }
  };
  activate_parked(start_time);
  if (!BitOps::test(base, start_idx)) return std::nullopt;

  const Vertex move_order[5] = {  // (y, x) ascending with the wait in place
      {0, -1}, {-1, 0}, {0, 0}, {1, 0}, {0, 1}};

  // Forward sweep: reach[k] = cells occupiable at time start_time + k.
  std::vector<Bits> reach;
  reach.emplace_back(ops.words, 0);
  BitOps::set(reach.back(), start_idx);
  Timestep arrival = -1;
  for (Timestep t = start_time;; ++t) {
    const Bits& cur = reach.back();
    if (BitOps::test(cur, goal_idx) && t > last_goal_constraint) {
      arrival = t;
      break;
    }
    if (t >= cap) return std::nullopt;
    if (t > stable_after && reach.size() >= 2 &&
        cur == reach[reach.size() - 2])
      return std::nullopt;  // reachability has converged short of the goal

    activate_parked(t + 1);
    Bits next = ops.neighborhood(cur);
    BitOps::and_into(next, base);
    auto vit = vertex_at.find(t + 1);
    if (vit != vertex_at.end())
      for (int idx : vit->second) BitOps::clear(next, idx);
    auto eit = edges_at.find(t);
    if (eit != edges_at.end()) {
      // A banned move may have been the only way into its arrival cell.
      for (const EdgeBan& ban : eit->second) {
        if (!BitOps::test(next, ban.to) || !BitOps::test(cur, ban.from))
          continue;
        Vertex to_v = map.vertex(ban.to);
        bool reachable_otherwise = false;
        for (const Vertex& d : move_order) {
          Vertex from_v{to_v.x + d.x, to_v.y + d.y};
          if (!map.in_bounds(from_v)) continue;
          int from_idx = map.index(from_v);
          if (from_idx == ban.from || !BitOps::test(cur, from_idx)) continue;
          bool also_banned = false;
          for (const EdgeBan& other : eit->second)
            if (other.from == from_idx && other.to == ban.to) also_banned = true;
          if (!also_banned) {
            reachable_otherwise = true;
            break;
          }
        }
        if (!reachable_otherwise) BitOps::clear(next, ban.to);
      }
    }
    if (ops.empty(next)) return std::nullopt;
    reach.push_back(std::move(next));
  }

  // Backward sweep: feasible[k] = cells at time start_time + k from which the
  // goal is still reachable exactly at the chosen arrival.
  const size_t span = static_cast<size_t>(arrival - start_time);
  std::vector<Bits> feasible(span + 1, Bits(ops.words, 0));
  BitOps::set(feasible[span], goal_idx);
  for (size_t k = span; k-- > 0;) {
    Timestep t = start_time + static_cast<Timestep>(k);
    Bits preds = ops.neighborhood(feasible[k + 1]);
    auto eit = edges_at.find(t);
    if (eit != edges_at.end()) {
      for (const EdgeBan& ban : eit->second) {
        if (!BitOps::test(preds, ban.from) ||
            !BitOps::test(feasible[k + 1], ban.to))
          continue;
        Vertex from_v = map.vertex(ban.from);
        bool escapes = false;
        for (const Vertex& d : move_order) {
          Vertex to_v{from_v.x + d.x, from_v.y + d.y};
          if (!map.in_bounds(to_v)) continue;
          int to_idx = map.index(to_v);
          if (to_idx == ban.to || !BitOps::test(feasible[k + 1], to_idx))
            continue;
          bool also_banned = false;
          for (const EdgeBan& other : eit->second)
            if (other.from == ban.from && other.to == to_idx) also_banned = true;
          if (!also_banned) {
            escapes = true;
            break;
          }
        }
        if (!escapes) BitOps::clear(preds, ban.from);
      }
    }
    BitOps::and_into(preds, reach[k]);
    feasible[k] = std::move(preds);
  }

  // Lexicographic walk: smallest (y, x) successor that still completes.
  Path path;
  path.start_time = start_time;
  path.steps.reserve(span + 1);
  Vertex pos = start;
  path.steps.push_back(pos);
  for (size_t k = 0; k < span; ++k) {
    Timestep t = start_time + static_cast<Timestep>(k);
    const auto* bans = edges_at.count(t) ? &edges_at[t] : nullptr;
    bool advanced = false;
    for (const Vertex& d : move_order) {
      Vertex nxt{pos.x + d.x, pos.y + d.y};
      if (!map.in_bounds(nxt)) continue;
      int nxt_idx = map.index(nxt);
      if (!BitOps::test(feasible[k + 1], nxt_idx)) continue;
      if (bans && nxt_idx != map.index(pos)) {
        bool banned = false;
        for (const EdgeBan& ban : *bans)
          if (ban.from == map.index(pos) && ban.to == nxt_idx) banned = true;
        if (banned) continue;
      }
      pos = nxt;
      path.steps.push_back(pos);
      advanced = true;
      break;
    }
    if (!advanced) return std::nullopt;  // defensive; sweeps guarantee a step
  }
  return path;
}

}  // namespace prism
