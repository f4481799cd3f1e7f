#include "prism/tasking.hpp"

#include <algorithm>
#include <optional>

namespace prism {

namespace {

const Task* find_task(const std::vector<Task>& tasks, int id) {
  for (const Task& t : tasks)
    if (t.id == id) return &t;
  return nullptr;
}

}  // namespace

std::string to_string(const Task& t) {
  return std::string(t.kind == Task::Kind::kMission ? "mission" : "transition") +
         "#" + std::to_string(t.id) + " " + to_string(t.start) + "->" +
         to_string(t.goal);
}

std::map<AgentId, Task> allocate_tasks(const std::vector<Task>& unstarted,
                                       const std::vector<AllocatorAgent>& agents) {
  // task id -> agent id working state; -1 = pooled.
  std::map<int, AgentId> holder;
  std::map<AgentId, int> held;
  std::map<AgentId, Vertex> position;
  std::vector<AgentId> market;  // ascending ids

  for (const Task& t : unstarted) holder[t.id] = -1;
  for (const AllocatorAgent& a : agents) {
    position[a.id] = a.position;
    bool carried = a.assigned_unstarted && holder.count(*a.assigned_unstarted);
    if (carried) {
      holder[*a.assigned_unstarted] = a.id;
      held[a.id] = *a.assigned_unstarted;
    }
    if (a.requesting || carried) market.push_back(a.id);
  }
  std::sort(market.begin(), market.end());

  auto dist = [&](AgentId agent, int task_id) {
    return manhattan(position.at(agent), find_task(unstarted, task_id)->start);
  };

  // Greedy phase: each bare requester grabs its nearest pooled mission.
  for (AgentId agent : market) {
    if (held.count(agent)) continue;
    int best = -1, best_dist = 0;
    for (const Task& t : unstarted) {
      if (holder[t.id] != -1) continue;
      int d = manhattan(position.at(agent), t.start);
      if (best == -1 || d < best_dist || (d == best_dist && t.id < best)) {
        best = t.id;
        best_dist = d;
      }
    }
    if (best != -1) {
      holder[best] = agent;
      held[agent] = best;
    }
  }

  // Improvement passes: move a mission to an idle market agent or exchange two
  // missions whenever that strictly lowers the total start-distance estimate.
  int max_passes = std::max<int>(1, static_cast<int>(agents.size()));
  for (int pass = 0; pass < max_passes; ++pass) {
    bool changed = false;
    for (const Task& t : unstarted) {
      AgentId a = holder[t.id];
      if (a == -1) {  // pooled: any idle market agent should take it
        int best = -1, best_dist = 0;
        for (AgentId b : market) {
          if (held.count(b)) continue;
          int d = dist(b, t.id);
          if (best == -1 || d < best_dist) {
            best = b;
            best_dist = d;
          }
        }
        if (best != -1) {
          holder[t.id] = best;
          held[best] = t.id;
          changed = true;
        }
        continue;
      }
      // The candidate moves all hand this mission to someone else (or trade
      // it for a pooled one); the displaced mission settles on a third agent
      // when that is what makes the move pay off.
      struct Move {
        AgentId to = -1;       // new holder of t
        int pool_take = -1;    // pooled task a grabs when trading
        AgentId relay = -1;    // third agent receiving the displaced mission
        AgentId tail = -1;     // three-way cycles: a picks up this holder's task
      };
      long long best_delta = 0;
      std::optional<Move> best;
      for (AgentId b : market) {
        if (b == a) continue;
        if (!held.count(b)) {
          long long delta = dist(b, t.id) - dist(a, t.id);
          if (delta < best_delta) {
            best_delta = delta;
            best = Move{b, -1, -1, -1};
          }
          continue;
        }
        const int v = held.at(b);
        long long delta =
            (dist(a, v) + dist(b, t.id)) - (dist(a, t.id) + dist(b, v));
        if (delta < best_delta) {
          best_delta = delta;
          best = Move{b, -1, -1, -1};
        }
        // Rotate through an idle agent: b takes t, c takes b's mission,
        // a steps out of the pair entirely.
        for (AgentId c : market) {
          if (c == a || c == b || held.count(c)) continue;
          delta = (dist(b, t.id) - dist(a, t.id)) + (dist(c, v) - dist(b, v));
          if (delta < best_delta) {
            best_delta = delta;
            best = Move{b, -1, c, -1};
          }
        }
        // Three-holder cycle: t to b, b's mission to c, c's mission to a.
        for (AgentId c : market) {
          if (c == a || c == b || !held.count(c)) continue;
          const int w = held.at(c);
          delta = (dist(b, t.id) - dist(a, t.id)) +
                  (dist(c, v) - dist(b, v)) + (dist(a, w) - dist(c, w));
          if (delta < best_delta) {
            best_delta = delta;
            best = Move{b, -1, c, c};
          }
        }
        // Chain through the pool: b takes t, b's mission returns to the
        // pool, and a backfills with a pooled one.
        for (const Task& p : unstarted) {
          if (holder[p.id] != -1) continue;
          delta = (dist(b, t.id) - dist(a, t.id)) + (dist(a, p.id) - dist(b, v));
          if (delta < best_delta) {
            best_delta = delta;
            best = Move{b, p.id, -1, -1};
          }
        }
      }
      for (const Task& p : unstarted) {  // trade this mission for a pooled one
        if (holder[p.id] != -1) continue;
        long long delta = dist(a, p.id) - dist(a, t.id);
        if (delta < best_delta) {
          best_delta = delta;
          best = Move{a, p.id, -1, -1};
        }
      }
      if (best) {
        if (best->pool_take != -1 && best->to != a) {
          const int v = held.at(best->to);
          holder[t.id] = best->to;
          held[best->to] = t.id;
          holder[v] = -1;
          holder[best->pool_take] = a;
          held[a] = best->pool_take;
        } else if (best->pool_take != -1) {
          holder[t.id] = -1;
          holder[best->pool_take] = a;
          held[a] = best->pool_take;
        } else if (best->tail != -1) {
          const int v = held.at(best->to);
          const int w = held.at(best->tail);
          holder[t.id] = best->to;
          held[best->to] = t.id;
          holder[v] = best->tail;
          held[best->tail] = v;
          holder[w] = a;
          held[a] = w;
        } else if (best->relay != -1) {
          const int v = held.at(best->to);
          holder[t.id] = best->to;
          held[best->to] = t.id;
          holder[v] = best->relay;
          held[best->relay] = v;
          held.erase(a);
        } else if (!held.count(best->to)) {
          held.erase(a);
          holder[t.id] = best->to;
          held[best->to] = t.id;
        } else {
          const int v = held.at(best->to);
          holder[t.id] = best->to;
          holder[v] = a;
          held[best->to] = t.id;
          held[a] = v;
        }
        changed = true;
      }
    }
    if (!changed) break;
  }

  std::map<AgentId, Task> out;
  for (const auto& [task_id, agent] : holder) {
    if (agent == -1) continue;
    Task t = *find_task(unstarted, task_id);
    t.assignee = agent;
    out[agent] = t;
  }
  return out;
}

std::pair<int, long long> assignment_objective(
    const std::vector<Task>& unstarted, const std::vector<AllocatorAgent>& agents,
    const std::map<AgentId, Task>& assignment) {
  long long sum = 0;
  int assigned = 0;
  for (const auto& [agent, task] : assignment) {
    for (const AllocatorAgent& a : agents) {
      if (a.id == agent) {
        sum += manhattan(a.position, task.start);
        ++assigned;
      }
    }
  }
  return {static_cast<int>(unstarted.size()) - assigned, sum};
}

}  // namespace prism
