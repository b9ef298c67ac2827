#include "stagegraph/oracle.hpp"

#include "stagegraph/smt.hpp"

#include <algorithm>
#include <random>
#include <unordered_map>

namespace sg {

namespace {

struct VecHash {
  std::size_t operator()(const std::vector<std::int64_t>& v) const {
    std::size_t h = 1469598103934665603ULL;
    for (auto x : v) h = (h ^ static_cast<std::size_t>(x)) * 1099511628211ULL;
    return h;
  }
};

std::vector<std::int64_t> dense(const ReplicatedSystem& system, const Configuration& c) {
  system.validate(c);
  std::vector<std::int64_t> v(system.states().size(), 0);
  for (const auto& [q, n] : c.entries()) {
    if (n > Int(std::numeric_limits<std::int32_t>::max()))
      throw OracleTooLarge("count of state '" + q + "' too large for explicit exploration");
    v[system.state_index(q)] = static_cast<std::int64_t>(n);
  }
  return v;
}

struct DenseTransition {
  std::vector<std::pair<std::size_t, std::int64_t>> pre;
  std::vector<std::pair<std::size_t, std::int64_t>> delta;
};

std::vector<DenseTransition> dense_transitions(const ReplicatedSystem& system) {
  std::vector<DenseTransition> out;
  for (const auto& t : system.transitions()) {
    DenseTransition d;
    for (const auto& [q, n] : t.pre.entries()) d.pre.emplace_back(system.state_index(q), static_cast<std::int64_t>(n));
    for (const auto& [q, n] : delta(t)) d.delta.emplace_back(system.state_index(q), static_cast<std::int64_t>(n));
    out.push_back(std::move(d));
  }
  return out;
}

bool dense_enabled(const std::vector<std::int64_t>& c, const DenseTransition& t) {
  for (const auto& [i, n] : t.pre)
    if (c[i] < n) return false;
  return true;
}

Valuation node_valuation(const ReachGraph& g, std::size_t node) {
  Valuation v;
  for (std::size_t i = 0; i < g.states.size(); ++i) v[g.states[i]] = g.nodes[node][i];
  return v;
}

bool satisfies(const Formula& f, const Valuation& v) {
  return f.is_quantifier_free() ? eval(f, v) : eval_with_solver(f, v);
}

}  // namespace

Configuration ReachGraph::configuration(std::size_t node) const {
  Configuration c;
  for (std::size_t i = 0; i < states.size(); ++i) c.set(states[i], nodes[node][i]);
  return c;
}

std::optional<std::size_t> ReachGraph::find(const Configuration& c) const {
  std::vector<std::int64_t> v(states.size(), 0);
  for (const auto& [q, n] : c.entries()) {
    auto it = std::find(states.begin(), states.end(), q);
    if (it == states.end()) return std::nullopt;
    v[static_cast<std::size_t>(it - states.begin())] = static_cast<std::int64_t>(n);
  }
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i] == v) return i;
  return std::nullopt;
}

ReachGraph reach_graph(const ReplicatedSystem& system, const Configuration& c, std::size_t budget) {
  ReachGraph g;
  g.states = system.states();
  auto ts = dense_transitions(system);
  std::unordered_map<std::vector<std::int64_t>, std::size_t, VecHash> index;
  g.nodes.push_back(dense(system, c));
  g.edges.emplace_back();
  index.emplace(g.nodes[0], 0);
  for (std::size_t head = 0; head < g.nodes.size(); ++head) {
    for (std::size_t ti = 0; ti < ts.size(); ++ti) {
      if (!dense_enabled(g.nodes[head], ts[ti])) continue;
      std::vector<std::int64_t> next = g.nodes[head];
      for (const auto& [i, n] : ts[ti].delta) next[i] += n;
      auto [it, inserted] = index.emplace(next, g.nodes.size());
      if (inserted) {
        if (g.nodes.size() >= budget) throw OracleTooLarge("reachability graph exceeds " + std::to_string(budget) + " nodes");
        g.nodes.push_back(std::move(next));
        g.edges.emplace_back();
      }
      g.edges[head].emplace_back(ti, it->second);
    }
  }
  return g;
}

std::vector<std::vector<std::size_t>> bsccs(const ReachGraph& g) {
  // Iterative Tarjan.
  const std::size_t n = g.size();
  const std::size_t unvisited = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, unvisited), low(n, 0), comp(n, unvisited);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> components;
  std::size_t counter = 0;
  std::vector<std::pair<std::size_t, std::size_t>> call;  // node, next edge position
  for (std::size_t s = 0; s < n; ++s) {
    if (index[s] != unvisited) continue;
    call.emplace_back(s, 0);
    index[s] = low[s] = counter++;
    stack.push_back(s);
    on_stack[s] = true;
    while (!call.empty()) {
      auto& [v, pos] = call.back();
      if (pos < g.edges[v].size()) {
        std::size_t w = g.edges[v][pos++].second;
        if (index[w] == unvisited) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      std::size_t done = v;
      call.pop_back();
      if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
      if (low[done] == index[done]) {
        std::vector<std::size_t> members;
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = components.size();
          members.push_back(w);
        } while (w != done);
        components.push_back(std::move(members));
      }
    }
  }
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t ci = 0; ci < components.size(); ++ci) {
    bool bottom = true;
    for (auto v : components[ci])
      for (const auto& [t, w] : g.edges[v])
        if (comp[w] != ci) bottom = false;
    if (!bottom) continue;
    auto members = components[ci];
    std::sort(members.begin(), members.end());
    out.push_back(std::move(members));
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool check_stable_termination_at(const ReplicatedSystem& system, const StableTerminationProperty& property,
                                  const Configuration& c, std::string* warning, std::size_t budget) {
  if (warning) {
    warning->clear();
    if (!satisfies(property.pre, valuation_of(system, c)))
      *warning = "configuration " + c.to_string() + " violates the precondition of " + property.name;
  }
  ReachGraph g = reach_graph(system, c, budget);
  for (const auto& b : bsccs(g)) {
    bool some = false;
    for (const auto& post : property.posts) {
      bool all = true;
      for (auto v : b)
        if (!satisfies(post, node_valuation(g, v))) {
          all = false;
          break;
        }
      if (all) {
        some = true;
        break;
      }
    }
    if (!some) return false;
  }
  return true;
}

bool every_fair_run_reaches(const ReplicatedSystem& system, const Configuration& c, const Formula& target,
                            std::size_t budget) {
  ReachGraph g = reach_graph(system, c, budget);
  std::vector<std::vector<std::size_t>> reverse(g.size());
  for (std::size_t v = 0; v < g.size(); ++v)
    for (const auto& [t, w] : g.edges[v]) reverse[w].push_back(v);
  std::vector<bool> reaches(g.size(), false);
  std::vector<std::size_t> work;
  for (std::size_t v = 0; v < g.size(); ++v)
    if (satisfies(target, node_valuation(g, v))) {
      reaches[v] = true;
      work.push_back(v);
    }
  while (!work.empty()) {
    std::size_t w = work.back();
    work.pop_back();
    for (auto v : reverse[w])
      if (!reaches[v]) {
        reaches[v] = true;
        work.push_back(v);
      }
  }
  return std::all_of(reaches.begin(), reaches.end(), [](bool b) { return b; });
}

bool dead_at(const ReplicatedSystem& system, const Configuration& c, const TransitionSet& U, std::size_t budget) {
  ReachGraph g = reach_graph(system, c, budget);
  auto ts = dense_transitions(system);
  std::vector<std::size_t> ids;
  for (const auto& u : U) ids.push_back(system.transition_index(u));
  for (const auto& node : g.nodes)
    for (auto i : ids)
      if (dense_enabled(node, ts[i])) return false;
  return true;
}

std::vector<TraceStep> simulate(const ReplicatedSystem& system, const Configuration& c, std::size_t steps,
                                std::uint64_t seed) {
  system.validate(c);
  std::mt19937_64 rng(seed);
  std::vector<TraceStep> trace{{0, "", c}};
  Configuration current = c;
  for (std::size_t i = 1; i <= steps; ++i) {
    std::vector<const Transition*> enabled_now;
    for (const auto& t : system.transitions())
      if (enabled(current, t)) enabled_now.push_back(&t);
    if (enabled_now.empty()) {
      trace.push_back({i, "", current});
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick(0, enabled_now.size() - 1);
    const Transition* t = enabled_now[pick(rng)];
    current = step(current, *t);
    trace.push_back({i, t->name, current});
  }
  return trace;
}

}  // namespace sg
