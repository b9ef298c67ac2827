#include "stagegraph/reach.hpp"

#include <algorithm>

namespace sg {

namespace {

std::set<std::string> intersect(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::set<std::string> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

LinearTerm sum_over(const std::set<std::string>& states, const std::map<std::string, LinearTerm>& value) {
  LinearTerm t;
  for (const auto& q : states) t += value.at(q);
  return t;
}

std::string membership_var(const std::string& q) { return "p@" + q; }

LinearTerm membership_sum(const std::set<std::string>& states) {
  LinearTerm t;
  for (const auto& q : states) t += LinearTerm::var(membership_var(q));
  return t;
}

// Smallest-cardinality 0/1 solution of `constraints` over membership
// variables of the system's states.
std::optional<std::set<std::string>> smallest_structure(const ReplicatedSystem& system, Formula constraints,
                                                        Solver& solver) {
  std::vector<Formula> bounds{std::move(constraints)};
  for (const auto& q : system.states()) bounds.push_back(LinearTerm::var(membership_var(q)) <= LinearTerm(1));
  Formula base = Formula::conj(std::move(bounds));
  std::set<std::string> all(system.states().begin(), system.states().end());
  std::optional<std::set<std::string>> best;
  Formula query = base;
  for (;;) {
    SolverVerdict v = solver.check(query);
    if (v.unknown()) throw InconclusiveError("structure search: " + v.reason);
    if (v.unsat()) return best;
    std::set<std::string> found;
    for (const auto& q : system.states())
      if (v.model[membership_var(q)] > 0) found.insert(q);
    best = found;
    query = base && (membership_sum(all) <= LinearTerm(Int(found.size()) - 1));
  }
}

struct LayerWitness {
  std::map<std::string, Int> initial;
  std::map<std::string, Int> flow;
  std::map<std::string, Int> current;
};

std::optional<LayerWitness> read_layer(const FlowLayer& layer, const Valuation& model) {
  LayerWitness w;
  for (std::size_t i = 0; i < layer.states.size(); ++i) {
    auto it = model.find(layer.initial_vars[i]);
    if (it == model.end()) return std::nullopt;
    w.initial[layer.states[i]] = it->second;
    try {
      w.current[layer.states[i]] = layer.current[i].evaluate(model);
    } catch (const InputError&) {
      return std::nullopt;
    }
  }
  for (std::size_t i = 0; i < layer.transitions.size(); ++i) {
    auto it = model.find(layer.flow_vars[i]);
    w.flow[layer.transitions[i]] = it == model.end() ? Int(0) : it->second;
  }
  return w;
}

void collect_layers(const Formula& f, std::vector<const FlowLayer*>& out) {
  if (f.layer()) out.push_back(f.layer());
  for (const auto& c : f.children()) collect_layers(c, out);
}

std::optional<Trap> separating_trap(const ReplicatedSystem& system, const LayerWitness& w, Solver& solver) {
  std::vector<Formula> parts;
  for (const auto& t : system.transitions())
    for (const auto& [q, n] : t.pre.entries())
      parts.push_back(LinearTerm::var(membership_var(q)) <= membership_sum(t.post.support()));
  std::set<std::string> marked;
  for (const auto& [q, n] : w.initial)
    if (n > 0) marked.insert(q);
  if (marked.empty()) return std::nullopt;
  parts.push_back(membership_sum(marked) >= LinearTerm(1));
  for (const auto& [q, n] : w.current)
    if (n > 0) parts.push_back(eq(LinearTerm::var(membership_var(q)), 0));
  auto found = smallest_structure(system, Formula::conj(std::move(parts)), solver);
  if (!found) return std::nullopt;
  return make_trap(system, *found);
}

std::optional<Siphon> separating_siphon(const ReplicatedSystem& system, const LayerWitness& w, Solver& solver) {
  std::vector<Formula> parts;
  for (const auto& t : system.transitions())
    for (const auto& [q, n] : t.post.entries())
      parts.push_back(LinearTerm::var(membership_var(q)) <= membership_sum(t.pre.support()));
  for (const auto& [q, n] : w.initial)
    if (n > 0) parts.push_back(eq(LinearTerm::var(membership_var(q)), 0));
  LinearTerm consumed;
  for (const auto& t : system.transitions())
    if (w.flow.at(t.name) > 0) consumed += membership_sum(t.pre.support());
  if (consumed.is_constant()) return std::nullopt;
  parts.push_back(consumed >= LinearTerm(1));
  auto found = smallest_structure(system, Formula::conj(std::move(parts)), solver);
  if (!found) return std::nullopt;
  return make_siphon(system, *found);
}

}  // namespace

bool is_trap(const ReplicatedSystem& system, const std::set<std::string>& states) {
  for (const auto& t : system.transitions())
    if (!intersect(t.pre.support(), states).empty() && intersect(t.post.support(), states).empty()) return false;
  return true;
}

bool is_siphon(const ReplicatedSystem& system, const std::set<std::string>& states) {
  for (const auto& t : system.transitions())
    if (!intersect(t.post.support(), states).empty() && intersect(t.pre.support(), states).empty()) return false;
  return true;
}

Trap make_trap(const ReplicatedSystem& system, std::set<std::string> states) {
  if (states.empty()) throw PreconditionError("empty trap");
  for (const auto& q : states) system.state_index(q);
  if (!is_trap(system, states)) throw PreconditionError("not a trap");
  return Trap{std::move(states)};
}

Siphon make_siphon(const ReplicatedSystem& system, std::set<std::string> states) {
  if (states.empty()) throw PreconditionError("empty siphon");
  for (const auto& q : states) system.state_index(q);
  if (!is_siphon(system, states)) throw PreconditionError("not a siphon");
  return Siphon{std::move(states)};
}

bool StructurePool::add(const Trap& t) {
  if (full() || std::find(traps.begin(), traps.end(), t) != traps.end()) return false;
  traps.push_back(t);
  return true;
}

bool StructurePool::add(const Siphon& s) {
  if (full() || std::find(siphons.begin(), siphons.end(), s) != siphons.end()) return false;
  siphons.push_back(s);
  return true;
}

Formula pre_set(const ReplicatedSystem& system, const Formula& phi, const TransitionSet& U) {
  if (U.empty()) throw PreconditionError("pre_set of an empty transition set");
  std::vector<Formula> parts;
  for (const auto& name : U) {
    const Transition& t = system.transition(name);
    std::map<std::string, LinearTerm> after;
    for (const auto& [q, d] : delta(t)) after[q] = LinearTerm::var(q) + LinearTerm(d);
    parts.push_back(enabled_formula(t) && phi.substitute(after));
  }
  return Formula::disj(std::move(parts));
}

Formula post_set(const ReplicatedSystem& system, const Formula& phi, const TransitionSet& U) {
  if (U.empty()) throw PreconditionError("post_set of an empty transition set");
  std::vector<Formula> parts;
  for (const auto& name : U) {
    const Transition& t = system.transition(name);
    std::map<std::string, LinearTerm> before;
    for (const auto& [q, d] : delta(t)) before[q] = LinearTerm::var(q) - LinearTerm(d);
    // C - delta(t) >= pre(t) is C >= post(t).
    std::vector<Formula> produced;
    for (const auto& [q, n] : t.post.entries()) produced.push_back(LinearTerm::var(q) >= LinearTerm(n));
    parts.push_back(Formula::conj(std::move(produced)) && phi.substitute(before));
  }
  return Formula::disj(std::move(parts));
}

PReachResult preach(const ReplicatedSystem& system, const Formula& phi, const StructurePool& pool) {
  auto layer = std::make_shared<FlowLayer>();
  std::map<std::string, LinearTerm> initial, current;
  std::vector<std::string> bound;
  for (const auto& q : system.states()) {
    std::string v = fresh_name("c0@" + q);
    layer->states.push_back(q);
    layer->initial_vars.push_back(v);
    layer->current.push_back(LinearTerm::var(q));
    initial[q] = LinearTerm::var(v);
    current[q] = LinearTerm::var(q);
    bound.push_back(v);
  }
  std::map<std::string, LinearTerm> flow;
  for (const auto& t : system.transitions()) {
    std::string v = fresh_name("x@" + t.name);
    layer->transitions.push_back(t.name);
    layer->flow_vars.push_back(v);
    flow[t.name] = LinearTerm::var(v);
    bound.push_back(v);
  }
  std::vector<Formula> parts{phi.substitute(initial)};
  for (const auto& q : system.states()) {
    LinearTerm reached = initial[q];
    for (const auto& t : system.transitions()) {
      Int d = 0;
      for (const auto& [p, n] : delta(t))
        if (p == q) d = n;
      if (d != 0) reached += flow[t.name] * d;
    }
    parts.push_back(eq(current[q], reached));
  }
  for (const auto& trap : pool.traps)
    parts.push_back(eq(sum_over(trap.states, initial), 0) || (sum_over(trap.states, current) >= LinearTerm(1)));
  for (const auto& siphon : pool.siphons) {
    std::vector<Formula> silent;
    for (const auto& t : system.transitions())
      if (!intersect(t.pre.support(), siphon.states).empty()) silent.push_back(eq(flow[t.name], 0));
    parts.push_back((sum_over(siphon.states, initial) >= LinearTerm(1)) || Formula::conj(std::move(silent)));
  }
  PReachResult r;
  r.initial = phi;
  r.formula = Formula::exists(bound, Formula::conj(std::move(parts)), layer);
  r.traps_used = pool.traps;
  r.siphons_used = pool.siphons;
  return r;
}

bool refine_from_model(const ReplicatedSystem& system, const Formula& query, const Valuation& model,
                       StructurePool& pool, Solver& solver) {
  std::vector<const FlowLayer*> layers;
  collect_layers(query, layers);
  bool grew = false;
  for (const FlowLayer* layer : layers) {
    if (pool.full()) break;
    auto w = read_layer(*layer, model);
    if (!w) continue;
    if (auto trap = separating_trap(system, *w, solver)) {
      grew = pool.add(*trap) || grew;
      continue;
    }
    if (auto siphon = separating_siphon(system, *w, solver)) grew = pool.add(*siphon) || grew;
  }
  return grew;
}

SolverVerdict check_refined(const ReplicatedSystem& system, const std::function<Formula()>& build,
                            StructurePool& pool, Solver& solver) {
  for (;;) {
    Formula q = rename_bound_apart(build());
    SolverVerdict v = solver.check(q);
    if (!v.sat()) return v;
    if (!refine_from_model(system, q, v.model, pool, solver)) return v;
  }
}

std::variant<PReachResult, NoTrapFound> refine_with_trap(const ReplicatedSystem& system, const PReachResult& result,
                                                         const Configuration& spurious, std::size_t limit,
                                                         Solver& solver) {
  system.validate(spurious);
  StructurePool pool;
  pool.limit = limit;
  pool.traps = result.traps_used;
  pool.siphons = result.siphons_used;
  std::vector<Formula> at;
  for (const auto& q : system.states()) at.push_back(eq(LinearTerm::var(q), LinearTerm(spurious[q])));
  Formula pin = Formula::conj(std::move(at));
  bool first = true;
  for (;;) {
    PReachResult current = first ? result : preach(system, result.initial, pool);
    Formula q = rename_bound_apart(current.formula && pin);
    SolverVerdict v = solver.check(q);
    if (v.unknown()) throw InconclusiveError("refinement: " + v.reason);
    if (v.unsat()) {
      if (first) throw PreconditionError("configuration " + spurious.to_string() + " is not in the formula");
      return current;
    }
    first = false;
    if (pool.full()) return NoTrapFound{"structure limit reached"};
    if (!refine_from_model(system, q, v.model, pool, solver))
      return NoTrapFound{"no trap or siphon separates " + spurious.to_string()};
  }
}

}  // namespace sg
