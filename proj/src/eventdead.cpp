#include "stagegraph/eventdead.hpp"

namespace sg {

namespace {

struct CoefficientVars {
  std::map<std::string, std::string> name;  // state -> solver variable

  explicit CoefficientVars(const ReplicatedSystem& system) {
    for (const auto& q : system.states()) name[q] = fresh_name("a@" + q);
  }

  LinearTerm dot(const Delta& d) const {
    LinearTerm t;
    for (const auto& [q, n] : d) t += LinearTerm::var(name.at(q), n);
    return t;
  }

  Coefficients read(const Valuation& model) const {
    Coefficients a;
    for (const auto& [q, v] : name) {
      auto it = model.find(v);
      if (it != model.end() && it->second != 0) a[q] = it->second;
    }
    return a;
  }
};

SolverVerdict decided(Solver& solver, const Formula& f, const char* what) {
  SolverVerdict v = solver.check(f);
  if (v.unknown()) throw InconclusiveError(std::string(what) + ": " + v.reason);
  return v;
}

// Picks a solution of `base` with the smallest maximal coefficient, then
// the largest support among `changing`. `base` must be satisfiable.
Coefficients choose(Solver& solver, const CoefficientVars& vars, const Formula& base,
                    const std::set<std::string>& changing) {
  auto capped = [&](const Int& cap) {
    std::vector<Formula> parts{base};
    for (const auto& [q, v] : vars.name) parts.push_back(LinearTerm::var(v) <= LinearTerm(cap));
    return Formula::conj(std::move(parts));
  };
  Int hi = 1;
  SolverVerdict best = decided(solver, capped(hi), "coefficients");
  while (!best.sat()) {
    hi *= 2;
    best = decided(solver, capped(hi), "coefficients");
  }
  Int lo = hi / 2;  // infeasible (or 0)
  while (hi - lo > 1) {
    Int mid = (lo + hi) / 2;
    SolverVerdict v = decided(solver, capped(mid), "coefficients");
    if (v.sat()) {
      hi = mid;
      best = v;
    } else {
      lo = mid;
    }
  }
  Formula bounded = capped(hi);
  std::vector<Formula> marks;
  LinearTerm support;
  for (const auto& q : changing) {
    std::string z = fresh_name("z@" + q);
    marks.push_back(LinearTerm::var(z) <= LinearTerm(1));
    marks.push_back(LinearTerm::var(z) <= LinearTerm::var(vars.name.at(q)));
    support += LinearTerm::var(z);
  }
  Formula with_marks = bounded && Formula::conj(std::move(marks));
  Coefficients chosen = vars.read(best.model);
  std::size_t count = 0;
  for (const auto& q : changing)
    if (chosen.count(q)) ++count;
  while (count < changing.size()) {
    SolverVerdict v = decided(solver, with_marks && (support >= LinearTerm(Int(count + 1))), "coefficients");
    if (!v.sat()) break;
    chosen = vars.read(v.model);
    count = 0;
    for (const auto& q : changing)
      if (chosen.count(q)) ++count;
  }
  return chosen;
}

std::set<std::string> changing_states(const ReplicatedSystem& system, const TransitionSet& ts) {
  std::set<std::string> out;
  for (const auto& name : ts)
    for (const auto& [q, n] : delta(system.transition(name))) out.insert(q);
  return out;
}

// pre(t) + (pre(u) ∸ post(t)) >= pre(v)
bool reenabling_covered(const Transition& t, const Transition& u, const Transition& v) {
  Multiset m = t.pre;
  for (const auto& [q, n] : u.pre.entries()) {
    Int rest = n - t.post[q];
    if (rest > 0) m.add(q, rest);
  }
  return m.covers(v.pre);
}

void check_subset(const ReplicatedSystem& system, const TransitionSet& sub, const TransitionSet& super,
                  const char* what) {
  for (const auto& name : sub) {
    system.transition(name);
    if (!super.count(name)) throw PreconditionError(std::string(what) + ": " + name + " is not in scope");
  }
}

}  // namespace

Int dot(const Coefficients& a, const Delta& d) {
  Int s = 0;
  for (const auto& [q, n] : d) {
    auto it = a.find(q);
    if (it != a.end()) s += it->second * n;
  }
  return s;
}

std::optional<Coefficients> ranking_for(const ReplicatedSystem& system, const std::string& t,
                                        const TransitionSet& alive, Solver& solver) {
  check_subset(system, {t}, alive, "ranking_for");
  CoefficientVars vars(system);
  std::vector<Formula> parts{vars.dot(delta(system.transition(t))) <= LinearTerm(-1)};
  for (const auto& u : alive) parts.push_back(vars.dot(delta(system.transition(u))) <= LinearTerm(0));
  Formula base = Formula::conj(std::move(parts));
  if (!decided(solver, base, "ranking").sat()) return std::nullopt;
  return choose(solver, vars, base, changing_states(system, alive));
}

std::optional<RankingCertificate> max_ranking_set(const ReplicatedSystem& system, const TransitionSet& alive,
                                                  Solver& solver) {
  RankingCertificate cert;
  for (const auto& t : alive) {
    std::optional<Coefficients> a;
    try {
      a = ranking_for(system, t, alive, solver);
    } catch (const InconclusiveError&) {
      cert.incomplete = true;
      continue;
    }
    if (!a) continue;
    cert.killed.insert(t);
    for (const auto& [q, n] : *a) cert.coefficients[q] += n;
  }
  if (cert.killed.empty()) return std::nullopt;
  return cert;
}

bool diseqdead(const ReplicatedSystem& system, const TransitionSet& U, const TransitionSet& scope) {
  check_subset(system, U, scope, "diseqdead");
  for (const auto& tn : scope) {
    const Transition& t = system.transition(tn);
    for (const auto& un : U) {
      bool ok = false;
      for (const auto& vn : U)
        if (reenabling_covered(t, system.transition(un), system.transition(vn))) ok = true;
      if (!ok) return false;
    }
  }
  return true;
}

std::optional<LayerCertificate> max_layer_set(const ReplicatedSystem& system, const TransitionSet& alive,
                                              const TransitionSet& scope, Solver& solver) {
  check_subset(system, alive, scope, "max_layer_set");
  if (alive.empty()) return std::nullopt;
  CoefficientVars vars(system);
  std::map<std::string, std::string> sel;
  for (const auto& u : alive) sel[u] = fresh_name("s@" + u);
  std::vector<Formula> parts;
  LinearTerm count;
  for (const auto& u : alive) {
    LinearTerm s = LinearTerm::var(sel[u]);
    count += s;
    parts.push_back(s <= LinearTerm(1));
    parts.push_back(eq(s, 0) || (vars.dot(delta(system.transition(u))) <= LinearTerm(-1)));
    for (const auto& tn : scope) {
      std::vector<Formula> covered;
      for (const auto& v : alive)
        if (reenabling_covered(system.transition(tn), system.transition(u), system.transition(v)))
          covered.push_back(LinearTerm::var(sel[v]) >= LinearTerm(1));
      parts.push_back(eq(s, 0) || Formula::disj(std::move(covered)));
    }
  }
  Formula base = Formula::conj(std::move(parts));
  for (std::size_t k = alive.size(); k >= 1; --k) {
    SolverVerdict v = decided(solver, base && (count >= LinearTerm(Int(k))), "layer");
    if (!v.sat()) continue;
    LayerCertificate cert;
    for (const auto& [u, s] : sel) {
      auto it = v.model.find(s);
      if (it != v.model.end() && it->second >= 1) cert.killed.insert(u);
    }
    std::vector<Formula> signs;
    for (const auto& u : cert.killed) signs.push_back(vars.dot(delta(system.transition(u))) <= LinearTerm(-1));
    cert.coefficients = choose(solver, vars, Formula::conj(std::move(signs)), changing_states(system, alive));
    if (!check_layer(system, cert.coefficients, cert.killed, scope))
      throw std::logic_error("solver model is not a layer function");
    return cert;
  }
  return std::nullopt;
}

EventDeadResult event_dead(const ReplicatedSystem& system, const TransitionSet& alive, bool global_diseqdead,
                           Solver& solver) {
  EventDeadResult r;
  if (alive.empty()) return r;
  if (auto rank = max_ranking_set(system, alive, solver)) {
    r.killed = rank->killed;
    r.certificate.emplace<RankingCertificate>(*rank);
    return r;
  }
  TransitionSet scope = global_diseqdead ? system.all_transitions() : alive;
  if (auto layer = max_layer_set(system, alive, scope, solver)) {
    r.killed = layer->killed;
    r.certificate.emplace<LayerCertificate>(*layer);
  }
  return r;
}

bool check_ranking(const ReplicatedSystem& system, const Coefficients& a, const TransitionSet& killed,
                   const TransitionSet& alive) {
  for (const auto& [q, n] : a)
    if (!system.has_state(q) || n < 0) return false;
  for (const auto& t : killed)
    if (!alive.count(t) || dot(a, delta(system.transition(t))) > -1) return false;
  for (const auto& u : alive)
    if (dot(a, delta(system.transition(u))) > 0) return false;
  return !killed.empty();
}

bool check_layer(const ReplicatedSystem& system, const Coefficients& a, const TransitionSet& killed,
                 const TransitionSet& scope) {
  for (const auto& [q, n] : a)
    if (!system.has_state(q) || n < 0) return false;
  for (const auto& t : killed)
    if (!scope.count(t) || dot(a, delta(system.transition(t))) > -1) return false;
  return !killed.empty() && diseqdead(system, killed, scope);
}

}  // namespace sg
