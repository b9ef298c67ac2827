#include "stagegraph/checker.hpp"

#include <algorithm>
#include <functional>

namespace sg {

std::vector<Obligation> CheckReport::violations() const {
  std::vector<Obligation> out;
  for (const auto& o : obligations)
    if (o.outcome == Obligation::Outcome::Violated) out.push_back(o);
  return out;
}

std::vector<Obligation> CheckReport::unknowns() const {
  std::vector<Obligation> out;
  for (const auto& o : obligations)
    if (o.outcome == Obligation::Outcome::Unknown) out.push_back(o);
  return out;
}

const char* to_string(CheckReport::Verdict v) {
  switch (v) {
    case CheckReport::Verdict::Accept: return "accepted";
    case CheckReport::Verdict::Reject: return "rejected";
    case CheckReport::Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

const char* to_string(Obligation::Outcome o) {
  switch (o) {
    case Obligation::Outcome::Holds: return "holds";
    case Obligation::Outcome::Violated: return "violated";
    case Obligation::Outcome::Unknown: return "unknown";
  }
  return "?";
}

namespace {

using Outcome = Obligation::Outcome;

std::string join(const TransitionSet& s) {
  std::string out = "{";
  for (const auto& x : s) out += (out.size() > 1 ? ", " : "") + x;
  return out + "}";
}

class Checker {
 public:
  Checker(const ReplicatedSystem& system, const StageGraph& graph, Solver& solver)
      : system_(system), graph_(graph), solver_(solver) {}

  CheckReport run() {
    structure();
    // Structural damage makes the semantic obligations meaningless.
    if (report_.violations().empty()) {
      root_coverage();
      for (const auto& [id, s] : graph_.stages) {
        inductive(s);
        recorded_dead(s);
        if (s.terminal_post)
          terminal(s);
        else
          certificate(s);
      }
    }
    if (!report_.violations().empty())
      report_.verdict = CheckReport::Verdict::Reject;
    else if (!report_.unknowns().empty())
      report_.verdict = CheckReport::Verdict::Inconclusive;
    return report_;
  }

 private:
  const ReplicatedSystem& system_;
  const StageGraph& graph_;
  Solver& solver_;
  CheckReport report_;

  void note(const std::string& name, std::optional<std::size_t> stage, Outcome o, std::string detail = "") {
    report_.obligations.push_back({name, stage, o, std::move(detail)});
  }

  // Unsat of phi: Holds, Sat: Violated, Unknown: Unknown.
  Outcome unsat(const Formula& phi, std::string* why = nullptr) {
    SolverVerdict v;
    try {
      v = solver_.check(rename_bound_apart(phi));
    } catch (const InconclusiveError& e) {
      if (why) *why = e.what();
      return Outcome::Unknown;
    }
    if (v.unsat()) return Outcome::Holds;
    if (v.unknown()) {
      if (why) *why = v.reason;
      return Outcome::Unknown;
    }
    if (why) {
      std::string m;
      for (const auto& q : system_.states()) {
        auto it = v.model.find(q);
        m += (m.empty() ? "" : ", ") + q + ":" + (it == v.model.end() ? "0" : it->second.str());
      }
      *why = "counterexample " + m;
    }
    return Outcome::Violated;
  }

  static Outcome worst(Outcome a, Outcome b) {
    if (a == Outcome::Violated || b == Outcome::Violated) return Outcome::Violated;
    if (a == Outcome::Unknown || b == Outcome::Unknown) return Outcome::Unknown;
    return Outcome::Holds;
  }

  TransitionSet alive(const Stage& s) const {
    TransitionSet out;
    for (const auto& t : system_.transitions())
      if (!s.dead.count(t.name)) out.insert(t.name);
    return out;
  }

  void structure() {
    auto bad = [&](std::optional<std::size_t> id, const std::string& why) {
      note("structure", id, Outcome::Violated, why);
    };
    if (graph_.fingerprint != system_.fingerprint()) bad(std::nullopt, "graph was built for a different system");
    try {
      validate_property(system_, graph_.property);
    } catch (const InputError& e) {
      bad(std::nullopt, e.what());
    }
    if (graph_.roots.empty()) bad(std::nullopt, "no root stage");
    for (std::size_t r : graph_.roots)
      if (!graph_.stages.count(r)) bad(r, "root is not a stage");
    for (const auto& [id, s] : graph_.stages) {
      if (s.id != id) bad(id, "stage id mismatch");
      for (const auto& t : s.dead)
        if (!std::any_of(system_.transitions().begin(), system_.transitions().end(),
                         [&](const Transition& u) { return u.name == t; }))
          bad(id, "unknown transition " + t);
      for (std::size_t c : s.children)
        if (!graph_.stages.count(c)) bad(id, "child " + std::to_string(c) + " is not a stage");
      if (s.terminal_post) {
        if (*s.terminal_post >= graph_.property.posts.size()) bad(id, "no such postcondition");
        if (!s.children.empty()) bad(id, "terminal stage with children");
      } else if (s.children.empty()) {
        bad(id, "non-terminal stage without children");
      }
    }
    if (!report_.violations().empty()) return;

    for (const auto& [id, s] : graph_.stages)
      for (std::size_t c : s.children) {
        const auto& d = graph_.stages.at(c).dead;
        if (!std::includes(d.begin(), d.end(), s.dead.begin(), s.dead.end()) || d.size() <= s.dead.size())
          bad(id, "dead set does not grow into child " + std::to_string(c));
      }

    // Acyclicity by depth-first search.
    std::map<std::size_t, int> color;
    std::function<bool(std::size_t)> cyclic = [&](std::size_t id) {
      color[id] = 1;
      for (std::size_t c : graph_.stages.at(id).children) {
        if (color[c] == 1 || (color[c] == 0 && cyclic(c))) return true;
      }
      color[id] = 2;
      return false;
    };
    for (const auto& [id, s] : graph_.stages)
      if (color[id] == 0 && cyclic(id)) {
        bad(id, "cycle through stage " + std::to_string(id));
        break;
      }
    if (report_.violations().empty()) note("structure", std::nullopt, Outcome::Holds);
  }

  void root_coverage() {
    std::vector<Formula> q{graph_.property.pre};
    for (std::size_t r : graph_.roots) q.push_back(nnf(!graph_.stages.at(r).formula));
    std::string why;
    Outcome o = unsat(Formula::conj(std::move(q)), &why);
    note("root-coverage", std::nullopt, o, why);
  }

  void inductive(const Stage& s) {
    Outcome all = Outcome::Holds;
    std::string detail;
    for (const auto& t : system_.transitions()) {
      std::map<std::string, LinearTerm> after;
      for (const auto& [q, d] : delta(t)) after[q] = LinearTerm::var(q) + LinearTerm(d);
      std::string why;
      Outcome o = unsat(s.formula && enabled_formula(t) && nnf(!s.formula.substitute(after)), &why);
      if (o != Outcome::Holds && detail.empty()) detail = t.name + ": " + why;
      all = worst(all, o);
    }
    note("inductive", s.id, all, detail);
  }

  void recorded_dead(const Stage& s) {
    Outcome all = Outcome::Holds;
    std::string detail;
    for (const auto& name : s.dead) {
      std::string why;
      Outcome o = unsat(s.formula && enabled_formula(system_.transition(name)), &why);
      if (o != Outcome::Holds && detail.empty()) detail = name + " is enabled: " + why;
      all = worst(all, o);
    }
    note("dead-set", s.id, all, detail);
  }

  void terminal(const Stage& s) {
    std::string why;
    Outcome o = unsat(s.formula && nnf(!graph_.property.posts[*s.terminal_post]), &why);
    note("terminal", s.id, o, why);
  }

  Formula children_union(const Stage& s) const {
    std::vector<Formula> kids;
    for (std::size_t c : s.children) kids.push_back(graph_.stages.at(c).formula);
    return Formula::disj(std::move(kids));
  }

  void certificate(const Stage& s) {
    const StageCertificate& c = s.certificate;
    const TransitionSet live = alive(s);
    bool killed_alive = !c.killed.empty() && std::includes(live.begin(), live.end(), c.killed.begin(), c.killed.end());
    switch (c.kind) {
      case CertificateKind::Zero:
        note("certificate", s.id, Outcome::Violated, "zero certificate on a non-terminal stage");
        return;
      case CertificateKind::Ranking:
      case CertificateKind::Layer: {
        const char* name = c.kind == CertificateKind::Ranking ? "ranking" : "layer";
        if (!killed_alive) {
          note(name, s.id, Outcome::Violated, "killed set " + join(c.killed) + " is empty or not alive");
          return;
        }
        bool ok = c.kind == CertificateKind::Ranking
                      ? check_ranking(system_, c.coefficients, c.killed, live)
                      : check_layer(system_, c.coefficients, c.killed,
                                    graph_.global_diseqdead ? system_.all_transitions() : live);
        note(name, s.id, ok ? Outcome::Holds : Outcome::Violated, ok ? "" : "sign conditions fail");
        child_inclusion(s);
        return;
      }
      case CertificateKind::SplitCover: {
        Outcome all = Outcome::Holds;
        std::string detail;
        if (c.witnesses.size() != s.children.size()) {
          all = Outcome::Violated;
          detail = "one death certificate per child expected";
        }
        for (const auto& w : c.witnesses) {
          bool ok = !w.killed.empty() && std::includes(live.begin(), live.end(), w.killed.begin(), w.killed.end()) &&
                    is_death_certificate(system_, w.witnesses, w.killed);
          if (!ok) {
            all = Outcome::Violated;
            if (detail.empty()) detail = "invalid death certificate for " + join(w.killed);
          }
        }
        note("split-certificates", s.id, all, detail);
        std::string why;
        Outcome o = unsat(s.formula && nnf(!children_union(s)), &why);
        note("split-coverage", s.id, o, why);
        return;
      }
    }
  }

  // stage && dead(U) lies in the children, checked through the recorded
  // overapproximation of dead(U).
  void child_inclusion(const Stage& s) {
    const TransitionSet& U = s.certificate.killed;
    Overapprox mode = Overapprox::exact_mode();
    bool recorded = false;
    for (std::size_t c : s.children) {
      auto it = graph_.overapprox.find({s.id, c});
      if (it == graph_.overapprox.end()) continue;
      // Any level is sound; the first recorded one is used.
      if (!recorded) mode = it->second;
      recorded = true;
    }
    Formula dead = Formula::truth();
    try {
      dead = mode.exact ? down_formula(dead_exact(system_, U)) : dead_approx(system_, U, mode.level);
    } catch (const ExactComputationTooLarge& e) {
      note("child-inclusion", s.id, Outcome::Unknown, e.what());
      return;
    }
    std::string why;
    Outcome o = unsat(s.formula && dead && nnf(!children_union(s)), &why);
    note("child-inclusion", s.id, o, "mode " + mode.to_string() + (why.empty() ? "" : ": " + why));
  }
};

}  // namespace

CheckReport check_stage_graph(const ReplicatedSystem& system, const StageGraph& graph, Solver& solver) {
  return Checker(system, graph, solver).run();
}

}  // namespace sg
