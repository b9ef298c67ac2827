// Acceptance gate. Usage: acceptance N (1..8) or acceptance all. Prints one
// PASS/FAIL line per criterion; the exit status is nonzero if any fails.

#include "stagegraph/checker.hpp"
#include "stagegraph/deadsets.hpp"
#include "stagegraph/engine.hpp"
#include "stagegraph/eventdead.hpp"
#include "stagegraph/io.hpp"
#include "stagegraph/oracle.hpp"
#include "stagegraph/split.hpp"
#include "mutations.hpp"
#include "support.hpp"

#include <chrono>
#include <deque>
#include <iostream>
#include <sstream>

using namespace sgtest;

namespace {

// Time budgets, in seconds.
constexpr double majority_budget = 30;
constexpr double dead_set_budget = 60;
constexpr double ground_truth_budget = 60;
constexpr double counting_budget = 120;
constexpr double property_budget = 120;
constexpr std::size_t majority_max_stages = 6;
constexpr std::size_t mutations_required = 20;

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail.clear();
    pass = false;
    detail += (detail.empty() ? "" : "; ") + why;
  }
};

class Clock {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fixed(double x) {
  std::ostringstream s;
  s.precision(2);
  s << std::fixed << x;
  return s.str();
}

SystemFile data(const std::string& name) { return load_system(std::string(STAGEGRAPH_DATA_DIR) + "/" + name); }

Coefficients nonzero(const Coefficients& a) {
  Coefficients out;
  for (const auto& [q, v] : a)
    if (v != 0) out[q] = v;
  return out;
}

std::set<std::string> support_of(const Coefficients& a) {
  std::set<std::string> s;
  for (const auto& [q, v] : a)
    if (v != 0) s.insert(q);
  return s;
}

bool structurally_sound(const StageGraph& g) {
  for (const auto& [id, s] : g.stages) {
    if (s.terminal_post && !s.children.empty()) return false;
    if (!s.terminal_post && s.children.empty()) return false;
    for (std::size_t c : s.children) {
      if (c == id) return false;
      const auto& d = g.stages.at(c).dead;
      if (!std::includes(d.begin(), d.end(), s.dead.begin(), s.dead.end()) || d.size() <= s.dead.size()) return false;
    }
  }
  // Strict growth of the dead sets already rules out cycles.
  return true;
}

Outcome criterion1() {
  Outcome o;
  SystemFile file = data("majority.json");
  std::vector<std::string> notes;
  for (const char* name : {"PiY", "PiN"}) {
    Clock clock;
    const auto& prop = find_property(file, name);
    auto r = construct_stage_graph(file.system, prop);
    if (auto* f = std::get_if<ConstructionFailure>(&r)) {
      o.fail(std::string(name) + " construction failed: " + f->reason);
      continue;
    }
    const auto& g = std::get<StageGraph>(r);
    auto report = check_stage_graph(file.system, g);
    double t = clock.seconds();
    notes.push_back(std::string(name) + " " + std::to_string(g.stages.size()) + " stages in " + fixed(t) + "s");
    if (report.verdict != CheckReport::Verdict::Accept) o.fail(std::string(name) + " graph not accepted");
    if (g.stages.size() > majority_max_stages) o.fail(std::string(name) + " has too many stages");
    if (t > majority_budget) o.fail(std::string(name) + " over time budget");
    if (std::string(name) != "PiY") continue;
    // A chain: ranking with support {AY, AN}, layer with support {PN}, terminal.
    std::vector<std::set<std::string>> supports;
    std::size_t id = g.roots.at(0);
    for (;;) {
      const auto& s = g.stages.at(id);
      if (s.terminal_post) break;
      if (s.children.size() != 1) break;
      supports.push_back(support_of(s.certificate.coefficients));
      id = s.children[0];
    }
    std::vector<std::set<std::string>> expected{{"AY", "AN"}, {"PN"}};
    if (g.stages.size() != 3 || supports != expected || !g.stages.at(id).terminal_post)
      o.fail("PiY graph is not the chain {AY, AN} -> {PN} -> terminal");
  }
  if (o.pass)
    for (const auto& n : notes) o.detail += (o.detail.empty() ? "" : ", ") + n;
  return o;
}

Outcome criterion2() {
  Outcome o;
  auto P1 = data("p1.json").system, P2 = data("p2.json").system;
  auto r1 = max_ranking_set(P1, P1.all_transitions());
  if (!r1 || r1->killed != TransitionSet{"t1"} || nonzero(r1->coefficients) != Coefficients{{"A", 1}, {"B", 1}})
    o.fail("P1 ranking is not {t1} with A + B");
  if (max_layer_set(P1, P1.all_transitions(), P1.all_transitions())) o.fail("P1 has a layer");
  if (max_ranking_set(P2, P2.all_transitions())) o.fail("P2 has a ranking");
  auto l2 = max_layer_set(P2, P2.all_transitions(), P2.all_transitions());
  if (!l2 || l2->killed != TransitionSet{"t5"} || nonzero(l2->coefficients) != Coefficients{{"A", 1}})
    o.fail("P2 layer is not {t5} with A");
  if (o.pass) o.detail = "P1: ranking {t1} by A + B, no layer; P2: no ranking, layer {t5} by A";
  return o;
}

Outcome criterion3() {
  Outcome o;
  auto probes_sys = data("probes.json").system;
  auto r = try_split(probes_sys, parse_formula("q1 == 0 || q2 == 0"), probes_sys.all_transitions());
  if (auto* s = std::get_if<SplitResult>(&r)) {
    std::set<TransitionSet> deads;
    for (const auto& p : s->parts) deads.insert(dead_transitions(probes_sys, p.formula));
    if (s->parts.size() != 2 || deads != std::set<TransitionSet>{{"t1"}, {"t2"}})
      o.fail("two-state split is not {t1} / {t2}");
  } else {
    o.fail("two-state stage did not split");
  }
  auto ring_sys = data("ring3.json").system;
  Formula s = parse_formula("c == 0 || a1 + a2 + a3 + b1 + b2 + b3 == 0");
  auto rr = try_split(ring_sys, s, ring_sys.all_transitions());
  if (auto* sp = std::get_if<SplitResult>(&rr)) {
    if (sp->parts.size() != 2) o.fail("ring splits into " + std::to_string(sp->parts.size()) + " parts");
  } else {
    o.fail("ring stage did not split");
  }
  if (o.pass) o.detail = "two-state: 2 parts with dead {t1}, {t2}; ring n=3: 2 parts";
  return o;
}

// No configuration reachable in at most i steps enables U.
bool dead_within(const ReplicatedSystem& sys, const Configuration& c, const TransitionSet& U, unsigned i) {
  std::set<Configuration> seen{c};
  std::deque<std::pair<Configuration, unsigned>> todo{{c, 0}};
  while (!todo.empty()) {
    auto [x, d] = todo.front();
    todo.pop_front();
    for (const auto& u : U)
      if (enabled(x, sys.transition(u))) return false;
    if (d == i) continue;
    for (const auto& t : sys.transitions())
      if (enabled(x, t)) {
        Configuration y = step(x, t);
        if (seen.insert(y).second) todo.emplace_back(y, d + 1);
      }
  }
  return true;
}

Outcome criterion4() {
  Outcome o;
  Clock clock;
  std::size_t checks = 0;
  for (const char* name : {"p1.json", "p2.json", "majority.json"}) {
    auto sys = data(name).system;
    for (const auto& U : subsets(sys.all_transitions())) {
      if (U.empty()) continue;
      DownwardSet exact = dead_exact(sys, U);
      std::vector<Formula> approx;
      for (unsigned i = 0; i <= 2; ++i) approx.push_back(dead_approx(sys, U, i));
      for_each_configuration(sys.states(), 6, [&](const Configuration& c) {
        auto v = valuation_of(sys, c);
        bool dead = dead_at(sys, c, U);
        if (exact.contains(c) != dead) o.fail(std::string(name) + " exact disagrees at " + c.to_string());
        bool previous = dead;
        for (unsigned i = 3; i-- > 0;) {
          bool in = eval(approx[i], v);
          if (in != dead_within(sys, c, U, i)) o.fail(std::string(name) + " level " + std::to_string(i) + " disagrees");
          if (previous && !in) o.fail("chain broken at " + c.to_string());
          previous = in;
        }
        bool disabled = std::none_of(U.begin(), U.end(), [&](const auto& u) { return enabled(c, sys.transition(u)); });
        if (previous && !disabled) o.fail("level 0 is not the disabled set");
        ++checks;
      });
    }
  }
  double t = clock.seconds();
  if (t > dead_set_budget) o.fail("over time budget (" + fixed(t) + "s)");
  if (o.pass) o.detail = std::to_string(checks) + " (U, C) pairs in " + fixed(t) + "s";
  return o;
}

Outcome criterion5() {
  Outcome o;
  Clock clock;
  SystemFile file = data("majority.json");
  std::size_t n = 0;
  for (const char* name : {"PiY", "PiN"}) {
    const auto& prop = find_property(file, name);
    for_each_configuration(file.system.states(), 8, [&](const Configuration& c) {
      if (!eval(prop.pre, valuation_of(file.system, c))) return;
      ++n;
      if (!check_stable_termination_at(file.system, prop, c)) o.fail(std::string(name) + " fails at " + c.to_string());
    });
  }
  double t = clock.seconds();
  if (t > ground_truth_budget) o.fail("over time budget (" + fixed(t) + "s)");
  if (o.pass) o.detail = std::to_string(n) + " initial configurations in " + fixed(t) + "s";
  return o;
}

Outcome criterion6() {
  Outcome o;
  SystemFile file = data("majority.json");
  std::vector<Mutant> all;
  for (const char* name : {"PiY", "PiN"}) {
    auto r = construct_stage_graph(file.system, find_property(file, name));
    if (!std::holds_alternative<StageGraph>(r)) {
      o.fail(std::string(name) + " construction failed");
      continue;
    }
    const auto& g = std::get<StageGraph>(r);
    if (check_stage_graph(file.system, g).verdict != CheckReport::Verdict::Accept)
      o.fail(std::string(name) + " graph not accepted");
    auto ms = mutants(g, name);
    all.insert(all.end(), ms.begin(), ms.end());
  }
  std::size_t rejected = 0, inconclusive = 0;
  for (const auto& m : all) {
    auto v = check_stage_graph(file.system, m.graph).verdict;
    if (v == CheckReport::Verdict::Accept) o.fail("accepted mutant: " + m.what);
    if (v == CheckReport::Verdict::Reject) ++rejected;
    if (v == CheckReport::Verdict::Inconclusive) ++inconclusive;
  }
  if (all.size() < mutations_required) o.fail("only " + std::to_string(all.size()) + " mutations");
  if (o.pass)
    o.detail = "2 graphs accepted; " + std::to_string(all.size()) + " mutations: " + std::to_string(rejected) +
               " rejected, " + std::to_string(inconclusive) + " inconclusive";
  return o;
}

Outcome criterion7() {
  Outcome o;
  std::vector<std::string> notes;
  for (int c : {5, 10}) {
    std::string tag = "c=" + std::to_string(c);
    SystemFile file = data("counting" + std::to_string(c) + ".json");
    const auto& prop = find_property(file, "");
    Clock clock;
    auto r = construct_stage_graph(file.system, prop);
    double t = clock.seconds();
    if (auto* f = std::get_if<ConstructionFailure>(&r)) {
      std::string w = f->witness ? " (witness " + f->witness->to_string() + ")" : "";
      o.fail(tag + ": not verified after " + fixed(t) + "s: " + f->reason + w);
    } else {
      const auto& g = std::get<StageGraph>(r);
      if (check_stage_graph(file.system, g).verdict != CheckReport::Verdict::Accept) o.fail(tag + ": graph rejected");
      if (t > counting_budget) o.fail(tag + ": over time budget");
    }
    // Oracle at every precondition configuration of population <= c + 2.
    std::vector<std::string> refuted;
    for (int n = c; n <= c + 2; ++n) {
      Configuration init{{"q1", n}};
      if (!check_stable_termination_at(file.system, prop, init)) refuted.push_back(init.to_string());
    }
    if (!refuted.empty()) {
      std::string list;
      for (const auto& x : refuted) list += (list.empty() ? "" : ", ") + x;
      o.fail(tag + ": oracle refutes the property at " + list);
    }
    notes.push_back(tag + " verified in " + fixed(t) + "s, oracle confirms");
  }
  if (o.pass)
    for (const auto& n : notes) o.detail += (o.detail.empty() ? "" : ", ") + n;
  return o;
}

Outcome criterion8() {
  Outcome o;
  Clock clock;
  std::vector<std::string> notes;

  {  // PReach is inductive and contains everything reachable.
    std::mt19937_64 rng(101);
    std::size_t n = 0;
    for (int round = 0; round < 20; ++round) {
      auto sys = random_system(rng, 3, 3);
      Formula phi = eq(LinearTerm::var(sys.states()[rng() % 3]), 0);
      Formula reach = preach(sys, phi).formula;
      for (const auto& t : sys.transitions()) {
        std::map<std::string, LinearTerm> after;
        for (const auto& [q, d] : delta(t)) after[q] = LinearTerm::var(q) + LinearTerm(d);
        Formula escape = reach && enabled_formula(t) && nnf(!reach.substitute(after));
        if (!is_sat(rename_bound_apart(escape)).unsat()) o.fail("PReach not inductive");
      }
      std::set<Configuration> reached;
      for_each_configuration(sys.states(), 3, [&](const Configuration& c) {
        if (!eval(phi, valuation_of(sys, c))) return;
        auto g = reach_graph(sys, c);
        for (std::size_t i = 0; i < g.size(); ++i) reached.insert(g.configuration(i));
      });
      for (const auto& x : reached)
        if (!eval_with_solver(reach, valuation_of(sys, x))) o.fail("PReach misses " + x.to_string());
      n += reached.size();
    }
    notes.push_back("PReach " + std::to_string(n));
  }

  {  // Antichains are minimal and closures are preserved.
    std::mt19937_64 rng(103);
    std::size_t n = 0;
    for (int round = 0; round < 200; ++round) {
      auto sys = random_system(rng, 3, 3);
      std::vector<Configuration> ups;
      for (int k = 0; k < 4; ++k) ups.push_back(random_configuration(rng, sys.states(), 2));
      UpwardBasis up = make_upward(ups);
      for (std::size_t i = 0; i < up.elements.size(); ++i)
        for (std::size_t j = 0; j < up.elements.size(); ++j)
          if (i != j && up.elements[i].covers(up.elements[j])) o.fail("upward basis not minimal");
      for_each_configuration(sys.states(), 4, [&](const Configuration& c) {
        bool above = std::any_of(ups.begin(), ups.end(), [&](const auto& u) { return c.covers(u); });
        if (above != up.contains(c)) o.fail("upward closure changed");
      });
      for (const auto& U : subsets(sys.all_transitions())) {
        if (U.empty()) continue;
        const auto d = dead_exact(sys, U).elements;
        for (std::size_t i = 0; i < d.size(); ++i)
          for (std::size_t j = 0; j < d.size(); ++j)
            if (i != j && leq(d[i], d[j])) o.fail("dead set basis not an antichain");
        ++n;
      }
    }
    notes.push_back("antichains " + std::to_string(n));
  }

  {  // diseqdead agrees exactly with one-step enumeration up to size 4.
    std::mt19937_64 rng(107);
    std::size_t n = 0;
    for (int round = 0; round < 40; ++round) {
      auto sys = random_system(rng, 3, 3);
      for (const auto& scope : subsets(sys.all_transitions()))
        for (const auto& U : subsets(scope)) {
          if (U.empty()) continue;
          auto disabled = [&](const Configuration& c) {
            return std::none_of(U.begin(), U.end(), [&](const auto& u) { return enabled(c, sys.transition(u)); });
          };
          bool brute = true;
          for_each_configuration(sys.states(), 4, [&](const Configuration& c) {
            if (!disabled(c)) return;
            for (const auto& t : scope)
              if (enabled(c, sys.transition(t)) && !disabled(step(c, sys.transition(t)))) brute = false;
          });
          if (brute != diseqdead(sys, U, scope)) o.fail("diseqdead disagrees");
          ++n;
        }
    }
    notes.push_back("diseqdead " + std::to_string(n));
  }

  {  // Stage graphs: DAG, dead growth, checker acceptance, oracle agreement.
    std::mt19937_64 rng(109);
    std::size_t graphs = 0, failures = 0;
    for (int round = 0; round < 30; ++round) {
      auto sys = random_system(rng, 3, 3);
      const auto& q = sys.states();
      StableTerminationProperty prop{"random", parse_formula(q[0] + " >= 1 && " + q[1] + " + " + q[2] + " == 0"),
                                     {eq(LinearTerm::var(q[rng() % 3]), 0), eq(LinearTerm::var(q[rng() % 3]), 0)}};
      EngineOptions opt;
      opt.max_stages = 32;
      auto r = construct_stage_graph(sys, prop, opt);
      if (!std::holds_alternative<StageGraph>(r)) {
        ++failures;
        continue;
      }
      ++graphs;
      const auto& g = std::get<StageGraph>(r);
      if (!structurally_sound(g)) o.fail("graph invariants violated");
      if (check_stage_graph(sys, g).verdict != CheckReport::Verdict::Accept) o.fail("emitted graph not accepted");
      for_each_configuration(q, 5, [&](const Configuration& c) {
        if (eval(prop.pre, valuation_of(sys, c)) && !check_stable_termination_at(sys, prop, c))
          o.fail("verified property refuted at " + c.to_string());
      });
    }
    if (graphs < 5) o.fail("too few graphs constructed (" + std::to_string(graphs) + ")");
    notes.push_back("graphs " + std::to_string(graphs) + " built, " + std::to_string(failures) + " not");
  }

  double t = clock.seconds();
  if (t > property_budget) o.fail("over time budget (" + fixed(t) + "s)");
  if (o.pass) {
    for (const auto& n : notes) o.detail += (o.detail.empty() ? "" : ", ") + n;
    o.detail += " in " + fixed(t) + "s";
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<Outcome (*)()> criteria{criterion1, criterion2, criterion3, criterion4,
                                      criterion5, criterion6, criterion7, criterion8};
  std::vector<int> which;
  std::string arg = argc > 1 ? argv[1] : "all";
  if (arg == "all") {
    for (int i = 1; i <= 8; ++i) which.push_back(i);
  } else {
    int n = std::atoi(arg.c_str());
    if (n < 1 || n > 8) {
      std::cerr << "usage: acceptance [1-8|all]\n";
      return 2;
    }
    which.push_back(n);
  }
  bool all = true;
  for (int n : which) {
    Outcome o;
    try {
      o = criteria[n - 1]();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
