#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "stagegraph/checker.hpp"
#include "mutations.hpp"
#include "support.hpp"

using namespace sgtest;

namespace {

using Verdict = CheckReport::Verdict;

StageGraph build(const ReplicatedSystem& sys, const StableTerminationProperty& p) {
  auto r = construct_stage_graph(sys, p);
  REQUIRE(std::holds_alternative<StageGraph>(r));
  return std::get<StageGraph>(r);
}

std::string verdict(const CheckReport& r) { return to_string(r.verdict); }

bool violated(const CheckReport& r, const std::string& name) {
  for (const auto& o : r.violations())
    if (o.name == name) return true;
  return false;
}

}  // namespace

TEST_CASE("majority graphs are accepted") {
  auto sys = majority();
  for (const auto& prop : {majority_yes(), majority_no()}) {
    auto g = build(sys, prop);
    auto r = check_stage_graph(sys, g);
    for (const auto& o : r.obligations)
      INFO(o.name << " " << (o.stage ? std::to_string(*o.stage) : "-") << " " << to_string(o.outcome) << " "
                  << o.detail);
    CHECK(verdict(r) == "accepted");
    CHECK_FALSE(r.obligations.empty());
  }
}

TEST_CASE("mutation campaign") {
  auto sys = majority();
  std::vector<Mutant> all;
  for (const auto& [prop, tag] : {std::pair{majority_yes(), "yes"}, std::pair{majority_no(), "no"}}) {
    auto ms = mutants(build(sys, prop), tag);
    all.insert(all.end(), ms.begin(), ms.end());
  }
  CHECK(all.size() >= 20);
  for (const auto& m : all) {
    auto r = check_stage_graph(sys, m.graph);
    INFO(m.what);
    CHECK(r.verdict != Verdict::Accept);
  }
}

TEST_CASE("specific violations are named") {
  auto sys = majority();
  auto g = build(sys, majority_yes());
  SUBCASE("global diseqdead rejects the local layer") {
    g.global_diseqdead = true;
    CHECK(violated(check_stage_graph(sys, g), "layer"));
  }
  SUBCASE("missing overapproximation metadata falls back to exact") {
    g.overapprox.clear();
    CHECK(check_stage_graph(sys, g).verdict == Verdict::Accept);
  }
  SUBCASE("wrong system") {
    CHECK(violated(check_stage_graph(p1(), g), "structure"));
  }
  SUBCASE("cycle") {
    g.stages[2].terminal_post.reset();
    g.stages[2].children = {0};
    g.stages[2].certificate = g.stages[0].certificate;
    CHECK(violated(check_stage_graph(sys, g), "structure"));
  }
  SUBCASE("claimed dead transition") {
    g.stages[1].dead.insert("t2");
    g.stages[2].dead.insert("t2");
    auto r = check_stage_graph(sys, g);
    CHECK(violated(r, "dead-set"));
  }
  SUBCASE("non-inductive stage") {
    g.stages[1].formula = parse_formula("AN == 0 && PY == 0");
    CHECK(violated(check_stage_graph(sys, g), "inductive"));
  }
}

TEST_CASE("split graphs are accepted and coverage is checked") {
  auto sys = probes();
  StableTerminationProperty p{"either", parse_formula("q1 == 0 || q2 == 0"),
                              {parse_formula("q1 == 0"), parse_formula("q2 == 0")}};
  auto g = build(sys, p);
  CHECK(check_stage_graph(sys, g).verdict == Verdict::Accept);
  SUBCASE("dropped part") {
    g.stages[0].children.pop_back();
    g.stages[0].certificate.witnesses.pop_back();
    CHECK(violated(check_stage_graph(sys, g), "split-coverage"));
  }
  SUBCASE("forged death certificate") {
    auto& w = g.stages[0].certificate.witnesses[0];
    w.witnesses = {OmegaConfiguration{}};
    CHECK(violated(check_stage_graph(sys, g), "split-certificates"));
  }
}

TEST_CASE("solver failure is inconclusive, not accepted") {
  auto sys = majority();
  auto g = build(sys, majority_yes());
  Solver broken(SolverOptions{"false", 5.0});
  auto r = check_stage_graph(sys, g, broken);
  CHECK(r.verdict == Verdict::Inconclusive);
  CHECK_FALSE(r.unknowns().empty());
}
