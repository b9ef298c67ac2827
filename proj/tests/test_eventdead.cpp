#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "stagegraph/deadsets.hpp"
#include "stagegraph/eventdead.hpp"
#include "stagegraph/oracle.hpp"
#include "stagegraph/reach.hpp"
#include "support.hpp"

using namespace sgtest;

namespace {

ReplicatedSystem restricted(const ReplicatedSystem& sys, const TransitionSet& keep) {
  std::vector<Transition> ts;
  for (const auto& t : sys.transitions())
    if (keep.count(t.name)) ts.push_back(t);
  return ReplicatedSystem(sys.name(), sys.states(), ts);
}

TransitionSet alive_at(const ReplicatedSystem& sys, const Formula& stage) {
  TransitionSet alive;
  for (const auto& t : sys.transitions())
    if (is_sat(stage && enabled_formula(t)).sat()) alive.insert(t.name);
  return alive;
}

}  // namespace

TEST_CASE("ranking_for examples") {
  auto a = ranking_for(p1(), "t1", p1().all_transitions());
  REQUIRE(a);
  CHECK(*a == Coefficients{{"A", 1}, {"B", 1}});
  CHECK_FALSE(ranking_for(p2(), "t5", p2().all_transitions()));
  auto m = majority();
  auto r = ranking_for(m, "t1", m.all_transitions());
  REQUIRE(r);
  CHECK(*r == Coefficients{{"AY", 1}, {"AN", 1}});
  CHECK_THROWS_AS(ranking_for(m, "t1", {"t2"}), PreconditionError);
}

TEST_CASE("max_ranking_set examples") {
  auto m = majority();
  auto r = max_ranking_set(m, m.all_transitions());
  REQUIRE(r);
  CHECK(r->killed == TransitionSet{"t1"});
  CHECK(r->coefficients == Coefficients{{"AY", 1}, {"AN", 1}});
  CHECK_FALSE(r->bound_k);
  CHECK_FALSE(max_ranking_set(p2(), p2().all_transitions()));
  auto q = max_ranking_set(p1(), p1().all_transitions());
  REQUIRE(q);
  CHECK(q->killed == TransitionSet{"t1"});
  CHECK(q->coefficients == Coefficients{{"A", 1}, {"B", 1}});
  CHECK_FALSE(max_ranking_set(m, {}));
}

TEST_CASE("diseqdead examples") {
  CHECK(diseqdead(p2(), {"t5"}, {"t4", "t5"}));
  CHECK_FALSE(diseqdead(p1(), {"t1"}, {"t1", "t2", "t3"}));
  CHECK(diseqdead(majority(), {"t2"}, {"t2", "t4"}));
  // Over all majority transitions t3 refills PN.
  CHECK_FALSE(diseqdead(majority(), {"t2"}, majority().all_transitions()));
  CHECK_THROWS_AS(diseqdead(p2(), {"t5"}, {"t4"}), PreconditionError);
}

TEST_CASE("max_layer_set examples") {
  auto l = max_layer_set(p2(), p2().all_transitions(), p2().all_transitions());
  REQUIRE(l);
  CHECK(l->killed == TransitionSet{"t5"});
  CHECK(l->coefficients == Coefficients{{"A", 1}});

  auto m = majority();
  auto ml = max_layer_set(m, {"t2", "t4"}, {"t2", "t4"});
  REQUIRE(ml);
  CHECK(ml->killed == TransitionSet{"t2"});
  CHECK(ml->coefficients == Coefficients{{"PN", 1}});
  // The literal global condition rejects it.
  CHECK_FALSE(max_layer_set(m, {"t2", "t4"}, m.all_transitions()));

  CHECK_FALSE(max_layer_set(p1(), p1().all_transitions(), p1().all_transitions()));
}

TEST_CASE("event_dead examples") {
  auto m = majority();
  auto root = event_dead(m, alive_at(m, preach(m, majority_yes().pre).formula));
  CHECK(root.killed == TransitionSet{"t1"});
  REQUIRE(std::holds_alternative<RankingCertificate>(root.certificate));
  CHECK(std::get<RankingCertificate>(root.certificate).coefficients == Coefficients{{"AY", 1}, {"AN", 1}});

  TransitionSet alive = alive_at(m, parse_formula("AY > 0 && AN == 0"));
  CHECK(alive == TransitionSet{"t2", "t4"});
  auto second = event_dead(m, alive);
  CHECK(second.killed == TransitionSet{"t2"});
  REQUIRE(std::holds_alternative<LayerCertificate>(second.certificate));
  CHECK(std::get<LayerCertificate>(second.certificate).coefficients == Coefficients{{"PN", 1}});

  auto none = event_dead(m, {});
  CHECK(none.killed.empty());
  CHECK(std::holds_alternative<std::monostate>(none.certificate));
}

TEST_CASE("certificates recheck and rankings add up on random systems") {
  std::mt19937_64 rng(53);
  int pairs = 0;
  for (int round = 0; round < 25; ++round) {
    auto sys = random_system(rng, 3, 4);
    TransitionSet alive = sys.all_transitions();
    std::vector<std::pair<std::string, Coefficients>> found;
    for (const auto& t : alive)
      if (auto a = ranking_for(sys, t, alive)) {
        CHECK(check_ranking(sys, *a, {t}, alive));
        found.emplace_back(t, *a);
      }
    for (std::size_t i = 0; i < found.size(); ++i)
      for (std::size_t j = i + 1; j < found.size(); ++j) {
        Coefficients sum = found[i].second;
        for (const auto& [q, n] : found[j].second) sum[q] += n;
        CHECK(check_ranking(sys, sum, {found[i].first, found[j].first}, alive));
        ++pairs;
      }
    if (auto r = max_ranking_set(sys, alive)) {
      CHECK(check_ranking(sys, r->coefficients, r->killed, alive));
      CHECK(r->killed.size() == found.size());
    }
    if (auto l = max_layer_set(sys, alive, alive)) CHECK(check_layer(sys, l->coefficients, l->killed, alive));
  }
  CHECK(pairs > 0);
}

TEST_CASE("diseqdead agrees with brute force") {
  std::mt19937_64 rng(59);
  for (int round = 0; round < 25; ++round) {
    auto sys = random_system(rng, 3, 3);
    for (const auto& scope : subsets(sys.all_transitions())) {
      auto sub = restricted(sys, scope);
      for (const auto& U : subsets(scope)) {
        if (U.empty() || !diseqdead(sys, U, scope)) continue;
        for_each_configuration(sys.states(), 6, [&](const Configuration& c) {
          bool disabled = true;
          for (const auto& u : U)
            if (enabled(c, sys.transition(u))) disabled = false;
          if (disabled) CHECK(dead_at(sub, c, U));
        });
      }
    }
  }
}

TEST_CASE("eventually dead sets are confirmed by the oracle") {
  std::mt19937_64 rng(61);
  int confirmed = 0;
  for (int round = 0; round < 10; ++round) {
    auto sys = random_system(rng, 3, 3);
    Formula phi = eq(LinearTerm::var(sys.states()[2]), 0);
    Formula stage = preach(sys, phi).formula;
    TransitionSet alive = alive_at(sys, stage);
    auto r = event_dead(sys, alive);
    if (r.killed.empty()) continue;
    Formula target = down_formula(dead_exact(sys, r.killed));
    for_each_configuration(sys.states(), 5, [&](const Configuration& c) {
      if (!eval_with_solver(stage, valuation_of(sys, c))) return;
      CHECK(every_fair_run_reaches(sys, c, target));
      ++confirmed;
    });
  }
  CHECK(confirmed > 0);
}
