#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "stagegraph/smt.hpp"
#include "support.hpp"

using namespace sgtest;

namespace {

Formula random_formula(std::mt19937_64& rng, const std::vector<std::string>& vars, int depth) {
  std::uniform_int_distribution<int> coef(-3, 3), kind(0, 9), mod(2, 3), op(0, 5);
  if (depth == 0 || kind(rng) < 4) {
    LinearTerm t;
    for (const auto& v : vars) t += LinearTerm::var(v, coef(rng));
    if (kind(rng) < 2) {
      Int m = mod(rng);
      std::uniform_int_distribution<int> res(0, static_cast<int>(m) - 1);
      return Formula::congruence(t, m, res(rng));
    }
    return Formula::compare(t, static_cast<CmpOp>(op(rng)), LinearTerm(coef(rng)));
  }
  int k = kind(rng);
  if (k < 6) return random_formula(rng, vars, depth - 1) && random_formula(rng, vars, depth - 1);
  if (k < 8) return random_formula(rng, vars, depth - 1) || random_formula(rng, vars, depth - 1);
  return !random_formula(rng, vars, depth - 1);
}

void for_each_valuation(const std::vector<std::string>& vars, int bound, const std::function<void(const Valuation&)>& f) {
  Valuation v;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == vars.size()) {
      f(v);
      return;
    }
    for (int n = 0; n <= bound; ++n) {
      v[vars[i]] = n;
      rec(i + 1);
    }
  };
  rec(0);
}

Valuation val(const ReplicatedSystem& s, const Configuration& c) { return valuation_of(s, c); }

}  // namespace

TEST_CASE("delta") {
  auto m = majority();
  Delta d1 = delta(m.transition("t1"));
  CHECK(d1 == Delta{{"AY", -1}, {"AN", -1}, {"PY", 1}, {"PN", 1}});
  Delta d5 = delta(p2().transition("t5"));
  CHECK(d5 == Delta{{"A", -1}, {"B", 1}});
  CHECK(delta(probes().transition("t1")).empty());
}

TEST_CASE("enabled and step") {
  auto m = majority();
  CHECK(enabled(m, {{"AY", 1}, {"AN", 1}}, m.transition("t1")));
  CHECK_FALSE(enabled(m, {{"PY", 1}}, m.transition("t4")));
  CHECK(enabled(m, {{"AY", 2}, {"AN", 0}, {"PN", 3}}, m.transition("t2")));
  CHECK_THROWS_AS(enabled(m, {{"ZZ", 1}}, m.transition("t1")), InputError);

  CHECK(step({{"AY", 1}, {"AN", 1}}, m.transition("t1")) == Configuration{{"PY", 1}, {"PN", 1}});
  CHECK(step({{"AY", 2}, {"AN", 1}, {"PN", 1}}, m.transition("t2")) == Configuration{{"AY", 2}, {"AN", 1}, {"PY", 1}});
  CHECK(step({{"PY", 1}, {"PN", 1}}, m.transition("t4")) == Configuration{{"PN", 2}});
  CHECK_THROWS_AS(step({{"PY", 1}}, m.transition("t4")), PreconditionError);
}

TEST_CASE("multisets are canonical") {
  Configuration a{{"AY", 0}, {"AN", 2}};
  Configuration b{{"AN", 2}};
  CHECK(a == b);
  CHECK(a.entries().size() == 1);
  CHECK(a.size() == 2);
  Int big("123456789012345678901234567890");
  Configuration c{{"AY", big}};
  CHECK(c["AY"] == big);
  CHECK(c.to_string() == "{AY:123456789012345678901234567890}");
}

TEST_CASE("system validation") {
  CHECK_THROWS_AS(ReplicatedSystem("s", {"A", "B"}, {tr("t", {{"A", 1}}, {{"A", 1}, {"B", 1}})}), InputError);
  CHECK_THROWS_AS(ReplicatedSystem("s", {"A"}, {tr("t", {{"A", 1}}, {{"A", 1}})}), InputError);
  CHECK_NOTHROW(ReplicatedSystem("s", {"A"}, {tr("t", {{"A", 1}}, {{"A", 1}}, true)}));
  CHECK_THROWS_AS(ReplicatedSystem("s", {"A"}, {tr("t", {{"A", 1}}, {{"B", 1}})}), InputError);
  CHECK_THROWS_AS(ReplicatedSystem("s", {"A", "A"}, {}), InputError);
  CHECK_THROWS_AS(ReplicatedSystem("s", {"1A"}, {}), InputError);
  CHECK_THROWS_AS(ReplicatedSystem("s", {}, {}), InputError);
  CHECK_THROWS_AS(ReplicatedSystem("s", {"A", "B"}, {tr("t", {{"A", 1}}, {{"B", 1}}), tr("t", {{"B", 1}}, {{"A", 1}})}),
                  InputError);
  CHECK(majority().arity() == 2);
  CHECK(majority().fingerprint() == majority().fingerprint());
  CHECK(majority().fingerprint() != p1().fingerprint());
}

TEST_CASE("property validation") {
  auto m = majority();
  CHECK_NOTHROW(validate_property(m, majority_yes()));
  StableTerminationProperty bad{"bad", parse_formula("X > 0"), {parse_formula("AY == 0")}};
  CHECK_THROWS_AS(validate_property(m, bad), InputError);
  StableTerminationProperty empty{"e", parse_formula("true"), {}};
  CHECK_THROWS_AS(validate_property(m, empty), InputError);
  StableTerminationProperty quantified{"q", parse_formula("exists x . (AY == x)"), {parse_formula("true")}};
  CHECK_THROWS_AS(validate_property(m, quantified), InputError);
}

TEST_CASE("size preservation and monotone enabledness on random systems") {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 50; ++round) {
    auto sys = random_system(rng, 3, 4);
    for (int k = 0; k < 20; ++k) {
      Configuration c = random_configuration(rng, sys.states(), 3);
      Configuration bigger = c;
      bigger.add(sys.states()[k % 3], 1);
      for (const auto& t : sys.transitions()) {
        Int sum = 0;
        for (const auto& [q, n] : delta(t)) sum += n;
        CHECK(sum == 0);
        if (enabled(c, t)) {
          CHECK(step(c, t).size() == c.size());
          CHECK(enabled(bigger, t));
        }
      }
    }
  }
}

TEST_CASE("eval") {
  auto m = majority();
  Formula pre = majority_yes().pre;
  CHECK(eval(pre, val(m, {{"AY", 2}, {"AN", 1}})));
  CHECK_FALSE(eval(pre, val(m, {{"AY", 1}, {"AN", 1}})));
  CHECK(eval(parse_formula("AY + AN % 2 == 0"), val(m, {{"AY", 1}, {"AN", 1}})));
  CHECK_THROWS_AS(eval(parse_formula("ZZ > 0"), val(m, {})), InputError);
  CHECK(eval_with_solver(parse_formula("exists k . (AY == 2*k)"), val(m, {{"AY", 4}})));
  CHECK_FALSE(eval_with_solver(parse_formula("exists k . (AY == 2*k)"), val(m, {{"AY", 3}})));
}

TEST_CASE("parser and printer") {
  Formula f = parse_formula("AY > AN && PY + PN == 0");
  CHECK(f.kind() == Formula::Kind::And);
  CHECK(f.to_string() == "AY > AN && PN + PY == 0");
  CHECK(parse_formula("-2*x + 3 <= y - 1").to_string() == "-2*x + 3 <= y - 1");
  CHECK(parse_formula("!(x == 1) || (y >= 2 && z < 1)").to_string() == "!(x == 1) || y >= 2 && z < 1");
  CHECK(parse_formula("x % 3 == 1").to_string() == "x % 3 == 1");
  CHECK(parse_formula("true && x = 1").to_string() == "x == 1");
  CHECK(parse_formula("exists a, b . (x == a + b && a > b)").bound().size() == 2);
  CHECK_THROWS_AS(parse_formula("x >"), InputError);
  CHECK_THROWS_AS(parse_formula("x % 1 == 0"), InputError);
  CHECK_THROWS_AS(parse_formula("x % 3 == 3"), InputError);
  CHECK_THROWS_AS(parse_formula("(x > 1"), InputError);
  CHECK_THROWS_AS(parse_formula("x > 1 y"), InputError);
}

TEST_CASE("print-parse round trip on random formulas") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 300; ++i) {
    Formula f = random_formula(rng, {"x", "y", "z"}, 3);
    if (i % 5 == 0) f = Formula::exists({"z"}, f);
    Formula g = parse_formula(f.to_string());
    CHECK_MESSAGE(f.same_as(g), f.to_string());
  }
}

TEST_CASE("substitution avoids capture") {
  Formula f = parse_formula("exists y . (x == 2*y)");
  Formula g = f.substitute({{"x", LinearTerm::var("y") + LinearTerm(1)}});
  CHECK(g.free_variables() == std::set<std::string>{"y"});
  CHECK(eval_with_solver(g, {{"y", 1}}));
  CHECK_FALSE(eval_with_solver(g, {{"y", 2}}));
}

TEST_CASE("negation normal form preserves semantics") {
  std::mt19937_64 rng(5);
  std::vector<std::string> vars{"x", "y"};
  for (int i = 0; i < 200; ++i) {
    Formula f = random_formula(rng, vars, 4);
    Formula g = nnf(f);
    for_each_valuation(vars, 5, [&](const Valuation& v) { CHECK(eval(f, v) == eval(g, v)); });
  }
}

TEST_CASE("is_sat") {
  CHECK(is_sat(parse_formula("AY > AN && AY + AN == 0")).unsat());
  CHECK(is_sat(parse_formula("AN + PN == 0 && AN >= 1")).unsat());
  auto v = is_sat(parse_formula("AY > AN"));
  REQUIRE(v.sat());
  CHECK(v.model.count("AY"));
  CHECK(v.model.count("AN"));
  CHECK(eval(parse_formula("AY > AN"), v.model));
  CHECK(is_sat(parse_formula("x % 2 == 1 && x % 4 == 2")).unsat());
  CHECK(is_sat(parse_formula("!(x % 2 == 0) && x < 2")).sat());
  CHECK(is_sat(parse_formula("x - y == 5 && x < 5")).unsat());
}

TEST_CASE("entails") {
  Formula phi = majority_yes().pre;
  CHECK(entails(phi, phi));
  CHECK(entails(parse_formula("AN + PN == 0"), majority_yes().posts[0]));
  CHECK_FALSE(entails(parse_formula("AY > AN"), parse_formula("AN + PN == 0")));
  // Existential consequent needs the quantified logic.
  CHECK(entails(parse_formula("x == 4"), parse_formula("exists k . (x == 2*k)")));
}

TEST_CASE("emit_smtlib") {
  std::string text = emit_smtlib(parse_formula("AY > AN"), Logic::QuantifierFree);
  CHECK(text.find("(declare-const |AY| Int)") != std::string::npos);
  CHECK(text.find("(assert (>= |AN| 0))") != std::string::npos);
  CHECK(text.find("(set-logic QF_LIA)") != std::string::npos);
  CHECK(text.find("(>= (+ (* (- 1) |AN|) |AY|) 1)") != std::string::npos);

  std::string cong = emit_smtlib(parse_formula("x % 3 == 1"), Logic::QuantifierFree);
  CHECK(cong.find("(* 3 |q#") != std::string::npos);

  Formula nested = parse_formula("exists a . (exists b . (x == a + b && a == b))");
  CHECK_THROWS_AS(emit_smtlib(nested, Logic::QuantifierFree), InputError);
  std::string q = emit_smtlib(nested, Logic::Quantified);
  CHECK(q.find("(set-logic LIA)") != std::string::npos);
  CHECK(q.find("(exists ((|a| Int))") != std::string::npos);
}

TEST_CASE("solver failures are unknown, never unsat") {
  Solver broken(SolverOptions{"/nonexistent-solver-binary", 5});
  auto v = broken.check(parse_formula("x > 0"));
  CHECK(v.unknown());
  CHECK_THROWS_AS(broken.entails(parse_formula("x > 0"), parse_formula("x > 1")), InconclusiveError);
}

TEST_CASE("entailment agrees with enumeration on small formulas") {
  std::mt19937_64 rng(17);
  std::vector<std::string> vars{"x", "y", "z"};
  int checked = 0;
  for (int i = 0; i < 60; ++i) {
    Formula phi = random_formula(rng, vars, 2);
    Formula psi = random_formula(rng, vars, 2);
    bool brute = true;
    for_each_valuation(vars, 8, [&](const Valuation& v) {
      if (brute && eval(phi, v) && !eval(psi, v)) brute = false;
    });
    auto verdict = is_sat(phi && !psi);
    REQUIRE_FALSE(verdict.unknown());
    if (verdict.sat()) CHECK(eval(phi && !psi, verdict.model));
    CHECK_MESSAGE(verdict.unsat() == brute, phi.to_string() << "  |=  " << psi.to_string());
    ++checked;
  }
  CHECK(checked == 60);
}
