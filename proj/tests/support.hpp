#pragma once

// Fixtures shared by the test binaries: the small systems used throughout,
// configuration enumeration and seeded generators.

#include "stagegraph/model.hpp"

#include <functional>
#include <random>
#include <string>
#include <vector>

namespace sgtest {

using namespace sg;

inline Transition tr(const std::string& name, Multiset pre, Multiset post, bool identity = false) {
  return Transition{name, std::move(pre), std::move(post), identity};
}

inline ReplicatedSystem majority() {
  return ReplicatedSystem("majority", {"AY", "AN", "PY", "PN"},
                          {tr("t1", {{"AY", 1}, {"AN", 1}}, {{"PY", 1}, {"PN", 1}}),
                           tr("t2", {{"AY", 1}, {"PN", 1}}, {{"AY", 1}, {"PY", 1}}),
                           tr("t3", {{"AN", 1}, {"PY", 1}}, {{"AN", 1}, {"PN", 1}}),
                           tr("t4", {{"PY", 1}, {"PN", 1}}, {{"PN", 2}})});
}

inline StableTerminationProperty majority_yes() {
  return {"PiY", parse_formula("AY > AN && PY + PN == 0"), {parse_formula("AN + PN == 0")}};
}

inline StableTerminationProperty majority_no() {
  return {"PiN", parse_formula("AY <= AN && PY + PN == 0"), {parse_formula("AY + PY == 0")}};
}

inline ReplicatedSystem p1() {
  return ReplicatedSystem("P1", {"A", "B", "C"},
                          {tr("t1", {{"A", 1}, {"B", 1}}, {{"C", 2}}), tr("t2", {{"A", 1}}, {{"B", 1}}),
                           tr("t3", {{"B", 1}}, {{"A", 1}})});
}

inline ReplicatedSystem p2() {
  return ReplicatedSystem("P2", {"A", "B"},
                          {tr("t4", {{"A", 1}, {"B", 1}}, {{"A", 2}}), tr("t5", {{"A", 1}}, {{"B", 1}})});
}

/// Two states, t_i: q_i -> q_i.
inline ReplicatedSystem probes() {
  return ReplicatedSystem("probes", {"q1", "q2"},
                          {tr("t1", {{"q1", 1}}, {{"q1", 1}}, true), tr("t2", {{"q2", 1}}, {{"q2", 1}}, true)});
}

/// a_i b_i -> a_{i+1} b_{i+1} cyclically, plus c -> c.
inline ReplicatedSystem ring(int n) {
  std::vector<std::string> states;
  for (int i = 1; i <= n; ++i) states.push_back("a" + std::to_string(i));
  for (int i = 1; i <= n; ++i) states.push_back("b" + std::to_string(i));
  states.push_back("c");
  std::vector<Transition> ts;
  for (int i = 1; i <= n; ++i) {
    int j = i == n ? 1 : i + 1;
    std::string ai = "a" + std::to_string(i), bi = "b" + std::to_string(i);
    std::string aj = "a" + std::to_string(j), bj = "b" + std::to_string(j);
    ts.push_back(tr("t" + std::to_string(i), {{ai, 1}, {bi, 1}}, {{aj, 1}, {bj, 1}}));
  }
  ts.push_back(tr("tc", {{"c", 1}}, {{"c", 1}}, true));
  return ReplicatedSystem("ring", states, ts);
}

/// Calls f on every configuration over `states` with total size <= max_size.
inline void for_each_configuration(const std::vector<std::string>& states, int max_size,
                                   const std::function<void(const Configuration&)>& f) {
  Configuration c;
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
    if (i == states.size()) {
      f(c);
      return;
    }
    for (int n = 0; n <= left; ++n) {
      c.set(states[i], n);
      rec(i + 1, left - n);
    }
    c.set(states[i], 0);
  };
  rec(0, max_size);
}

/// Calls f on every configuration of exactly the given size.
inline void for_each_configuration_of_size(const std::vector<std::string>& states, int size,
                                           const std::function<void(const Configuration&)>& f) {
  for_each_configuration(states, size, [&](const Configuration& c) {
    if (c.size() == size) f(c);
  });
}

inline std::vector<TransitionSet> subsets(const TransitionSet& all) {
  std::vector<std::string> v(all.begin(), all.end());
  std::vector<TransitionSet> out;
  for (unsigned mask = 0; mask < (1u << v.size()); ++mask) {
    TransitionSet s;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (mask & (1u << i)) s.insert(v[i]);
    out.push_back(s);
  }
  return out;
}

/// Random conservative system over `n_states` states with transitions of
/// arity 1 or 2.
inline ReplicatedSystem random_system(std::mt19937_64& rng, int n_states, int n_transitions) {
  std::vector<std::string> states;
  for (int i = 0; i < n_states; ++i) states.push_back("s" + std::to_string(i));
  std::uniform_int_distribution<int> pick(0, n_states - 1);
  std::uniform_int_distribution<int> arity(1, 2);
  std::vector<Transition> ts;
  int attempts = 0;
  while (static_cast<int>(ts.size()) < n_transitions && attempts++ < 1000) {
    int k = arity(rng);
    Multiset pre, post;
    for (int i = 0; i < k; ++i) pre.add(states[pick(rng)], 1);
    for (int i = 0; i < k; ++i) post.add(states[pick(rng)], 1);
    if (pre == post) continue;
    ts.push_back(tr("u" + std::to_string(ts.size()), pre, post));
  }
  return ReplicatedSystem("random", states, ts);
}

inline Configuration random_configuration(std::mt19937_64& rng, const std::vector<std::string>& states, int max_count) {
  std::uniform_int_distribution<int> d(0, max_count);
  Configuration c;
  for (const auto& q : states) c.set(q, d(rng));
  return c;
}

}  // namespace sgtest
