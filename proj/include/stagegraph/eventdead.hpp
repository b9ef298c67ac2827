#pragma once

// Transition sets that eventually become dead from every configuration of
// a stage, certified by linear ranking or layer functions.

#include "stagegraph/model.hpp"
#include "stagegraph/smt.hpp"

#include <map>
#include <optional>
#include <string>
#include <variant>

namespace sg {

using Coefficients = std::map<std::string, Int>;

/// Change of the linear function sum_q a(q) * C(q) under the delta d.
Int dot(const Coefficients& a, const Delta& d);

struct RankingCertificate {
  Coefficients coefficients;
  TransitionSet killed;
  /// The bound k of the bounded certificate is not computed.
  std::optional<Int> bound_k;
  /// Some per-transition query came back Unknown.
  bool incomplete = false;
};

struct LayerCertificate {
  Coefficients coefficients;
  TransitionSet killed;
};

struct EventDeadResult {
  TransitionSet killed;
  std::variant<std::monostate, RankingCertificate, LayerCertificate> certificate;
};

/// a >= 0 with a·Δ(t) <= -1 and a·Δ(u) <= 0 for all u in alive. Among the
/// solutions, the maximal coefficient is minimized first and then the
/// support on states changed by alive transitions is maximized. Throws
/// InconclusiveError on solver Unknown.
std::optional<Coefficients> ranking_for(const ReplicatedSystem& system, const std::string& t,
                                        const TransitionSet& alive, Solver& solver = thread_solver());

/// All transitions of alive that have a ranking function, with the sum of
/// their functions. nullopt when none has.
std::optional<RankingCertificate> max_ranking_set(const ReplicatedSystem& system, const TransitionSet& alive,
                                                  Solver& solver = thread_solver());

/// For every t in scope and u in U, some u' in U satisfies
/// pre(t) + (pre(u) ∸ post(t)) >= pre(u'): a step of scope from a
/// configuration disabling U never enables U.
bool diseqdead(const ReplicatedSystem& system, const TransitionSet& U, const TransitionSet& scope);

/// A maximum-cardinality U ⊆ alive with a layer function: a·Δ(u) <= -1 for
/// u in U and diseqdead(U, scope). Coefficients follow the rule of
/// ranking_for.
std::optional<LayerCertificate> max_layer_set(const ReplicatedSystem& system, const TransitionSet& alive,
                                              const TransitionSet& scope, Solver& solver = thread_solver());

/// Ranking first; a layer only when no transition has a ranking function.
/// The layer condition is taken over `alive` unless global_diseqdead.
EventDeadResult event_dead(const ReplicatedSystem& system, const TransitionSet& alive, bool global_diseqdead = false,
                           Solver& solver = thread_solver());

/// Static rechecks in exact arithmetic.
bool check_ranking(const ReplicatedSystem& system, const Coefficients& a, const TransitionSet& killed,
                   const TransitionSet& alive);
bool check_layer(const ReplicatedSystem& system, const Coefficients& a, const TransitionSet& killed,
                 const TransitionSet& scope);

}  // namespace sg
