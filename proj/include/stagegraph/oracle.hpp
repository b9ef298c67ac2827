#pragma once

// Explicit-state analysis of finite instances: the reachability graph from
// one configuration, its bottom SCCs, and fair-run verdicts decided on the
// graph alone.

#include "stagegraph/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sg {

struct ReachGraph {
  std::vector<std::string> states;
  std::vector<std::vector<std::int64_t>> nodes;  // counts in system state order
  /// edges[i] = (transition index, target node). Every node also carries an
  /// implicit self-loop that is not stored.
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> edges;
  std::size_t root = 0;

  std::size_t size() const { return nodes.size(); }
  Configuration configuration(std::size_t node) const;
  std::optional<std::size_t> find(const Configuration& c) const;
};

/// Throws OracleTooLarge past `budget` nodes.
ReachGraph reach_graph(const ReplicatedSystem& system, const Configuration& c, std::size_t budget = 1000000);

/// Bottom strongly connected components as sorted node lists.
std::vector<std::vector<std::size_t>> bsccs(const ReachGraph& g);

/// Every BSCC lies entirely inside one postcondition. If c violates the
/// precondition the verdict is still computed and `warning` is set.
bool check_stable_termination_at(const ReplicatedSystem& system, const StableTerminationProperty& property,
                                 const Configuration& c, std::string* warning = nullptr,
                                 std::size_t budget = 1000000);

/// The target is reachable from every configuration reachable from c, which
/// in a finite chain is probability-1 (equivalently fair) reachability.
bool every_fair_run_reaches(const ReplicatedSystem& system, const Configuration& c, const Formula& target,
                            std::size_t budget = 1000000);

/// No configuration reachable from c enables a transition of U.
bool dead_at(const ReplicatedSystem& system, const Configuration& c, const TransitionSet& U,
             std::size_t budget = 1000000);

struct TraceStep {
  std::size_t index = 0;
  std::string transition;  // empty for the initial entry and for self-loops
  Configuration configuration;
};

/// Uniform choice among enabled transitions; a self-loop when none is
/// enabled. Deterministic for a given seed.
std::vector<TraceStep> simulate(const ReplicatedSystem& system, const Configuration& c, std::size_t steps,
                                std::uint64_t seed);

}  // namespace sg
