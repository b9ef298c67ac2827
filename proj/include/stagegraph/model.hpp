#pragma once

// Replicated systems: states, multiset-rewriting transitions and
// configurations.

#include "stagegraph/common.hpp"
#include "stagegraph/formula.hpp"

#include <compare>
#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace sg {

/// Finite multiset over state names in canonical form: zero entries are
/// never stored, so equality is structural.
class Multiset {
 public:
  Multiset() = default;
  Multiset(std::initializer_list<std::pair<const std::string, Int>> entries);
  explicit Multiset(const std::map<std::string, Int>& entries);

  const Int& operator[](const std::string& state) const;
  void set(const std::string& state, const Int& count);
  void add(const std::string& state, const Int& count);

  const std::map<std::string, Int>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  Int size() const;
  std::set<std::string> support() const;

  /// Componentwise this >= other.
  bool covers(const Multiset& other) const;

  /// "{AY:2, AN:1}"
  std::string to_string() const;

  auto operator<=>(const Multiset&) const = default;

 private:
  std::map<std::string, Int> entries_;
};

using Configuration = Multiset;

/// Integer vector over states with zero entries omitted.
using Delta = std::map<std::string, Int>;

struct Transition {
  std::string name;
  Multiset pre;
  Multiset post;
  /// A transition with pre == post. Such transitions are rejected unless
  /// declared explicitly; they never change a configuration but are
  /// enabled or disabled like any other transition.
  bool identity = false;
};

using TransitionSet = std::set<std::string>;

Delta delta(const Transition& t);

class ReplicatedSystem {
 public:
  /// Validates names, conservation (|pre| = |post|), pre != post unless
  /// declared identity, and that every referenced state is declared.
  ReplicatedSystem(std::string name, std::vector<std::string> states,
                   std::vector<Transition> transitions);

  const std::string& name() const { return name_; }
  const std::vector<std::string>& states() const { return states_; }
  const std::vector<Transition>& transitions() const { return transitions_; }

  bool has_state(const std::string& state) const;
  std::size_t state_index(const std::string& state) const;
  const Transition& transition(const std::string& name) const;
  std::size_t transition_index(const std::string& name) const;

  TransitionSet all_transitions() const;
  /// Maximal |pre(t)|.
  std::size_t arity() const { return arity_; }
  /// Maximal pre(t)(q) over all transitions and states (at least 1).
  Int max_pre_count() const { return max_pre_; }

  /// Stable hex digest of states and transitions.
  std::string fingerprint() const;

  /// Throws InputError if the configuration mentions undeclared states.
  void validate(const Configuration& c) const;

 private:
  std::string name_;
  std::vector<std::string> states_;
  std::vector<Transition> transitions_;
  std::map<std::string, std::size_t> state_index_;
  std::map<std::string, std::size_t> transition_index_;
  std::size_t arity_ = 0;
  Int max_pre_ = 1;
};

bool is_identifier(const std::string& s);

bool enabled(const Configuration& c, const Transition& t);
/// Same, validating state names against the system.
bool enabled(const ReplicatedSystem& system, const Configuration& c, const Transition& t);

/// C + delta(t). Throws PreconditionError if t is not enabled at C.
Configuration step(const Configuration& c, const Transition& t);

/// Valuation assigning every declared state its count (absent = 0).
Valuation valuation_of(const ReplicatedSystem& system, const Configuration& c);
Configuration configuration_of(const ReplicatedSystem& system, const Valuation& values);

/// Formula-level helpers over the state variables.
LinearTerm count_of(const std::set<std::string>& states);
/// C >= pre(t)
Formula enabled_formula(const Transition& t);

struct StableTerminationProperty {
  std::string name;
  Formula pre;
  std::vector<Formula> posts;
};

/// Formulas must be quantifier-free over the system's states and posts
/// nonempty. Throws InputError otherwise.
void validate_property(const ReplicatedSystem& system, const StableTerminationProperty& property);

}  // namespace sg
