#pragma once

// Downward-closed sets of configurations given by omega-configurations,
// upward-closed sets given by bases, and the sets of configurations at which
// a transition set is disabled or dead.

#include "stagegraph/model.hpp"
#include "stagegraph/smt.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sg {

/// A mapping from states to N ∪ {ω}. Only finite components are stored;
/// a state without an entry is ω.
class OmegaConfiguration {
 public:
  OmegaConfiguration() = default;  // all ω
  explicit OmegaConfiguration(std::map<std::string, Int> finite);

  bool is_omega(const std::string& state) const { return !finite_.count(state); }
  /// nullopt for ω.
  std::optional<Int> at(const std::string& state) const;
  void set(const std::string& state, const Int& value);
  void set_omega(const std::string& state) { finite_.erase(state); }
  const std::map<std::string, Int>& finite() const { return finite_; }

  /// c <= this.
  bool contains(const Configuration& c) const;
  /// this >= pre(t).
  bool enables(const Transition& t) const;
  /// this + delta(t); ω absorbs. Components may go negative only if the
  /// caller adds a delta to a configuration that does not enable t.
  OmegaConfiguration plus(const Delta& d) const;

  /// "(A:0, B:ω)" over the given states.
  std::string to_string(const std::vector<std::string>& states) const;

  auto operator<=>(const OmegaConfiguration&) const = default;

 private:
  std::map<std::string, Int> finite_;
};

/// Pointwise a <= b with n < ω.
bool leq(const OmegaConfiguration& a, const OmegaConfiguration& b);
/// Pointwise minimum.
OmegaConfiguration meet(const OmegaConfiguration& a, const OmegaConfiguration& b);

/// Downward closure of a finite antichain of omega-configurations.
struct DownwardSet {
  std::vector<OmegaConfiguration> elements;

  bool contains(const Configuration& c) const;
};

/// Upward closure of a finite antichain of configurations.
struct UpwardBasis {
  std::vector<Configuration> elements;

  bool contains(const Configuration& c) const;
};

/// Keeps the maximal elements, sorted and deduplicated.
DownwardSet make_downward(std::vector<OmegaConfiguration> elements);
/// Keeps the minimal elements, sorted and deduplicated.
UpwardBasis make_upward(std::vector<Configuration> elements);

/// Decomposition of the complement of an upward-closed set.
DownwardSet complement(const ReplicatedSystem& system, const UpwardBasis& up);

/// Decomposition of the configurations at which every transition of U is
/// disabled.
DownwardSet disabled_decomposition(const ReplicatedSystem& system, const TransitionSet& U);
Formula disabled_formula(const ReplicatedSystem& system, const TransitionSet& U);

/// Basis of the configurations from which some transition of U can become
/// enabled, by backward saturation. Throws ExactComputationTooLarge when
/// the antichain processed exceeds `budget` elements.
UpwardBasis backward_basis(const ReplicatedSystem& system, const TransitionSet& U, std::size_t budget = 10000);

DownwardSet dead_exact(const ReplicatedSystem& system, const TransitionSet& U, std::size_t budget = 10000);

/// Configurations all of whose successors within i steps disable U.
Formula dead_approx(const ReplicatedSystem& system, const TransitionSet& U, unsigned i);

/// ⋁ over elements of ⋀ over finite components of C(q) <= value.
Formula down_formula(const DownwardSet& d);

struct DeathCertificate {
  std::vector<OmegaConfiguration> witnesses;
  TransitionSet killed;
};

/// Direct check: the downward closure of the witnesses disables `killed`
/// and is closed under every transition of the system.
bool is_death_certificate(const ReplicatedSystem& system, const std::vector<OmegaConfiguration>& witnesses,
                          const TransitionSet& killed);

/// Solver variables describing k omega-configurations: per witness and
/// state an ω flag in {0,1} and a value (0 whenever the flag is set), and a
/// selector in {0,1} per target transition.
class CertificateEncoding {
 public:
  /// `bound` caps every finite component (inclusive).
  CertificateEncoding(const ReplicatedSystem& system, const TransitionSet& targets, std::size_t k,
                      std::optional<Int> bound = std::nullopt);

  /// Well-formedness, inductiveness, and: every selected target is
  /// disabled by every witness, and at least `min_killed` are selected.
  Formula constraints(std::size_t min_killed = 1) const;

  /// c <= witness i, for terms over arbitrary variables.
  Formula contains(std::size_t i, const std::map<std::string, LinearTerm>& c) const;
  /// Some witness contains c.
  Formula contains_any(const std::map<std::string, LinearTerm>& c) const;
  Formula enables(std::size_t i, const Transition& t) const;
  /// witness i <= w and witness i >= w, respectively.
  Formula below(std::size_t i, const OmegaConfiguration& w) const;
  Formula above(std::size_t i, const OmegaConfiguration& w) const;

  std::size_t size() const { return flags_.size(); }
  OmegaConfiguration witness(std::size_t i, const Valuation& model) const;

 private:
  Formula is_omega(std::size_t i, std::size_t q) const;
  Formula finite_at_most(std::size_t i, std::size_t q, const Int& n) const;

  const ReplicatedSystem* system_;
  TransitionSet targets_;
  std::optional<Int> bound_;
  std::vector<std::vector<std::string>> flags_;
  std::vector<std::vector<std::string>> values_;
  std::map<std::string, std::string> selectors_;
};

/// A certificate of size k for a nonempty subset of `targets`, as large as
/// possible. If `must_contain` is given it must lie in the closure and
/// outside every `avoid` set. Throws InconclusiveError on solver Unknown.
std::optional<DeathCertificate> find_death_certificate(const ReplicatedSystem& system,
                                                       const TransitionSet& targets, std::size_t k,
                                                       const std::optional<Configuration>& must_contain = std::nullopt,
                                                       const std::vector<DownwardSet>& avoid = {},
                                                       Solver& solver = thread_solver());

}  // namespace sg
