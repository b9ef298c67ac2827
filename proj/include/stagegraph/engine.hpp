#pragma once

// Construction of Presburger stage graphs: starting from an overapproximation
// of the configurations reachable from the precondition, stages are reduced
// by eventually-dead transition sets or split by death certificates until
// every leaf entails a postcondition.

#include "stagegraph/deadsets.hpp"
#include "stagegraph/eventdead.hpp"
#include "stagegraph/reach.hpp"
#include "stagegraph/split.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace sg {

/// How the child of a ranking or layer edge is built from its parent S and
/// the killed set U: S && PReach(S && dead^level(U)), or S && dead(U)
/// computed exactly.
struct Overapprox {
  bool exact = false;
  unsigned level = 0;

  static Overapprox approx(unsigned level) { return {false, level}; }
  static Overapprox exact_mode() { return {true, 0}; }
  /// "0", "1", ..., or "exact".
  std::string to_string() const;
  /// Throws InputError.
  static Overapprox parse(const std::string& s);
  bool operator==(const Overapprox&) const = default;
};

enum class CertificateKind { Ranking, Layer, SplitCover, Zero };

const char* to_string(CertificateKind k);
/// Throws InputError.
CertificateKind parse_certificate_kind(const std::string& s);

struct StageCertificate {
  CertificateKind kind = CertificateKind::Zero;
  Coefficients coefficients;
  /// Layer: 1. Ranking: not computed.
  std::optional<Int> k;
  TransitionSet killed;
  /// SplitCover: the certificate of each child, in child order.
  std::vector<DeathCertificate> witnesses;
};

struct Stage {
  std::size_t id = 0;
  Formula formula;
  TransitionSet dead;
  StageCertificate certificate;
  std::vector<std::size_t> children;
  std::optional<std::size_t> terminal_post;
  /// Human-readable facts entailed by the formula, e.g. "AN == 0".
  std::string summary;
};

struct StageGraph {
  std::string system_name;
  std::string fingerprint;
  StableTerminationProperty property;
  std::map<std::size_t, Stage> stages;
  std::vector<std::size_t> roots;
  /// Mode of every ranking or layer edge, keyed by (parent, child).
  std::map<std::pair<std::size_t, std::size_t>, Overapprox> overapprox;
  /// Layer certificates quantify the disabled-equals-dead condition over
  /// all transitions rather than the alive ones.
  bool global_diseqdead = false;
  std::string tool_version;
};

struct EngineOptions {
  std::vector<Overapprox> ladder{Overapprox::approx(0), Overapprox::approx(1), Overapprox::exact_mode()};
  std::size_t max_stages = 256;
  SplitOptions split;
  bool global_diseqdead = false;
  std::size_t structure_limit = 32;
  std::size_t exact_budget = 10000;
  std::function<void(const std::string&)> log;
};

struct ConstructionFailure {
  enum class Kind { Stuck, Budget, Solver };
  Kind kind = Kind::Stuck;
  std::string reason;
  std::optional<std::size_t> stuck_stage;
  std::optional<Formula> stuck_formula;
  std::optional<Configuration> witness;
  StageGraph partial;
};

/// Index of the first postcondition the stage entails. Throws
/// InconclusiveError on Unknown.
std::optional<std::size_t> terminal(const Formula& stage, const std::vector<Formula>& posts,
                                    Solver& solver = thread_solver());

/// Transitions whose enabling is unsatisfiable in the stage. Unknown counts
/// as not dead.
TransitionSet dead_transitions(const ReplicatedSystem& system, const Formula& stage,
                               Solver& solver = thread_solver());

/// An inductive formula containing stage && dead(U). Exact mode throws
/// ExactComputationTooLarge past the budget.
Formula ind_overapprox(const ReplicatedSystem& system, const Formula& stage, const TransitionSet& U,
                       Overapprox mode, const StructurePool& pool = {}, std::size_t exact_budget = 10000);

std::variant<StageGraph, ConstructionFailure> construct_stage_graph(const ReplicatedSystem& system,
                                                                    const StableTerminationProperty& property,
                                                                    const EngineOptions& options = {},
                                                                    Solver& solver = thread_solver());

/// Graphviz digraph, one node per stage labeled with its summary, dead set
/// and certificate.
std::string to_dot(const ReplicatedSystem& system, const StageGraph& graph);

extern const char* const tool_version;

}  // namespace sg
