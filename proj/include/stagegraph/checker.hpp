#pragma once

// Independent validation of a stage graph. Every obligation is reduced to
// the unsatisfiability of one Presburger sentence; nothing computed by the
// engine is trusted except the data written in the graph.

#include "stagegraph/engine.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sg {

struct Obligation {
  enum class Outcome { Holds, Violated, Unknown };
  std::string name;  // e.g. "inductive", "root-coverage", "ranking"
  std::optional<std::size_t> stage;
  Outcome outcome = Outcome::Holds;
  std::string detail;
};

struct CheckReport {
  enum class Verdict { Accept, Reject, Inconclusive };
  Verdict verdict = Verdict::Accept;
  std::vector<Obligation> obligations;

  std::vector<Obligation> violations() const;
  std::vector<Obligation> unknowns() const;
};

const char* to_string(CheckReport::Verdict v);
const char* to_string(Obligation::Outcome o);

/// Reject when some obligation fails, else Inconclusive when the solver
/// answered Unknown on some obligation, else Accept. Obligations:
/// structure (references, a root, children of non-terminal stages,
/// acyclicity, strictly growing dead sets, fingerprint), inductiveness of
/// every stage, coverage of the precondition by the roots, terminal
/// entailment, the recorded dead sets, certificate sign conditions, and
/// inclusion of stage && dead(U) in the children or coverage by split parts.
CheckReport check_stage_graph(const ReplicatedSystem& system, const StageGraph& graph,
                              Solver& solver = thread_solver());

}  // namespace sg
