#pragma once

// Inductive overapproximation of the reachable configurations (PReach) and
// the one-step predecessor/successor operators.
//
// PReach(phi) = exists C0, x . phi(C0) && C = C0 + sum_t x_t * delta(t)
//               && trap and siphon constraints from a structure pool.
// A trap P (every transition taking from P puts back into P) contributes
// C0(P) = 0 || C(P) >= 1. A siphon P (every transition putting into P takes
// from P) contributes C0(P) >= 1 || x_t = 0 for every t taking from P.
// Both constraint families are inductive.

#include "stagegraph/model.hpp"
#include "stagegraph/smt.hpp"

#include <functional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace sg {

struct Trap {
  std::set<std::string> states;
  bool operator==(const Trap&) const = default;
};

struct Siphon {
  std::set<std::string> states;
  bool operator==(const Siphon&) const = default;
};

bool is_trap(const ReplicatedSystem& system, const std::set<std::string>& states);
bool is_siphon(const ReplicatedSystem& system, const std::set<std::string>& states);
/// Throw PreconditionError when the condition fails or the set is empty.
Trap make_trap(const ReplicatedSystem& system, std::set<std::string> states);
Siphon make_siphon(const ReplicatedSystem& system, std::set<std::string> states);

/// Structures discovered so far; shared by all PReach formulas of a run.
struct StructurePool {
  std::vector<Trap> traps;
  std::vector<Siphon> siphons;
  std::size_t limit = 32;

  std::size_t size() const { return traps.size() + siphons.size(); }
  bool full() const { return size() >= limit; }
  bool add(const Trap& t);
  bool add(const Siphon& s);
};

/// phi holds after one step of some t in U.
Formula pre_set(const ReplicatedSystem& system, const Formula& phi, const TransitionSet& U);
/// Some configuration of phi reaches the current one in one step of U.
Formula post_set(const ReplicatedSystem& system, const Formula& phi, const TransitionSet& U);

struct PReachResult {
  Formula initial;
  Formula formula;
  std::vector<Trap> traps_used;
  std::vector<Siphon> siphons_used;
};

PReachResult preach(const ReplicatedSystem& system, const Formula& phi, const StructurePool& pool = {});

struct NoTrapFound {
  std::string reason;
};

/// Adds traps or siphons until `spurious` leaves the formula. Returns
/// NoTrapFound if some flow witness of `spurious` cannot be separated.
/// Throws PreconditionError if `spurious` is not in the formula, and
/// InconclusiveError on solver Unknown.
std::variant<PReachResult, NoTrapFound> refine_with_trap(const ReplicatedSystem& system, const PReachResult& result,
                                                         const Configuration& spurious, std::size_t limit = 32,
                                                         Solver& solver = thread_solver());

/// Reads the flow witness of every PReach block of `query` from a Sat model
/// and adds a trap or siphon that the witness violates. Returns true if the
/// pool grew.
bool refine_from_model(const ReplicatedSystem& system, const Formula& query, const Valuation& model,
                       StructurePool& pool, Solver& solver = thread_solver());

/// Satisfiability with counterexample-guided refinement: `build` renders
/// the query from the current pool; Sat answers whose flow witnesses can
/// be separated grow the pool and the query is rebuilt. The final verdict
/// (Unsat, a Sat that survived refinement, or Unknown) is returned.
SolverVerdict check_refined(const ReplicatedSystem& system, const std::function<Formula()>& build,
                            StructurePool& pool, Solver& solver = thread_solver());

}  // namespace sg
