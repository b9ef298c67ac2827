#pragma once

// Satisfiability of Presburger formulas through an external SMT-LIB 2.6
// solver driven over a pipe. Every variable, free or bound, ranges over the
// naturals.

#include "stagegraph/formula.hpp"

#include <chrono>
#include <memory>
#include <string>

namespace sg {

enum class Logic { QuantifierFree, Quantified };

struct SolverVerdict {
  enum class Status { Sat, Unsat, Unknown };
  Status status = Status::Unknown;
  /// For Sat: values of the free variables and of the lifted existential
  /// variables (by their bound names).
  Valuation model;
  std::string reason;

  bool sat() const { return status == Status::Sat; }
  bool unsat() const { return status == Status::Unsat; }
  bool unknown() const { return status == Status::Unknown; }
};

std::string to_string(SolverVerdict::Status s);

/// Self-contained solver script asserting phi with every free variable
/// declared and constrained to be nonnegative. Quantifiers are emitted
/// literally; the quantifier-free tag rejects them with InputError.
std::string emit_smtlib(const Formula& phi, Logic logic);

struct SolverOptions {
  /// Shell command speaking SMT-LIB on stdin/stdout.
  std::string command;
  /// Per-query wall-clock budget.
  double timeout_seconds = 30.0;
};

/// Command from $STAGEGRAPH_SOLVER, else "z3 -in", unless overridden by
/// set_default_solver_options.
SolverOptions default_solver_options();
/// Affects solvers created afterwards, including per-thread instances.
void set_default_solver_options(const SolverOptions& options);

/// One solver subprocess, reused across queries with (reset). Not
/// thread-safe; give every concurrent task its own instance.
class Solver {
 public:
  explicit Solver(SolverOptions options = default_solver_options());
  ~Solver();
  Solver(const Solver&) = delete;
  Solver& operator=(const Solver&) = delete;

  /// Existentials outside universal scope are lifted to constants, so
  /// a flow formula stays in the quantifier-free logic. Sat models are
  /// validated against phi before being returned.
  SolverVerdict check(const Formula& phi);

  /// check(phi && !psi) is Unsat. Throws InconclusiveError on Unknown.
  bool entails(const Formula& phi, const Formula& psi);

  /// Membership of a valuation in a possibly existential formula.
  /// Throws InconclusiveError on Unknown.
  bool holds(const Formula& phi, const Valuation& values);

  const SolverOptions& options() const { return options_; }
  void set_timeout(double seconds) { options_.timeout_seconds = seconds; }

  std::size_t queries() const { return queries_; }
  double seconds_spent() const { return seconds_; }

 private:
  struct Process;
  SolverVerdict run(const std::string& script);

  SolverOptions options_;
  std::unique_ptr<Process> process_;
  std::size_t queries_ = 0;
  double seconds_ = 0;
};

/// Per-thread default solver instance.
Solver& thread_solver();

SolverVerdict is_sat(const Formula& phi);
bool entails(const Formula& phi, const Formula& psi);
/// eval for formulas with existential auxiliary variables.
bool eval_with_solver(const Formula& phi, const Valuation& values);

}  // namespace sg
