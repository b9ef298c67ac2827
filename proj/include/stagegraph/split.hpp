#pragma once

// Splitting a stage with no eventually-dead transitions into parts, each
// contained in the downward closure of a death certificate.

#include "stagegraph/deadsets.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace sg {

struct SplitPart {
  Formula formula;  // stage && down_formula(certificate)
  DeathCertificate certificate;
  /// The configuration the certificate was chosen for.
  Configuration sample;
};

struct SplitResult {
  std::vector<SplitPart> parts;
  bool covered = false;
};

struct SplitFailure {
  std::string reason;
  /// A configuration of the stage outside every part found, if any.
  std::optional<Configuration> witness;
};

struct SplitOptions {
  std::size_t max_parts = 16;
  /// Certificates of size above 1 are tried, without the minimality and
  /// maximality conditions, only where size 1 finds nothing.
  std::size_t max_certificate_size = 1;
};

/// Repeatedly picks a configuration C of the stage outside the parts found
/// so far and a single omega-configuration W containing it that certifies
/// the death of some alive transition, with finite components below the
/// maximal pre count. W is the least such certificate for C, and among
/// those reachable this way no larger one exists. Throws InconclusiveError
/// on solver Unknown.
std::variant<SplitResult, SplitFailure> try_split(const ReplicatedSystem& system, const Formula& stage,
                                                  const TransitionSet& alive, const SplitOptions& options = {},
                                                  Solver& solver = thread_solver());

/// stage ⊨ ⋁ parts. Throws InconclusiveError on Unknown.
bool covers(const Formula& stage, const std::vector<Formula>& parts, Solver& solver = thread_solver());

}  // namespace sg
