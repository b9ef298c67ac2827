#include "stagegraph/split.hpp"

#include <algorithm>

namespace sg {

namespace {

SolverVerdict decided(Solver& solver, const Formula& f) {
  SolverVerdict v = solver.check(rename_bound_apart(f));
  if (v.unknown()) throw InconclusiveError("split: " + v.reason);
  return v;
}

std::map<std::string, LinearTerm> state_terms(const ReplicatedSystem& system) {
  std::map<std::string, LinearTerm> c;
  for (const auto& q : system.states()) c[q] = LinearTerm::var(q);
  return c;
}

std::map<std::string, LinearTerm> constant_terms(const ReplicatedSystem& system, const Configuration& conf) {
  std::map<std::string, LinearTerm> c;
  for (const auto& q : system.states()) c[q] = LinearTerm(conf[q]);
  return c;
}

Formula outside(const std::vector<OmegaConfiguration>& ws) {
  std::vector<Formula> parts;
  for (const auto& w : ws) parts.push_back(nnf(!down_formula(DownwardSet{{w}})));
  return Formula::conj(std::move(parts));
}

Formula strictly_below(const CertificateEncoding& enc, const OmegaConfiguration& w) {
  return enc.below(0, w) && nnf(!enc.above(0, w));
}

Formula strictly_above(const CertificateEncoding& enc, const OmegaConfiguration& w) {
  return enc.above(0, w) && nnf(!enc.below(0, w));
}

// The least certificate containing c, by descent from w.
OmegaConfiguration least_for(const ReplicatedSystem& system, const CertificateEncoding& enc, const Configuration& c,
                             OmegaConfiguration w, Solver& solver) {
  Formula base = enc.constraints(1) && enc.contains(0, constant_terms(system, c));
  for (;;) {
    SolverVerdict v = decided(solver, base && strictly_below(enc, w));
    if (!v.sat()) return w;
    w = enc.witness(0, v.model);
  }
}

TransitionSet killed_by(const ReplicatedSystem& system, const std::vector<OmegaConfiguration>& ws,
                        const TransitionSet& alive) {
  TransitionSet out;
  for (const auto& name : alive) {
    const Transition& t = system.transition(name);
    if (std::none_of(ws.begin(), ws.end(), [&](const auto& w) { return w.enables(t); })) out.insert(name);
  }
  return out;
}

}  // namespace

std::variant<SplitResult, SplitFailure> try_split(const ReplicatedSystem& system, const Formula& stage,
                                                  const TransitionSet& alive, const SplitOptions& options,
                                                  Solver& solver) {
  if (alive.empty()) throw PreconditionError("split with no alive transitions");
  CertificateEncoding enc(system, alive, 1, system.max_pre_count() - 1);
  const auto cvars = state_terms(system);
  const Formula cert = enc.constraints(1);
  SplitResult result;
  std::vector<OmegaConfiguration> taken;  // closures of parts so far

  for (;;) {
    Formula rest = stage && outside(taken);
    SolverVerdict first = decided(solver, rest && cert && enc.contains(0, cvars));
    if (first.unsat()) {
      SolverVerdict left = decided(solver, rest);
      if (left.unsat()) {
        result.covered = true;
        return result;
      }
      Configuration witness = configuration_of(system, left.model);
      // Larger certificates, without the minimality and maximality search.
      std::optional<DeathCertificate> larger;
      for (std::size_t k = 2; k <= options.max_certificate_size && !larger; ++k)
        larger = find_death_certificate(system, alive, k, witness, {}, solver);
      if (!larger) return SplitFailure{"no death certificate contains " + witness.to_string(), witness};
      if (result.parts.size() >= options.max_parts)
        return SplitFailure{"more than " + std::to_string(options.max_parts) + " parts needed", witness};
      result.parts.push_back({stage && down_formula(DownwardSet{larger->witnesses}), *larger, witness});
      taken.insert(taken.end(), larger->witnesses.begin(), larger->witnesses.end());
      continue;
    }
    if (result.parts.size() >= options.max_parts)
      return SplitFailure{"more than " + std::to_string(options.max_parts) + " parts needed", std::nullopt};

    Configuration c = configuration_of(system, first.model);
    OmegaConfiguration w = least_for(system, enc, c, enc.witness(0, first.model), solver);

    // Climb to a maximal least certificate. Configurations whose least
    // certificate is not above w are excluded with their whole closure.
    std::vector<OmegaConfiguration> blocked{w};
    for (;;) {
      SolverVerdict v =
          decided(solver, rest && outside(blocked) && cert && enc.contains(0, cvars) && strictly_above(enc, w));
      if (!v.sat()) break;
      Configuration c2 = configuration_of(system, v.model);
      OmegaConfiguration w2 = least_for(system, enc, c2, enc.witness(0, v.model), solver);
      if (leq(w, w2) && w != w2) {
        c = c2;
        w = w2;
        blocked.push_back(w);
      } else {
        blocked.push_back(w2);
      }
    }
    DeathCertificate dc{{w}, killed_by(system, {w}, alive)};
    if (dc.killed.empty() || !is_death_certificate(system, dc.witnesses, dc.killed))
      throw std::logic_error("split certificate failed its self-check");
    result.parts.push_back({stage && down_formula(DownwardSet{{w}}), dc, c});
    taken.push_back(w);
  }
}

bool covers(const Formula& stage, const std::vector<Formula>& parts, Solver& solver) {
  std::vector<Formula> q{stage};
  for (const auto& p : parts) q.push_back(!p);
  SolverVerdict v = solver.check(rename_bound_apart(Formula::conj(std::move(q))));
  if (v.unknown()) throw InconclusiveError("coverage: " + v.reason);
  return v.unsat();
}

}  // namespace sg
