#include "stagegraph/deadsets.hpp"

#include "stagegraph/reach.hpp"

#include <algorithm>
#include <deque>

namespace sg {

OmegaConfiguration::OmegaConfiguration(std::map<std::string, Int> finite) : finite_(std::move(finite)) {
  for (const auto& [q, n] : finite_)
    if (n < 0) throw PreconditionError("negative component for " + q);
}

std::optional<Int> OmegaConfiguration::at(const std::string& state) const {
  auto it = finite_.find(state);
  if (it == finite_.end()) return std::nullopt;
  return it->second;
}

void OmegaConfiguration::set(const std::string& state, const Int& value) {
  if (value < 0) throw PreconditionError("negative component for " + state);
  finite_[state] = value;
}

bool OmegaConfiguration::contains(const Configuration& c) const {
  for (const auto& [q, n] : finite_)
    if (c[q] > n) return false;
  return true;
}

bool OmegaConfiguration::enables(const Transition& t) const {
  for (const auto& [q, n] : t.pre.entries()) {
    auto it = finite_.find(q);
    if (it != finite_.end() && it->second < n) return false;
  }
  return true;
}

OmegaConfiguration OmegaConfiguration::plus(const Delta& d) const {
  OmegaConfiguration out = *this;
  for (const auto& [q, n] : d) {
    auto it = out.finite_.find(q);
    if (it == out.finite_.end()) continue;
    it->second += n;
  }
  return out;
}

std::string OmegaConfiguration::to_string(const std::vector<std::string>& states) const {
  std::string s = "(";
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (i) s += ", ";
    auto v = at(states[i]);
    s += states[i] + ":" + (v ? v->str() : std::string("ω"));
  }
  return s + ")";
}

bool leq(const OmegaConfiguration& a, const OmegaConfiguration& b) {
  for (const auto& [q, n] : b.finite()) {
    auto v = a.at(q);
    if (!v || *v > n) return false;
  }
  return true;
}

OmegaConfiguration meet(const OmegaConfiguration& a, const OmegaConfiguration& b) {
  std::map<std::string, Int> m = a.finite();
  for (const auto& [q, n] : b.finite()) {
    auto it = m.find(q);
    if (it == m.end() || n < it->second) m[q] = n;
  }
  return OmegaConfiguration(std::move(m));
}

bool DownwardSet::contains(const Configuration& c) const {
  return std::any_of(elements.begin(), elements.end(), [&](const auto& w) { return w.contains(c); });
}

bool UpwardBasis::contains(const Configuration& c) const {
  return std::any_of(elements.begin(), elements.end(), [&](const auto& b) { return c.covers(b); });
}

DownwardSet make_downward(std::vector<OmegaConfiguration> elements) {
  std::sort(elements.begin(), elements.end());
  elements.erase(std::unique(elements.begin(), elements.end()), elements.end());
  DownwardSet d;
  for (std::size_t i = 0; i < elements.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < elements.size() && !dominated; ++j)
      dominated = i != j && leq(elements[i], elements[j]);
    if (!dominated) d.elements.push_back(elements[i]);
  }
  return d;
}

UpwardBasis make_upward(std::vector<Configuration> elements) {
  std::sort(elements.begin(), elements.end());
  elements.erase(std::unique(elements.begin(), elements.end()), elements.end());
  UpwardBasis u;
  for (std::size_t i = 0; i < elements.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < elements.size() && !dominated; ++j)
      dominated = i != j && elements[i].covers(elements[j]);
    if (!dominated) u.elements.push_back(elements[i]);
  }
  return u;
}

DownwardSet complement(const ReplicatedSystem& system, const UpwardBasis& up) {
  // The complement of ↑b is the union over q in b of ↓(q: b(q) - 1, rest ω);
  // intersections of unions distribute into pointwise meets.
  std::vector<OmegaConfiguration> current{OmegaConfiguration{}};
  for (const auto& b : up.elements) {
    for (const auto& [q, n] : b.entries()) system.state_index(q);
    std::vector<OmegaConfiguration> next;
    for (const auto& w : current)
      for (const auto& [q, n] : b.entries()) next.push_back(meet(w, OmegaConfiguration({{q, n - 1}})));
    current = make_downward(std::move(next)).elements;
  }
  return make_downward(std::move(current));
}

DownwardSet disabled_decomposition(const ReplicatedSystem& system, const TransitionSet& U) {
  if (U.empty()) throw PreconditionError("disabled set of an empty transition set");
  std::vector<Configuration> pres;
  for (const auto& name : U) pres.push_back(system.transition(name).pre);
  return complement(system, make_upward(std::move(pres)));
}

Formula disabled_formula(const ReplicatedSystem& system, const TransitionSet& U) {
  if (U.empty()) throw PreconditionError("disabled set of an empty transition set");
  std::vector<Formula> parts;
  for (const auto& name : U) parts.push_back(!enabled_formula(system.transition(name)));
  return nnf(Formula::conj(std::move(parts)));
}

UpwardBasis backward_basis(const ReplicatedSystem& system, const TransitionSet& U, std::size_t budget) {
  if (U.empty()) throw PreconditionError("backward basis of an empty transition set");
  std::vector<Configuration> start;
  for (const auto& name : U) start.push_back(system.transition(name).pre);
  std::vector<Configuration> basis = make_upward(std::move(start)).elements;
  std::deque<Configuration> work(basis.begin(), basis.end());
  std::vector<Delta> deltas;
  for (const auto& t : system.transitions()) deltas.push_back(delta(t));
  std::size_t generated = basis.size();
  while (!work.empty()) {
    Configuration b = work.front();
    work.pop_front();
    if (std::find(basis.begin(), basis.end(), b) == basis.end()) continue;  // pruned meanwhile
    for (std::size_t i = 0; i < system.transitions().size(); ++i) {
      const Transition& t = system.transitions()[i];
      Configuration m;
      for (const auto& q : system.states()) {
        Int need = b[q];
        auto d = deltas[i].find(q);
        if (d != deltas[i].end()) need -= d->second;
        m.set(q, std::max(need, Int(t.pre[q])));
      }
      if (std::any_of(basis.begin(), basis.end(), [&](const auto& x) { return m.covers(x); })) continue;
      std::erase_if(basis, [&](const auto& x) { return x.covers(m); });
      basis.push_back(m);
      work.push_back(m);
      if (++generated > budget)
        throw ExactComputationTooLarge("backward reachability exceeded " + std::to_string(budget) + " elements");
    }
  }
  return make_upward(std::move(basis));
}

DownwardSet dead_exact(const ReplicatedSystem& system, const TransitionSet& U, std::size_t budget) {
  return complement(system, backward_basis(system, U, budget));
}

Formula dead_approx(const ReplicatedSystem& system, const TransitionSet& U, unsigned i) {
  Formula dis = disabled_formula(system, U);
  Formula d = dis;
  for (unsigned k = 0; k < i; ++k) d = nnf(!pre_set(system, !d, system.all_transitions())) && dis;
  return d;
}

Formula down_formula(const DownwardSet& d) {
  std::vector<Formula> parts;
  for (const auto& w : d.elements) {
    std::vector<Formula> bounds;
    for (const auto& [q, n] : w.finite()) bounds.push_back(LinearTerm::var(q) <= LinearTerm(n));
    parts.push_back(Formula::conj(std::move(bounds)));
  }
  return Formula::disj(std::move(parts));
}

bool is_death_certificate(const ReplicatedSystem& system, const std::vector<OmegaConfiguration>& witnesses,
                          const TransitionSet& killed) {
  for (const auto& w : witnesses) {
    for (const auto& [q, n] : w.finite()) system.state_index(q);
    for (const auto& name : killed)
      if (w.enables(system.transition(name))) return false;
    for (const auto& t : system.transitions()) {
      if (!w.enables(t)) continue;
      OmegaConfiguration next = w.plus(delta(t));
      if (std::none_of(witnesses.begin(), witnesses.end(), [&](const auto& v) { return leq(next, v); }))
        return false;
    }
  }
  return true;
}

CertificateEncoding::CertificateEncoding(const ReplicatedSystem& system, const TransitionSet& targets,
                                         std::size_t k, std::optional<Int> bound)
    : system_(&system), targets_(targets), bound_(std::move(bound)) {
  if (k == 0) throw PreconditionError("certificate size must be positive");
  if (targets.empty()) throw PreconditionError("no target transitions");
  for (std::size_t i = 0; i < k; ++i) {
    flags_.emplace_back();
    values_.emplace_back();
    for (const auto& q : system.states()) {
      flags_[i].push_back(fresh_name("o" + std::to_string(i) + "@" + q));
      values_[i].push_back(fresh_name("w" + std::to_string(i) + "@" + q));
    }
  }
  for (const auto& t : targets) {
    system.transition(t);
    selectors_[t] = fresh_name("s@" + t);
  }
}

Formula CertificateEncoding::is_omega(std::size_t i, std::size_t q) const {
  return LinearTerm::var(flags_[i][q]) >= LinearTerm(1);
}

Formula CertificateEncoding::finite_at_most(std::size_t i, std::size_t q, const Int& n) const {
  if (n < 0) return Formula::falsity();
  return eq(LinearTerm::var(flags_[i][q]), 0) && (LinearTerm::var(values_[i][q]) <= LinearTerm(n));
}

Formula CertificateEncoding::enables(std::size_t i, const Transition& t) const {
  std::vector<Formula> parts;
  for (const auto& [q, n] : t.pre.entries()) parts.push_back(!finite_at_most(i, system_->state_index(q), n - 1));
  return nnf(Formula::conj(std::move(parts)));
}

Formula CertificateEncoding::constraints(std::size_t min_killed) const {
  const auto& states = system_->states();
  std::vector<Formula> parts;
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t q = 0; q < states.size(); ++q) {
      LinearTerm flag = LinearTerm::var(flags_[i][q]), value = LinearTerm::var(values_[i][q]);
      parts.push_back(flag <= LinearTerm(1));
      parts.push_back(eq(flag, 0) || eq(value, 0));
      if (bound_) parts.push_back(value <= LinearTerm(*bound_));
    }
  LinearTerm selected;
  for (const auto& [t, s] : selectors_) {
    LinearTerm sel = LinearTerm::var(s);
    selected += sel;
    parts.push_back(sel <= LinearTerm(1));
    std::vector<Formula> off;
    for (std::size_t i = 0; i < size(); ++i) off.push_back(!enables(i, system_->transition(t)));
    parts.push_back(eq(sel, 0) || nnf(Formula::conj(std::move(off))));
  }
  parts.push_back(selected >= LinearTerm(Int(min_killed)));

  // Closure: a witness enabling t moves below some witness by t.
  for (std::size_t i = 0; i < size(); ++i)
    for (const auto& t : system_->transitions()) {
      Delta d = delta(t);
      std::vector<Formula> targets;
      for (std::size_t j = 0; j < size(); ++j) {
        std::vector<Formula> comps;
        for (std::size_t q = 0; q < states.size(); ++q) {
          Int dq = d.count(states[q]) ? d.at(states[q]) : Int(0);
          if (i == j) {
            if (dq > 0) comps.push_back(is_omega(i, q));
            continue;
          }
          LinearTerm vi = LinearTerm::var(values_[i][q]), vj = LinearTerm::var(values_[j][q]);
          comps.push_back(is_omega(j, q) || (eq(LinearTerm::var(flags_[i][q]), 0) && (vi + LinearTerm(dq) <= vj)));
        }
        targets.push_back(Formula::conj(std::move(comps)));
      }
      parts.push_back(nnf(!enables(i, t)) || Formula::disj(std::move(targets)));
    }
  return Formula::conj(std::move(parts));
}

Formula CertificateEncoding::contains(std::size_t i, const std::map<std::string, LinearTerm>& c) const {
  std::vector<Formula> parts;
  for (std::size_t q = 0; q < system_->states().size(); ++q) {
    auto it = c.find(system_->states()[q]);
    LinearTerm value = it == c.end() ? LinearTerm() : it->second;
    parts.push_back(is_omega(i, q) || (value <= LinearTerm::var(values_[i][q])));
  }
  return Formula::conj(std::move(parts));
}

Formula CertificateEncoding::contains_any(const std::map<std::string, LinearTerm>& c) const {
  std::vector<Formula> parts;
  for (std::size_t i = 0; i < size(); ++i) parts.push_back(contains(i, c));
  return Formula::disj(std::move(parts));
}

Formula CertificateEncoding::below(std::size_t i, const OmegaConfiguration& w) const {
  std::vector<Formula> parts;
  for (const auto& [q, n] : w.finite()) parts.push_back(finite_at_most(i, system_->state_index(q), n));
  return Formula::conj(std::move(parts));
}

Formula CertificateEncoding::above(std::size_t i, const OmegaConfiguration& w) const {
  std::vector<Formula> parts;
  for (std::size_t q = 0; q < system_->states().size(); ++q) {
    auto v = w.at(system_->states()[q]);
    if (!v) parts.push_back(is_omega(i, q));
    else if (*v > 0) parts.push_back(nnf(!finite_at_most(i, q, *v - 1)));
  }
  return Formula::conj(std::move(parts));
}

OmegaConfiguration CertificateEncoding::witness(std::size_t i, const Valuation& model) const {
  OmegaConfiguration w;
  for (std::size_t q = 0; q < system_->states().size(); ++q) {
    auto flag = model.find(flags_[i][q]);
    if (flag != model.end() && flag->second >= 1) continue;
    auto value = model.find(values_[i][q]);
    w.set(system_->states()[q], value == model.end() ? Int(0) : value->second);
  }
  return w;
}

std::optional<DeathCertificate> find_death_certificate(const ReplicatedSystem& system,
                                                       const TransitionSet& targets, std::size_t k,
                                                       const std::optional<Configuration>& must_contain,
                                                       const std::vector<DownwardSet>& avoid, Solver& solver) {
  CertificateEncoding enc(system, targets, k);
  Formula extra = Formula::truth();
  if (must_contain) {
    system.validate(*must_contain);
    for (const auto& d : avoid)
      if (d.contains(*must_contain)) return std::nullopt;
    std::map<std::string, LinearTerm> c;
    for (const auto& q : system.states()) c[q] = LinearTerm((*must_contain)[q]);
    extra = enc.contains_any(c);
  }
  std::optional<DeathCertificate> best;
  std::size_t want = 1;
  while (want <= targets.size()) {
    SolverVerdict v = solver.check(enc.constraints(want) && extra);
    if (v.unknown()) throw InconclusiveError("death certificate: " + v.reason);
    if (v.unsat()) break;
    DeathCertificate cert;
    for (std::size_t i = 0; i < k; ++i) cert.witnesses.push_back(enc.witness(i, v.model));
    for (const auto& name : targets) {
      const Transition& t = system.transition(name);
      if (std::none_of(cert.witnesses.begin(), cert.witnesses.end(), [&](const auto& w) { return w.enables(t); }))
        cert.killed.insert(name);
    }
    if (!is_death_certificate(system, cert.witnesses, cert.killed))
      throw std::logic_error("solver model is not a death certificate");
    want = cert.killed.size() + 1;
    best = std::move(cert);
  }
  return best;
}

}  // namespace sg
