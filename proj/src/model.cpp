#include "stagegraph/model.hpp"

#include <cctype>
#include <cstdio>

namespace sg {

namespace {
const Int kZero = 0;
}

Multiset::Multiset(std::initializer_list<std::pair<const std::string, Int>> entries) {
  for (const auto& [q, n] : entries) add(q, n);
}

Multiset::Multiset(const std::map<std::string, Int>& entries) {
  for (const auto& [q, n] : entries) add(q, n);
}

const Int& Multiset::operator[](const std::string& state) const {
  auto it = entries_.find(state);
  return it == entries_.end() ? kZero : it->second;
}

void Multiset::set(const std::string& state, const Int& count) {
  if (count < 0) throw PreconditionError("negative count for state '" + state + "'");
  if (count == 0) entries_.erase(state);
  else entries_[state] = count;
}

void Multiset::add(const std::string& state, const Int& count) { set(state, (*this)[state] + count); }

Int Multiset::size() const {
  Int n = 0;
  for (const auto& [q, c] : entries_) n += c;
  return n;
}

std::set<std::string> Multiset::support() const {
  std::set<std::string> s;
  for (const auto& [q, c] : entries_) s.insert(q);
  return s;
}

bool Multiset::covers(const Multiset& other) const {
  for (const auto& [q, c] : other.entries_)
    if ((*this)[q] < c) return false;
  return true;
}

std::string Multiset::to_string() const {
  std::string out = "{";
  bool first = true;
  for (const auto& [q, c] : entries_) {
    if (!first) out += ", ";
    first = false;
    out += q + ":" + c.str();
  }
  return out + "}";
}

Delta delta(const Transition& t) {
  Delta d;
  for (const auto& [q, n] : t.post.entries()) d[q] += n;
  for (const auto& [q, n] : t.pre.entries()) d[q] -= n;
  for (auto it = d.begin(); it != d.end();) {
    if (it->second == 0) it = d.erase(it);
    else ++it;
  }
  return d;
}

bool is_identifier(const std::string& s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return s != "true" && s != "false" && s != "exists" && s != "forall";
}

ReplicatedSystem::ReplicatedSystem(std::string name, std::vector<std::string> states,
                                   std::vector<Transition> transitions)
    : name_(std::move(name)), states_(std::move(states)), transitions_(std::move(transitions)) {
  if (states_.empty()) throw InputError("system has no states");
  for (std::size_t i = 0; i < states_.size(); ++i) {
    if (!is_identifier(states_[i])) throw InputError("invalid state name '" + states_[i] + "'");
    if (!state_index_.emplace(states_[i], i).second) throw InputError("duplicate state '" + states_[i] + "'");
  }
  for (std::size_t i = 0; i < transitions_.size(); ++i) {
    const Transition& t = transitions_[i];
    if (!is_identifier(t.name)) throw InputError("invalid transition name '" + t.name + "'");
    if (!transition_index_.emplace(t.name, i).second) throw InputError("duplicate transition '" + t.name + "'");
    for (const auto* side : {&t.pre, &t.post})
      for (const auto& [q, n] : side->entries())
        if (!state_index_.count(q))
          throw InputError("transition '" + t.name + "' references unknown state '" + q + "'");
    if (t.pre.size() != t.post.size())
      throw InputError("transition '" + t.name + "' does not conserve agents (|pre| != |post|)");
    if (t.pre.empty()) throw InputError("transition '" + t.name + "' has an empty pre multiset");
    if (t.pre == t.post && !t.identity)
      throw InputError("transition '" + t.name + "' is silent (pre = post)");
    if (t.pre != t.post && t.identity)
      throw InputError("transition '" + t.name + "' is declared identity but pre != post");
    std::size_t k = static_cast<std::size_t>(t.pre.size());
    if (k > arity_) arity_ = k;
    for (const auto& [q, n] : t.pre.entries())
      if (n > max_pre_) max_pre_ = n;
  }
}

bool ReplicatedSystem::has_state(const std::string& state) const { return state_index_.count(state) > 0; }

std::size_t ReplicatedSystem::state_index(const std::string& state) const {
  auto it = state_index_.find(state);
  if (it == state_index_.end()) throw InputError("unknown state '" + state + "'");
  return it->second;
}

const Transition& ReplicatedSystem::transition(const std::string& name) const {
  return transitions_[transition_index(name)];
}

std::size_t ReplicatedSystem::transition_index(const std::string& name) const {
  auto it = transition_index_.find(name);
  if (it == transition_index_.end()) throw InputError("unknown transition '" + name + "'");
  return it->second;
}

TransitionSet ReplicatedSystem::all_transitions() const {
  TransitionSet s;
  for (const auto& t : transitions_) s.insert(t.name);
  return s;
}

std::string ReplicatedSystem::fingerprint() const {
  std::string text;
  for (const auto& q : states_) text += q + ",";
  text += ";";
  for (const auto& t : transitions_)
    text += t.name + ":" + t.pre.to_string() + "->" + t.post.to_string() + (t.identity ? "=" : "") + ";";
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void ReplicatedSystem::validate(const Configuration& c) const {
  for (const auto& [q, n] : c.entries())
    if (!has_state(q)) throw InputError("configuration references unknown state '" + q + "'");
}

bool enabled(const Configuration& c, const Transition& t) { return c.covers(t.pre); }

bool enabled(const ReplicatedSystem& system, const Configuration& c, const Transition& t) {
  system.validate(c);
  system.validate(t.pre);
  return enabled(c, t);
}

Configuration step(const Configuration& c, const Transition& t) {
  if (!enabled(c, t)) throw PreconditionError("transition '" + t.name + "' is not enabled at " + c.to_string());
  Configuration out = c;
  for (const auto& [q, n] : delta(t)) out.add(q, n);
  return out;
}

Valuation valuation_of(const ReplicatedSystem& system, const Configuration& c) {
  system.validate(c);
  Valuation v;
  for (const auto& q : system.states()) v[q] = c[q];
  return v;
}

Configuration configuration_of(const ReplicatedSystem& system, const Valuation& values) {
  Configuration c;
  for (const auto& q : system.states()) {
    auto it = values.find(q);
    if (it != values.end()) c.set(q, it->second);
  }
  return c;
}

LinearTerm count_of(const std::set<std::string>& states) {
  LinearTerm t;
  for (const auto& q : states) t += LinearTerm::var(q);
  return t;
}

Formula enabled_formula(const Transition& t) {
  std::vector<Formula> parts;
  for (const auto& [q, n] : t.pre.entries()) parts.push_back(LinearTerm::var(q) >= LinearTerm(n));
  return Formula::conj(std::move(parts));
}

void validate_property(const ReplicatedSystem& system, const StableTerminationProperty& property) {
  if (!is_identifier(property.name)) throw InputError("invalid property name '" + property.name + "'");
  if (property.posts.empty()) throw InputError("property '" + property.name + "' has no postconditions");
  auto check = [&](const Formula& f, const std::string& what) {
    if (!f.is_quantifier_free()) throw InputError("property '" + property.name + "': " + what + " is quantified");
    for (const auto& v : f.free_variables())
      if (!system.has_state(v))
        throw InputError("property '" + property.name + "': " + what + " mentions unknown state '" + v + "'");
  };
  check(property.pre, "precondition");
  for (std::size_t i = 0; i < property.posts.size(); ++i) check(property.posts[i], "postcondition " + std::to_string(i));
}

}  // namespace sg
