#pragma once

// Presburger formulas over named natural-number variables.
//
// Free variables of a stage formula are state names; auxiliary variables
// introduced by the library (flow counts, initial configurations, quotient
// variables) contain '@' or '#', which state names cannot.

#include "stagegraph/common.hpp"

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace sg {

using Valuation = std::map<std::string, Int>;

class LinearTerm {
 public:
  LinearTerm() = default;
  LinearTerm(Int constant) : constant_(std::move(constant)) {}  // NOLINT: implicit by design of the algebra
  LinearTerm(int constant) : constant_(constant) {}             // NOLINT

  static LinearTerm var(const std::string& name, const Int& coefficient = 1);

  const std::map<std::string, Int>& coefficients() const { return coefficients_; }
  const Int& constant() const { return constant_; }
  Int coefficient(const std::string& name) const;
  bool is_constant() const { return coefficients_.empty(); }
  std::set<std::string> variables() const;

  LinearTerm& operator+=(const LinearTerm& other);
  LinearTerm& operator-=(const LinearTerm& other);
  LinearTerm& operator*=(const Int& factor);
  friend LinearTerm operator+(LinearTerm a, const LinearTerm& b) { return a += b; }
  friend LinearTerm operator-(LinearTerm a, const LinearTerm& b) { return a -= b; }
  friend LinearTerm operator*(LinearTerm a, const Int& k) { return a *= k; }
  friend LinearTerm operator*(const Int& k, LinearTerm a) { return a *= k; }
  LinearTerm operator-() const { return LinearTerm{} - *this; }

  /// Replaces variables by terms; variables not in the map are kept.
  LinearTerm substitute(const std::map<std::string, LinearTerm>& replacement) const;

  /// Throws InputError if a variable has no value.
  Int evaluate(const Valuation& values) const;

  std::string to_string() const;

  bool operator==(const LinearTerm&) const = default;

 private:
  void add(const std::string& name, const Int& coefficient);

  std::map<std::string, Int> coefficients_;
  Int constant_ = 0;
};

enum class CmpOp { Lt, Le, Eq, Ge, Gt, Ne };

const char* to_string(CmpOp op);
CmpOp negate(CmpOp op);

struct Comparison {
  LinearTerm lhs;
  CmpOp op;
  LinearTerm rhs;
  bool operator==(const Comparison&) const = default;
};

/// term ≡ residue (mod modulus), modulus >= 2, residue in [0, modulus).
struct Congruence {
  LinearTerm term;
  Int modulus;
  Int residue;
  bool operator==(const Congruence&) const = default;
};

using Atom = std::variant<Comparison, Congruence>;

bool eval(const Atom& atom, const Valuation& values);

/// Bookkeeping attached to the existential block of a flow
/// overapproximation, so that solver models can be read back per layer.
struct FlowLayer {
  std::vector<std::string> states;        // state names, system order
  std::vector<std::string> transitions;   // transition names, system order
  std::vector<std::string> initial_vars;  // one bound variable per state
  std::vector<std::string> flow_vars;     // one bound variable per transition
  std::vector<LinearTerm> current;        // the layer's reached configuration
};

class Formula {
 public:
  enum class Kind { True, False, Atom, Not, And, Or, Exists, Forall };

  Formula();  // true

  static Formula truth();
  static Formula falsity();
  static Formula atom(Atom a);
  static Formula compare(LinearTerm lhs, CmpOp op, LinearTerm rhs);
  static Formula congruence(LinearTerm term, Int modulus, Int residue);
  static Formula conj(std::vector<Formula> parts);
  static Formula disj(std::vector<Formula> parts);
  static Formula negate(const Formula& f);
  /// Bound variables that do not occur in the body are dropped.
  static Formula exists(std::vector<std::string> vars, Formula body,
                        std::shared_ptr<const FlowLayer> layer = nullptr);
  static Formula forall(std::vector<std::string> vars, Formula body);

  Kind kind() const;
  const Atom& atom() const;
  const std::vector<Formula>& children() const;
  const Formula& body() const;  // Not / Exists / Forall
  const std::vector<std::string>& bound() const;
  const FlowLayer* layer() const;

  bool is_true() const { return kind() == Kind::True; }
  bool is_false() const { return kind() == Kind::False; }
  bool is_quantifier_free() const;
  bool has_universal() const;
  std::set<std::string> free_variables() const;

  Formula substitute(const std::map<std::string, LinearTerm>& replacement) const;

  /// Text in the external formula grammar; parse_formula(to_string()) is
  /// structurally equal to *this.
  std::string to_string() const;

  friend Formula operator&&(const Formula& a, const Formula& b) { return conj({a, b}); }
  friend Formula operator||(const Formula& a, const Formula& b) { return disj({a, b}); }
  friend Formula operator!(const Formula& a) { return negate(a); }

  /// Structural identity of the syntax trees (ignores layer annotations).
  bool same_as(const Formula& other) const;

 private:
  struct Node;
  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

// Convenience atoms.
Formula operator<(const LinearTerm& a, const LinearTerm& b);
Formula operator<=(const LinearTerm& a, const LinearTerm& b);
Formula operator>(const LinearTerm& a, const LinearTerm& b);
Formula operator>=(const LinearTerm& a, const LinearTerm& b);
Formula eq(const LinearTerm& a, const LinearTerm& b);
Formula ne(const LinearTerm& a, const LinearTerm& b);

/// Evaluates a quantifier-free formula; throws PreconditionError on
/// quantifiers and InputError on unassigned free variables.
bool eval(const Formula& f, const Valuation& values);

/// Negation normal form: negations only directly above congruence atoms.
/// Negated existentials become universals.
Formula nnf(const Formula& f);

/// Returns a fresh variable name with the given stem, unique per process.
std::string fresh_name(const std::string& stem);

/// Renames every bound variable to a fresh name (layer annotations follow),
/// so that no two quantifiers of the result share a variable.
Formula rename_bound_apart(const Formula& f);

/// Parses the external grammar. Throws InputError with the column of the
/// first offending character.
Formula parse_formula(const std::string& text);

}  // namespace sg
