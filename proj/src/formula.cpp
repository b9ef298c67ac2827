#include "stagegraph/formula.hpp"

#include <atomic>
#include <cctype>
#include <sstream>

namespace sg {

// ---------------------------------------------------------------- LinearTerm

LinearTerm LinearTerm::var(const std::string& name, const Int& coefficient) {
  LinearTerm t;
  t.add(name, coefficient);
  return t;
}

void LinearTerm::add(const std::string& name, const Int& coefficient) {
  if (coefficient == 0) return;
  auto it = coefficients_.find(name);
  if (it == coefficients_.end()) {
    coefficients_.emplace(name, coefficient);
  } else {
    it->second += coefficient;
    if (it->second == 0) coefficients_.erase(it);
  }
}

Int LinearTerm::coefficient(const std::string& name) const {
  auto it = coefficients_.find(name);
  return it == coefficients_.end() ? Int(0) : it->second;
}

std::set<std::string> LinearTerm::variables() const {
  std::set<std::string> out;
  for (const auto& [v, c] : coefficients_) out.insert(v);
  return out;
}

LinearTerm& LinearTerm::operator+=(const LinearTerm& other) {
  for (const auto& [v, c] : other.coefficients_) add(v, c);
  constant_ += other.constant_;
  return *this;
}

LinearTerm& LinearTerm::operator-=(const LinearTerm& other) {
  for (const auto& [v, c] : other.coefficients_) add(v, -c);
  constant_ -= other.constant_;
  return *this;
}

LinearTerm& LinearTerm::operator*=(const Int& factor) {
  if (factor == 0) {
    coefficients_.clear();
    constant_ = 0;
    return *this;
  }
  for (auto& [v, c] : coefficients_) c *= factor;
  constant_ *= factor;
  return *this;
}

LinearTerm LinearTerm::substitute(const std::map<std::string, LinearTerm>& replacement) const {
  LinearTerm out(constant_);
  for (const auto& [v, c] : coefficients_) {
    auto it = replacement.find(v);
    if (it == replacement.end()) out.add(v, c);
    else out += it->second * c;
  }
  return out;
}

Int LinearTerm::evaluate(const Valuation& values) const {
  Int sum = constant_;
  for (const auto& [v, c] : coefficients_) {
    auto it = values.find(v);
    if (it == values.end()) throw InputError("no value for variable '" + v + "'");
    sum += c * it->second;
  }
  return sum;
}

std::string LinearTerm::to_string() const {
  std::string out;
  bool first = true;
  auto emit = [&](const Int& c, const std::string& v) {
    Int mag = c < 0 ? Int(-c) : c;
    if (first) {
      if (c < 0) out += "-";
    } else {
      out += c < 0 ? " - " : " + ";
    }
    first = false;
    if (v.empty()) {
      out += mag.str();
    } else {
      if (mag != 1) out += mag.str() + "*";
      out += v;
    }
  };
  for (const auto& [v, c] : coefficients_) emit(c, v);
  if (constant_ != 0 || first) emit(constant_, "");
  return out;
}

// ---------------------------------------------------------------- atoms

const char* to_string(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Eq: return "==";
    case CmpOp::Ge: return ">=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ne: return "!=";
  }
  return "?";
}

CmpOp negate(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return CmpOp::Ge;
    case CmpOp::Le: return CmpOp::Gt;
    case CmpOp::Eq: return CmpOp::Ne;
    case CmpOp::Ge: return CmpOp::Lt;
    case CmpOp::Gt: return CmpOp::Le;
    case CmpOp::Ne: return CmpOp::Eq;
  }
  return op;
}

namespace {

bool compare_values(const Int& a, CmpOp op, const Int& b) {
  switch (op) {
    case CmpOp::Lt: return a < b;
    case CmpOp::Le: return a <= b;
    case CmpOp::Eq: return a == b;
    case CmpOp::Ge: return a >= b;
    case CmpOp::Gt: return a > b;
    case CmpOp::Ne: return a != b;
  }
  return false;
}

bool congruent(const Int& value, const Int& modulus, const Int& residue) {
  Int r = (value - residue) % modulus;
  return r == 0;
}

std::string atom_to_string(const Atom& a) {
  if (const auto* c = std::get_if<Comparison>(&a))
    return c->lhs.to_string() + " " + to_string(c->op) + " " + c->rhs.to_string();
  const auto& g = std::get<Congruence>(a);
  return g.term.to_string() + " % " + g.modulus.str() + " == " + g.residue.str();
}

Atom substitute_atom(const Atom& a, const std::map<std::string, LinearTerm>& r) {
  if (const auto* c = std::get_if<Comparison>(&a))
    return Comparison{c->lhs.substitute(r), c->op, c->rhs.substitute(r)};
  const auto& g = std::get<Congruence>(a);
  return Congruence{g.term.substitute(r), g.modulus, g.residue};
}

std::set<std::string> atom_vars(const Atom& a) {
  if (const auto* c = std::get_if<Comparison>(&a)) {
    auto s = c->lhs.variables();
    for (const auto& v : c->rhs.variables()) s.insert(v);
    return s;
  }
  return std::get<Congruence>(a).term.variables();
}

}  // namespace

bool eval(const Atom& atom, const Valuation& values) {
  if (const auto* c = std::get_if<Comparison>(&atom))
    return compare_values(c->lhs.evaluate(values), c->op, c->rhs.evaluate(values));
  const auto& g = std::get<Congruence>(atom);
  return congruent(g.term.evaluate(values), g.modulus, g.residue);
}

// ---------------------------------------------------------------- Formula

struct Formula::Node {
  Kind kind = Kind::True;
  std::optional<Atom> atom;
  std::vector<Formula> children;
  std::vector<std::string> bound;
  std::shared_ptr<const FlowLayer> layer;
};

Formula::Formula() : node_(truth().node_) {}

Formula Formula::truth() {
  static const Formula t(std::make_shared<const Node>(Node{Kind::True, std::nullopt, {}, {}, nullptr}));
  return t;
}

Formula Formula::falsity() {
  static const Formula f(std::make_shared<const Node>(Node{Kind::False, std::nullopt, {}, {}, nullptr}));
  return f;
}

Formula Formula::atom(Atom a) {
  if (auto* c = std::get_if<Comparison>(&a)) {
    LinearTerm diff = c->lhs - c->rhs;
    if (diff.is_constant()) return compare_values(diff.constant(), c->op, 0) ? truth() : falsity();
  } else {
    auto& g = std::get<Congruence>(a);
    if (g.modulus < 2) throw InputError("congruence modulus must be at least 2");
    if (g.residue < 0 || g.residue >= g.modulus) throw InputError("congruence residue out of range");
    if (g.term.is_constant()) return congruent(g.term.constant(), g.modulus, g.residue) ? truth() : falsity();
  }
  auto n = std::make_shared<Node>();
  n->kind = Kind::Atom;
  n->atom = std::move(a);
  return Formula(n);
}

Formula Formula::compare(LinearTerm lhs, CmpOp op, LinearTerm rhs) {
  return atom(Comparison{std::move(lhs), op, std::move(rhs)});
}

Formula Formula::congruence(LinearTerm term, Int modulus, Int residue) {
  return atom(Congruence{std::move(term), std::move(modulus), std::move(residue)});
}

Formula Formula::conj(std::vector<Formula> parts) {
  std::vector<Formula> flat;
  for (auto& p : parts) {
    if (p.is_true()) continue;
    if (p.is_false()) return falsity();
    if (p.kind() == Kind::And) {
      for (const auto& c : p.children()) flat.push_back(c);
    } else {
      flat.push_back(std::move(p));
    }
  }
  if (flat.empty()) return truth();
  if (flat.size() == 1) return flat.front();
  auto n = std::make_shared<Node>();
  n->kind = Kind::And;
  n->children = std::move(flat);
  return Formula(n);
}

Formula Formula::disj(std::vector<Formula> parts) {
  std::vector<Formula> flat;
  for (auto& p : parts) {
    if (p.is_false()) continue;
    if (p.is_true()) return truth();
    if (p.kind() == Kind::Or) {
      for (const auto& c : p.children()) flat.push_back(c);
    } else {
      flat.push_back(std::move(p));
    }
  }
  if (flat.empty()) return falsity();
  if (flat.size() == 1) return flat.front();
  auto n = std::make_shared<Node>();
  n->kind = Kind::Or;
  n->children = std::move(flat);
  return Formula(n);
}

Formula Formula::negate(const Formula& f) {
  switch (f.kind()) {
    case Kind::True: return falsity();
    case Kind::False: return truth();
    case Kind::Not: return f.body();
    default: break;
  }
  auto n = std::make_shared<Node>();
  n->kind = Kind::Not;
  n->children = {f};
  return Formula(n);
}

Formula Formula::exists(std::vector<std::string> vars, Formula body, std::shared_ptr<const FlowLayer> layer) {
  if (body.is_true() || body.is_false()) return body;
  auto used = body.free_variables();
  std::vector<std::string> keep;
  std::set<std::string> seen;
  for (auto& v : vars)
    if (used.count(v) && seen.insert(v).second) keep.push_back(std::move(v));
  if (keep.empty()) return body;
  auto n = std::make_shared<Node>();
  n->kind = Kind::Exists;
  n->bound = std::move(keep);
  n->children = {std::move(body)};
  n->layer = std::move(layer);
  return Formula(n);
}

Formula Formula::forall(std::vector<std::string> vars, Formula body) {
  if (body.is_true() || body.is_false()) return body;
  auto used = body.free_variables();
  std::vector<std::string> keep;
  std::set<std::string> seen;
  for (auto& v : vars)
    if (used.count(v) && seen.insert(v).second) keep.push_back(std::move(v));
  if (keep.empty()) return body;
  auto n = std::make_shared<Node>();
  n->kind = Kind::Forall;
  n->bound = std::move(keep);
  n->children = {std::move(body)};
  return Formula(n);
}

Formula::Kind Formula::kind() const { return node_->kind; }

const Atom& Formula::atom() const {
  if (kind() != Kind::Atom) throw PreconditionError("formula is not an atom");
  return *node_->atom;
}

const std::vector<Formula>& Formula::children() const { return node_->children; }

const Formula& Formula::body() const {
  if (node_->children.size() != 1 || kind() == Kind::And || kind() == Kind::Or)
    throw PreconditionError("formula has no single body");
  return node_->children.front();
}

const std::vector<std::string>& Formula::bound() const { return node_->bound; }

const FlowLayer* Formula::layer() const { return node_->layer.get(); }

bool Formula::is_quantifier_free() const {
  switch (kind()) {
    case Kind::Exists:
    case Kind::Forall: return false;
    default:
      for (const auto& c : children())
        if (!c.is_quantifier_free()) return false;
      return true;
  }
}

bool Formula::has_universal() const {
  if (kind() == Kind::Forall) return true;
  for (const auto& c : children())
    if (c.has_universal()) return true;
  return false;
}

std::set<std::string> Formula::free_variables() const {
  switch (kind()) {
    case Kind::True:
    case Kind::False: return {};
    case Kind::Atom: return atom_vars(atom());
    case Kind::Exists:
    case Kind::Forall: {
      auto s = body().free_variables();
      for (const auto& v : bound()) s.erase(v);
      return s;
    }
    default: {
      std::set<std::string> s;
      for (const auto& c : children())
        for (const auto& v : c.free_variables()) s.insert(v);
      return s;
    }
  }
}

Formula Formula::substitute(const std::map<std::string, LinearTerm>& replacement) const {
  switch (kind()) {
    case Kind::True:
    case Kind::False: return *this;
    case Kind::Atom: return Formula::atom(substitute_atom(atom(), replacement));
    case Kind::Not: return negate(body().substitute(replacement));
    case Kind::And:
    case Kind::Or: {
      std::vector<Formula> parts;
      parts.reserve(children().size());
      for (const auto& c : children()) parts.push_back(c.substitute(replacement));
      return kind() == Kind::And ? conj(std::move(parts)) : disj(std::move(parts));
    }
    case Kind::Exists:
    case Kind::Forall: {
      std::map<std::string, LinearTerm> inner = replacement;
      for (const auto& v : bound()) inner.erase(v);
      if (inner.empty()) return *this;
      // Variables occurring in the replacement terms must not be captured.
      std::set<std::string> incoming;
      for (const auto& [v, t] : inner)
        for (const auto& w : t.variables()) incoming.insert(w);
      std::vector<std::string> vars = bound();
      for (auto& v : vars) {
        if (!incoming.count(v)) continue;
        std::string fresh = fresh_name(v.substr(0, v.find('#')));
        inner[v] = LinearTerm::var(fresh);
        v = fresh;
      }
      Formula b = body().substitute(inner);
      std::shared_ptr<const FlowLayer> layer;
      if (node_->layer) {
        auto l = std::make_shared<FlowLayer>(*node_->layer);
        auto rename = [&](std::string& name) {
          auto it = inner.find(name);
          if (it != inner.end() && it->second.coefficients().size() == 1 && it->second.constant() == 0)
            name = it->second.coefficients().begin()->first;
        };
        for (auto& v : l->initial_vars) rename(v);
        for (auto& v : l->flow_vars) rename(v);
        for (auto& t : l->current) t = t.substitute(inner);
        layer = l;
      }
      return kind() == Kind::Exists ? exists(std::move(vars), std::move(b), layer)
                                    : forall(std::move(vars), std::move(b));
    }
  }
  return *this;
}

std::string Formula::to_string() const {
  switch (kind()) {
    case Kind::True: return "true";
    case Kind::False: return "false";
    case Kind::Atom: return atom_to_string(atom());
    case Kind::Not: return "!(" + body().to_string() + ")";
    case Kind::And:
    case Kind::Or: {
      std::string sep = kind() == Kind::And ? " && " : " || ";
      std::string out;
      for (std::size_t i = 0; i < children().size(); ++i) {
        if (i) out += sep;
        const auto& c = children()[i];
        bool wrap = kind() == Kind::And && c.kind() == Kind::Or;
        out += wrap ? "(" + c.to_string() + ")" : c.to_string();
      }
      return out;
    }
    case Kind::Exists:
    case Kind::Forall: {
      std::string out = kind() == Kind::Exists ? "exists " : "forall ";
      for (std::size_t i = 0; i < bound().size(); ++i) out += (i ? ", " : "") + bound()[i];
      return out + " . (" + body().to_string() + ")";
    }
  }
  return "?";
}

bool Formula::same_as(const Formula& other) const {
  if (node_ == other.node_) return true;
  if (kind() != other.kind()) return false;
  if (kind() == Kind::Atom) return atom() == other.atom();
  if (bound() != other.bound()) return false;
  if (children().size() != other.children().size()) return false;
  for (std::size_t i = 0; i < children().size(); ++i)
    if (!children()[i].same_as(other.children()[i])) return false;
  return true;
}

Formula operator<(const LinearTerm& a, const LinearTerm& b) { return Formula::compare(a, CmpOp::Lt, b); }
Formula operator<=(const LinearTerm& a, const LinearTerm& b) { return Formula::compare(a, CmpOp::Le, b); }
Formula operator>(const LinearTerm& a, const LinearTerm& b) { return Formula::compare(a, CmpOp::Gt, b); }
Formula operator>=(const LinearTerm& a, const LinearTerm& b) { return Formula::compare(a, CmpOp::Ge, b); }
Formula eq(const LinearTerm& a, const LinearTerm& b) { return Formula::compare(a, CmpOp::Eq, b); }
Formula ne(const LinearTerm& a, const LinearTerm& b) { return Formula::compare(a, CmpOp::Ne, b); }

bool eval(const Formula& f, const Valuation& values) {
  using K = Formula::Kind;
  switch (f.kind()) {
    case K::True: return true;
    case K::False: return false;
    case K::Atom: return eval(f.atom(), values);
    case K::Not: return !eval(f.body(), values);
    case K::And:
      for (const auto& c : f.children())
        if (!eval(c, values)) return false;
      return true;
    case K::Or:
      for (const auto& c : f.children())
        if (eval(c, values)) return true;
      return false;
    case K::Exists:
    case K::Forall: throw PreconditionError("direct evaluation of a quantified formula");
  }
  return false;
}

namespace {

Formula nnf_rec(const Formula& f, bool negated) {
  using K = Formula::Kind;
  switch (f.kind()) {
    case K::True: return negated ? Formula::falsity() : f;
    case K::False: return negated ? Formula::truth() : f;
    case K::Atom: {
      if (!negated) return f;
      if (const auto* c = std::get_if<Comparison>(&f.atom()))
        return Formula::compare(c->lhs, negate(c->op), c->rhs);
      return Formula::negate(f);
    }
    case K::Not: return nnf_rec(f.body(), !negated);
    case K::And:
    case K::Or: {
      std::vector<Formula> parts;
      for (const auto& c : f.children()) parts.push_back(nnf_rec(c, negated));
      bool conj = (f.kind() == K::And) != negated;
      return conj ? Formula::conj(std::move(parts)) : Formula::disj(std::move(parts));
    }
    case K::Exists:
    case K::Forall: {
      Formula b = nnf_rec(f.body(), negated);
      bool ex = (f.kind() == K::Exists) != negated;
      if (ex) {
        std::shared_ptr<const FlowLayer> layer;
        if (!negated && f.layer()) layer = std::make_shared<FlowLayer>(*f.layer());
        return Formula::exists(f.bound(), b, layer);
      }
      return Formula::forall(f.bound(), b);
    }
  }
  return f;
}

}  // namespace

Formula nnf(const Formula& f) { return nnf_rec(f, false); }

std::string fresh_name(const std::string& stem) {
  static std::atomic<unsigned long> counter{0};
  return stem + "#" + std::to_string(++counter);
}

Formula rename_bound_apart(const Formula& f) {
  using K = Formula::Kind;
  switch (f.kind()) {
    case K::True:
    case K::False:
    case K::Atom: return f;
    case K::Not: return Formula::negate(rename_bound_apart(f.body()));
    case K::And:
    case K::Or: {
      std::vector<Formula> parts;
      for (const auto& c : f.children()) parts.push_back(rename_bound_apart(c));
      return f.kind() == K::And ? Formula::conj(std::move(parts)) : Formula::disj(std::move(parts));
    }
    case K::Exists:
    case K::Forall: {
      std::map<std::string, LinearTerm> rename;
      std::map<std::string, std::string> names;
      std::vector<std::string> vars;
      for (const auto& v : f.bound()) {
        std::string n = fresh_name(v.substr(0, v.find('#')));
        rename[v] = LinearTerm::var(n);
        names[v] = n;
        vars.push_back(n);
      }
      Formula body = rename_bound_apart(f.body()).substitute(rename);
      if (f.kind() == K::Forall) return Formula::forall(std::move(vars), std::move(body));
      std::shared_ptr<const FlowLayer> layer;
      if (f.layer()) {
        auto l = std::make_shared<FlowLayer>(*f.layer());
        for (auto* list : {&l->initial_vars, &l->flow_vars})
          for (auto& v : *list)
            if (names.count(v)) v = names[v];
        for (auto& t : l->current) t = t.substitute(rename);
        layer = l;
      }
      return Formula::exists(std::move(vars), std::move(body), layer);
    }
  }
  return f;
}

// ---------------------------------------------------------------- parser

namespace {

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  Formula parse() {
    Formula f = disjunction();
    skip();
    if (pos_ != s_.size()) fail("unexpected input");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw InputError("formula: " + what + " at column " + std::to_string(pos_ + 1) + " in \"" + s_ + "\"");
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(const std::string& tok) {
    skip();
    if (s_.compare(pos_, tok.size(), tok) == 0) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  void expect(const std::string& tok) {
    if (!accept(tok)) fail("expected '" + tok + "'");
  }

  static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '@' || c == '#';
  }

  bool peek_keyword(const std::string& kw) {
    skip();
    if (s_.compare(pos_, kw.size(), kw) != 0) return false;
    std::size_t end = pos_ + kw.size();
    return end >= s_.size() || !ident_char(s_[end]);
  }

  std::string identifier() {
    skip();
    if (pos_ >= s_.size() || !ident_start(s_[pos_])) fail("expected identifier");
    std::size_t start = pos_;
    while (pos_ < s_.size() && ident_char(s_[pos_])) ++pos_;
    return s_.substr(start, pos_ - start);
  }

  Int integer() {
    skip();
    if (pos_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_]))) fail("expected integer");
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    return Int(s_.substr(start, pos_ - start));
  }

  Formula disjunction() {
    std::vector<Formula> parts{conjunction()};
    while (accept("||")) parts.push_back(conjunction());
    return Formula::disj(std::move(parts));
  }

  Formula conjunction() {
    std::vector<Formula> parts{literal()};
    while (accept("&&")) parts.push_back(literal());
    return Formula::conj(std::move(parts));
  }

  Formula literal() {
    skip();
    if (s_.compare(pos_, 2, "!=") != 0 && accept("!")) return Formula::negate(literal());
    if (accept("(")) {
      Formula f = disjunction();
      expect(")");
      return f;
    }
    if (peek_keyword("true")) {
      pos_ += 4;
      return Formula::truth();
    }
    if (peek_keyword("false")) {
      pos_ += 5;
      return Formula::falsity();
    }
    bool ex = peek_keyword("exists");
    if (ex || peek_keyword("forall")) {
      pos_ += 6;
      std::vector<std::string> vars{identifier()};
      while (accept(",")) vars.push_back(identifier());
      expect(".");
      Formula body = literal();
      return ex ? Formula::exists(std::move(vars), std::move(body)) : Formula::forall(std::move(vars), std::move(body));
    }
    return atom();
  }

  Formula atom() {
    LinearTerm lhs = linear();
    if (accept("%")) {
      Int m = integer();
      expect("==");
      Int r = integer();
      if (m < 2) fail("modulus must be at least 2");
      if (r >= m) fail("residue must be below the modulus");
      return Formula::congruence(std::move(lhs), std::move(m), std::move(r));
    }
    CmpOp op;
    if (accept("<=")) op = CmpOp::Le;
    else if (accept(">=")) op = CmpOp::Ge;
    else if (accept("==")) op = CmpOp::Eq;
    else if (accept("!=")) op = CmpOp::Ne;
    else if (accept("<")) op = CmpOp::Lt;
    else if (accept(">")) op = CmpOp::Gt;
    else if (accept("=")) op = CmpOp::Eq;
    else fail("expected comparison operator");
    LinearTerm rhs = linear();
    return Formula::compare(std::move(lhs), op, std::move(rhs));
  }

  LinearTerm linear() {
    LinearTerm t;
    bool negative = accept("-");
    t += negative ? -term() : term();
    for (;;) {
      if (accept("+")) t += term();
      else if (accept("-")) t -= term();
      else break;
    }
    return t;
  }

  LinearTerm term() {
    skip();
    if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      Int k = integer();
      if (accept("*")) return LinearTerm::var(identifier(), k);
      return LinearTerm(k);
    }
    return LinearTerm::var(identifier());
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Formula parse_formula(const std::string& text) { return Parser(text).parse(); }

}  // namespace sg
