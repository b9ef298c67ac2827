#include "stagegraph/smt.hpp"

#include <atomic>
#include <cerrno>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <optional>
#include <sstream>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace sg {

std::string to_string(SolverVerdict::Status s) {
  switch (s) {
    case SolverVerdict::Status::Sat: return "sat";
    case SolverVerdict::Status::Unsat: return "unsat";
    case SolverVerdict::Status::Unknown: return "unknown";
  }
  return "?";
}

namespace {

// ---------------------------------------------------------------- emission

std::string quote(const std::string& name) { return "|" + name + "|"; }

std::string literal(const Int& v) { return v < 0 ? "(- " + Int(-v).str() + ")" : v.str(); }

std::string emit_sum(const std::map<std::string, Int>& coefficients) {
  std::vector<std::string> parts;
  for (const auto& [v, c] : coefficients)
    parts.push_back(c == 1 ? quote(v) : "(* " + literal(c) + " " + quote(v) + ")");
  if (parts.empty()) return "0";
  if (parts.size() == 1) return parts.front();
  std::string out = "(+";
  for (const auto& p : parts) out += " " + p;
  return out + ")";
}

struct Emitter {
  // Constants declared at top level: name and whether it is a natural.
  std::vector<std::pair<std::string, bool>> constants;

  std::string declare_local(const std::string& stem, bool top_level, bool natural,
                            std::vector<std::pair<std::string, bool>>& local) {
    std::string name = fresh_name(stem);
    (top_level ? constants : local).emplace_back(name, natural);
    return name;
  }

  static std::string wrap_local(const std::vector<std::pair<std::string, bool>>& local, const std::string& body) {
    if (local.empty()) return body;
    std::string decl, guard;
    for (const auto& [n, natural] : local) {
      decl += "(" + quote(n) + " Int)";
      if (natural) guard += " (>= " + quote(n) + " 0)";
    }
    return "(exists (" + decl + ") (and" + guard + " " + body + "))";
  }

  std::string comparison(const Comparison& c) {
    LinearTerm diff = c.lhs - c.rhs;
    std::string lhs = emit_sum(diff.coefficients());
    Int k = -diff.constant();
    switch (c.op) {
      case CmpOp::Lt: return "(<= " + lhs + " " + literal(k - 1) + ")";
      case CmpOp::Le: return "(<= " + lhs + " " + literal(k) + ")";
      case CmpOp::Eq: return "(= " + lhs + " " + literal(k) + ")";
      case CmpOp::Ge: return "(>= " + lhs + " " + literal(k) + ")";
      case CmpOp::Gt: return "(>= " + lhs + " " + literal(k + 1) + ")";
      case CmpOp::Ne: return "(not (= " + lhs + " " + literal(k) + "))";
    }
    return "";
  }

  // term ≡ r (mod m) as term = m*q + r, or its negation as term = m*q + s
  // with 0 <= s < m, s != r.
  std::string congruence(const Congruence& g, bool negated, bool top_level) {
    std::vector<std::pair<std::string, bool>> local;
    bool natural = g.term.constant() >= 0;
    for (const auto& [v, c] : g.term.coefficients())
      if (c < 0) natural = false;
    std::string q = declare_local("q", top_level, natural, local);
    std::string lhs = emit_sum(g.term.coefficients());
    std::string mq = "(* " + g.modulus.str() + " " + quote(q) + ")";
    std::string body;
    if (!negated) {
      body = "(= " + lhs + " (+ " + mq + " " + literal(g.residue - g.term.constant()) + "))";
    } else {
      std::string s = declare_local("s", top_level, true, local);
      body = "(and (= " + lhs + " (+ " + mq + " " + quote(s) + " " + literal(-g.term.constant()) + ")) (<= " +
             quote(s) + " " + literal(g.modulus - 1) + ") (not (= " + quote(s) + " " + g.residue.str() + ")))";
    }
    return wrap_local(local, body);
  }

  // f is in negation normal form.
  std::string emit(const Formula& f, bool top_level) {
    using K = Formula::Kind;
    switch (f.kind()) {
      case K::True: return "true";
      case K::False: return "false";
      case K::Atom:
        if (const auto* c = std::get_if<Comparison>(&f.atom())) return comparison(*c);
        return congruence(std::get<Congruence>(f.atom()), false, top_level);
      case K::Not:
        return congruence(std::get<Congruence>(f.body().atom()), true, top_level);
      case K::And:
      case K::Or: {
        std::string out = f.kind() == K::And ? "(and" : "(or";
        for (const auto& c : f.children()) out += " " + emit(c, top_level);
        return out + ")";
      }
      case K::Exists:
      case K::Forall: {
        std::string decl, guard;
        for (const auto& v : f.bound()) {
          decl += "(" + quote(v) + " Int)";
          guard += " (>= " + quote(v) + " 0)";
        }
        std::string body = emit(f.body(), false);
        if (f.kind() == K::Exists) return "(exists (" + decl + ") (and" + guard + " " + body + "))";
        return "(forall (" + decl + ") (=> (and" + guard + ") " + body + "))";
      }
    }
    return "";
  }
};

// Renames existentially bound variables outside universal scope to
// top-level names and strips their quantifiers.
struct Lifter {
  std::set<std::string> used;
  std::vector<std::string> lifted;

  Formula lift(const Formula& f) {
    using K = Formula::Kind;
    switch (f.kind()) {
      case K::And:
      case K::Or: {
        std::vector<Formula> parts;
        for (const auto& c : f.children()) parts.push_back(lift(c));
        return f.kind() == K::And ? Formula::conj(std::move(parts)) : Formula::disj(std::move(parts));
      }
      case K::Exists: {
        std::map<std::string, LinearTerm> rename;
        for (const auto& v : f.bound()) {
          std::string name = v;
          if (used.count(name)) name = fresh_name(v.substr(0, v.find('#')));
          used.insert(name);
          lifted.push_back(name);
          if (name != v) rename[v] = LinearTerm::var(name);
        }
        Formula body = rename.empty() ? f.body() : f.body().substitute(rename);
        return lift(body);
      }
      default: return f;
    }
  }
};

std::string header(Logic logic, const std::set<std::string>& free, const std::vector<std::pair<std::string, bool>>& extra) {
  std::string out = logic == Logic::Quantified ? "(set-logic LIA)\n" : "(set-logic QF_LIA)\n";
  for (const auto& v : free) out += "(declare-const " + quote(v) + " Int)\n";
  for (const auto& [v, natural] : extra) out += "(declare-const " + quote(v) + " Int)\n";
  for (const auto& v : free) out += "(assert (>= " + quote(v) + " 0))\n";
  for (const auto& [v, natural] : extra)
    if (natural) out += "(assert (>= " + quote(v) + " 0))\n";
  return out;
}

// ---------------------------------------------------------------- s-expressions

struct SExpr {
  std::string atom;
  std::vector<SExpr> list;
  bool is_list = false;
};

class SExprReader {
 public:
  explicit SExprReader(const std::string& s) : s_(s) {}

  std::optional<SExpr> next() {
    skip();
    if (pos_ >= s_.size()) return std::nullopt;
    return read();
  }

 private:
  void skip() {
    while (pos_ < s_.size()) {
      if (std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      else if (s_[pos_] == ';')
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      else break;
    }
  }

  SExpr read() {
    skip();
    if (pos_ >= s_.size()) throw std::runtime_error("unexpected end of solver output");
    SExpr e;
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      e.is_list = true;
      for (;;) {
        skip();
        if (pos_ >= s_.size()) throw std::runtime_error("unbalanced solver output");
        if (s_[pos_] == ')') {
          ++pos_;
          break;
        }
        e.list.push_back(read());
      }
    } else if (c == '|') {
      std::size_t end = s_.find('|', pos_ + 1);
      if (end == std::string::npos) throw std::runtime_error("unterminated symbol in solver output");
      e.atom = s_.substr(pos_ + 1, end - pos_ - 1);
      pos_ = end + 1;
    } else if (c == '"') {
      std::size_t end = pos_ + 1;
      while (end < s_.size() && !(s_[end] == '"' && (end + 1 >= s_.size() || s_[end + 1] != '"')))
        end += s_[end] == '"' ? 2 : 1;
      e.atom = s_.substr(pos_ + 1, end - pos_ - 1);
      pos_ = end + 1;
    } else {
      std::size_t start = pos_;
      while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != '(' &&
             s_[pos_] != ')')
        ++pos_;
      e.atom = s_.substr(start, pos_ - start);
    }
    return e;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

Int int_value(const SExpr& e) {
  if (!e.is_list) return Int(e.atom);
  if (e.list.size() == 2 && !e.list[0].is_list && e.list[0].atom == "-") return -int_value(e.list[1]);
  throw std::runtime_error("unsupported value in solver model");
}

Valuation parse_model(const std::string& text) {
  Valuation m;
  SExprReader reader(text);
  while (auto e = reader.next()) {
    if (!e->is_list) continue;
    std::vector<SExpr> defs = e->list;
    if (!defs.empty() && !defs[0].is_list && defs[0].atom == "model") defs.erase(defs.begin());
    for (const auto& d : defs) {
      if (!d.is_list || d.list.size() != 5 || d.list[0].atom != "define-fun") continue;
      if (!d.list[2].list.empty()) continue;
      m[d.list[1].atom] = int_value(d.list[4]);
    }
  }
  return m;
}

std::mutex default_options_mutex;
std::optional<SolverOptions> default_override;
std::atomic<unsigned> default_generation{0};

}  // namespace

std::string emit_smtlib(const Formula& phi, Logic logic) {
  if (logic == Logic::QuantifierFree && !phi.is_quantifier_free())
    throw InputError("quantified formula emitted under the quantifier-free logic");
  Formula f = nnf(phi);
  Emitter em;
  std::string body = em.emit(f, true);
  return header(logic, f.free_variables(), em.constants) + "(assert " + body + ")\n(check-sat)\n(exit)\n";
}

SolverOptions default_solver_options() {
  {
    std::lock_guard<std::mutex> lock(default_options_mutex);
    if (default_override) return *default_override;
  }
  SolverOptions o;
  const char* env = std::getenv("STAGEGRAPH_SOLVER");
  o.command = env && *env ? env : "z3 -in";
  return o;
}

void set_default_solver_options(const SolverOptions& options) {
  std::lock_guard<std::mutex> lock(default_options_mutex);
  default_override = options;
  ++default_generation;
}

// ---------------------------------------------------------------- process

struct Solver::Process {
  pid_t pid = -1;
  int to_child = -1;
  int from_child = -1;
  std::string buffer;

  static std::unique_ptr<Process> start(const std::string& command) {
    static std::once_flag ignore_sigpipe;
    std::call_once(ignore_sigpipe, [] { std::signal(SIGPIPE, SIG_IGN); });
    int in[2], out[2];
    if (pipe(in) != 0) return nullptr;
    if (pipe(out) != 0) {
      close(in[0]);
      close(in[1]);
      return nullptr;
    }
    pid_t pid = fork();
    if (pid < 0) {
      for (int fd : {in[0], in[1], out[0], out[1]}) close(fd);
      return nullptr;
    }
    if (pid == 0) {
      dup2(in[0], STDIN_FILENO);
      dup2(out[1], STDOUT_FILENO);
      int devnull = open("/dev/null", O_WRONLY);
      if (devnull >= 0) dup2(devnull, STDERR_FILENO);
      for (int fd : {in[0], in[1], out[0], out[1]}) close(fd);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(in[0]);
    close(out[1]);
    auto p = std::make_unique<Process>();
    p->pid = pid;
    p->to_child = in[1];
    p->from_child = out[0];
    fcntl(p->to_child, F_SETFD, FD_CLOEXEC);
    fcntl(p->from_child, F_SETFD, FD_CLOEXEC);
    return p;
  }

  ~Process() {
    if (to_child >= 0) close(to_child);
    if (from_child >= 0) close(from_child);
    if (pid > 0) {
      kill(pid, SIGKILL);
      waitpid(pid, nullptr, 0);
    }
  }

  bool write_all(const std::string& s) {
    std::size_t done = 0;
    while (done < s.size()) {
      ssize_t n = write(to_child, s.data() + done, s.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      done += static_cast<std::size_t>(n);
    }
    return true;
  }

  enum class ReadStatus { Ok, Eof, Timeout };

  // Reads until a line equal to `sentinel`; everything before it goes to
  // `out`.
  ReadStatus read_until(const std::string& sentinel, std::string& out,
                        std::chrono::steady_clock::time_point deadline) {
    for (;;) {
      std::size_t nl;
      while ((nl = buffer.find('\n')) != std::string::npos) {
        std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string stripped = line;
        if (stripped.size() >= 2 && stripped.front() == '"' && stripped.back() == '"')
          stripped = stripped.substr(1, stripped.size() - 2);
        if (stripped == sentinel) return ReadStatus::Ok;
        out += line + "\n";
      }
      auto now = std::chrono::steady_clock::now();
      if (now >= deadline) return ReadStatus::Timeout;
      int ms = static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count()) + 1;
      pollfd pfd{from_child, POLLIN, 0};
      int r = poll(&pfd, 1, ms);
      if (r < 0) {
        if (errno == EINTR) continue;
        return ReadStatus::Eof;
      }
      if (r == 0) continue;
      char chunk[65536];
      ssize_t n = read(from_child, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return ReadStatus::Eof;
      buffer.append(chunk, static_cast<std::size_t>(n));
    }
  }
};

Solver::Solver(SolverOptions options) : options_(std::move(options)) {
  if (options_.command.empty()) options_.command = default_solver_options().command;
}

Solver::~Solver() = default;

SolverVerdict Solver::run(const std::string& script) {
  SolverVerdict verdict;
  auto started = std::chrono::steady_clock::now();
  auto finish = [&](SolverVerdict v) {
    seconds_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return v;
  };
  ++queries_;
  if (!process_) process_ = Process::start(options_.command);
  if (!process_) {
    verdict.reason = "could not start solver '" + options_.command + "'";
    return finish(verdict);
  }
  long soft_ms = static_cast<long>(options_.timeout_seconds * 1000);
  auto deadline = started + std::chrono::milliseconds(soft_ms + 2000);
  std::string request = "(reset)\n(set-option :produce-models true)\n(set-option :timeout " +
                        std::to_string(soft_ms) + ")\n" + script + "(check-sat)\n(echo \"@@end-check\")\n";
  auto fail = [&](const std::string& reason) {
    process_.reset();
    verdict.status = SolverVerdict::Status::Unknown;
    verdict.reason = reason;
    return finish(verdict);
  };
  if (!process_->write_all(request)) return fail("could not write to solver '" + options_.command + "'");
  std::string out;
  auto st = process_->read_until("@@end-check", out, deadline);
  if (st == Process::ReadStatus::Timeout) return fail("timeout");
  if (st == Process::ReadStatus::Eof) return fail("solver '" + options_.command + "' exited");

  std::string status_line, errors;
  std::istringstream lines(out);
  for (std::string line; std::getline(lines, line);) {
    if (line == "sat" || line == "unsat" || line == "unknown") status_line = line;
    else if (line.rfind("(error", 0) == 0) errors += line;
    else if (!line.empty()) errors += line;
  }
  if (!errors.empty()) {
    verdict.reason = "solver error: " + errors;
    return finish(verdict);
  }
  if (status_line == "unsat") {
    verdict.status = SolverVerdict::Status::Unsat;
    return finish(verdict);
  }
  if (status_line != "sat") {
    verdict.reason = status_line.empty() ? "no answer" : "solver returned unknown";
    return finish(verdict);
  }
  if (!process_->write_all("(get-model)\n(echo \"@@end-model\")\n")) return fail("could not write to solver");
  std::string model_text;
  st = process_->read_until("@@end-model", model_text, deadline);
  if (st == Process::ReadStatus::Timeout) return fail("timeout");
  if (st == Process::ReadStatus::Eof) return fail("solver exited");
  try {
    verdict.model = parse_model(model_text);
  } catch (const std::exception& e) {
    verdict.reason = std::string("unreadable model: ") + e.what();
    return finish(verdict);
  }
  verdict.status = SolverVerdict::Status::Sat;
  return finish(verdict);
}

SolverVerdict Solver::check(const Formula& phi) {
  if (phi.is_false()) return SolverVerdict{SolverVerdict::Status::Unsat, {}, ""};
  Formula f = nnf(phi);
  Lifter lifter;
  lifter.used = f.free_variables();
  Formula matrix = lifter.lift(f);
  Emitter em;
  std::string body = em.emit(matrix, true);
  std::vector<std::pair<std::string, bool>> consts;
  for (const auto& v : lifter.lifted) consts.emplace_back(v, true);
  for (const auto& c : em.constants) consts.push_back(c);
  std::set<std::string> free = f.free_variables();
  Logic logic = matrix.has_universal() ? Logic::Quantified : Logic::QuantifierFree;
  std::string script = header(logic, free, consts) + "(assert " + body + ")\n";
  SolverVerdict v = run(script);
  if (!v.sat()) return v;
  for (const auto& x : free) v.model.try_emplace(x, 0);
  for (const auto& x : lifter.lifted) v.model.try_emplace(x, 0);
  if (matrix.is_quantifier_free()) {
    bool ok = false;
    try {
      ok = eval(matrix, v.model);
    } catch (const std::exception&) {
      ok = false;
    }
    if (!ok) return SolverVerdict{SolverVerdict::Status::Unknown, {}, "solver model failed validation"};
  }
  // Only the caller-visible names.
  Valuation visible;
  for (const auto& x : free) visible[x] = v.model[x];
  for (const auto& x : lifter.lifted) visible[x] = v.model[x];
  v.model = std::move(visible);
  return v;
}

bool Solver::entails(const Formula& phi, const Formula& psi) {
  SolverVerdict v = check(phi && !psi);
  if (v.unknown()) throw InconclusiveError("entailment undecided: " + v.reason);
  return v.unsat();
}

bool Solver::holds(const Formula& phi, const Valuation& values) {
  if (phi.is_quantifier_free()) return eval(phi, values);
  std::map<std::string, LinearTerm> r;
  for (const auto& v : phi.free_variables()) {
    auto it = values.find(v);
    if (it == values.end()) throw InputError("no value for variable '" + v + "'");
    r[v] = LinearTerm(it->second);
  }
  SolverVerdict verdict = check(phi.substitute(r));
  if (verdict.unknown()) throw InconclusiveError("membership undecided: " + verdict.reason);
  return verdict.sat();
}

Solver& thread_solver() {
  thread_local std::unique_ptr<Solver> solver;
  thread_local unsigned generation = ~0u;
  unsigned g = default_generation.load();
  if (!solver || generation != g) {
    solver = std::make_unique<Solver>(default_solver_options());
    generation = g;
  }
  return *solver;
}

SolverVerdict is_sat(const Formula& phi) { return thread_solver().check(phi); }
bool entails(const Formula& phi, const Formula& psi) { return thread_solver().entails(phi, psi); }
bool eval_with_solver(const Formula& phi, const Valuation& values) { return thread_solver().holds(phi, values); }

}  // namespace sg
