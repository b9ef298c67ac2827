#include "stagegraph/engine.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

namespace sg {

const char* const tool_version = "stagegraph 0.1.0";

std::string Overapprox::to_string() const { return exact ? "exact" : std::to_string(level); }

Overapprox Overapprox::parse(const std::string& s) {
  if (s == "exact") return exact_mode();
  if (!s.empty() && s.size() < 4 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
    return approx(static_cast<unsigned>(std::stoul(s)));
  throw InputError("bad overapproximation mode '" + s + "'");
}

const char* to_string(CertificateKind k) {
  switch (k) {
    case CertificateKind::Ranking: return "ranking";
    case CertificateKind::Layer: return "layer";
    case CertificateKind::SplitCover: return "split_cover";
    case CertificateKind::Zero: return "zero";
  }
  return "?";
}

CertificateKind parse_certificate_kind(const std::string& s) {
  for (auto k : {CertificateKind::Ranking, CertificateKind::Layer, CertificateKind::SplitCover, CertificateKind::Zero})
    if (s == to_string(k)) return k;
  throw InputError("bad certificate kind '" + s + "'");
}

std::optional<std::size_t> terminal(const Formula& stage, const std::vector<Formula>& posts, Solver& solver) {
  for (std::size_t i = 0; i < posts.size(); ++i) {
    SolverVerdict v = solver.check(rename_bound_apart(stage && nnf(!posts[i])));
    if (v.unknown()) throw InconclusiveError("terminal check: " + v.reason);
    if (v.unsat()) return i;
  }
  return std::nullopt;
}

TransitionSet dead_transitions(const ReplicatedSystem& system, const Formula& stage, Solver& solver) {
  TransitionSet dead;
  for (const auto& t : system.transitions())
    if (solver.check(rename_bound_apart(stage && enabled_formula(t))).unsat()) dead.insert(t.name);
  return dead;
}

Formula ind_overapprox(const ReplicatedSystem& system, const Formula& stage, const TransitionSet& U,
                       Overapprox mode, const StructurePool& pool, std::size_t exact_budget) {
  if (mode.exact) return stage && down_formula(dead_exact(system, U, exact_budget));
  return stage && preach(system, stage && dead_approx(system, U, mode.level), pool).formula;
}

namespace {

struct Recipe {
  enum class Kind { Root, Reduce, Part } kind = Kind::Root;
  std::size_t parent = 0;
  TransitionSet killed;
  Overapprox mode;
  std::optional<DownwardSet> exact;  // Reduce in exact mode
  DownwardSet part;                  // Part
};

bool subset(const TransitionSet& a, const TransitionSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

std::string join(const TransitionSet& s) {
  std::string out = "{";
  for (const auto& x : s) out += (out.size() > 1 ? ", " : "") + x;
  return out + "}";
}

class Builder {
 public:
  Builder(const ReplicatedSystem& system, const StableTerminationProperty& property, const EngineOptions& options,
          Solver& solver)
      : system_(system), property_(property), options_(options), solver_(solver) {
    pool_.limit = options.structure_limit;
  }

  std::variant<StageGraph, ConstructionFailure> run() {
    try {
      return build();
    } catch (const InconclusiveError& e) {
      return failure(ConstructionFailure::Kind::Solver, e.what(), std::nullopt, std::nullopt);
    } catch (const ExactComputationTooLarge& e) {
      return failure(ConstructionFailure::Kind::Budget, e.what(), std::nullopt, std::nullopt);
    }
  }

 private:
  const ReplicatedSystem& system_;
  const StableTerminationProperty& property_;
  const EngineOptions& options_;
  Solver& solver_;
  StructurePool pool_;

  std::vector<Recipe> recipes_;
  std::vector<Stage> stages_;
  std::map<std::pair<std::size_t, std::size_t>, Overapprox> modes_;
  std::vector<std::optional<Formula>> cache_;
  std::size_t cache_pool_ = 0;

  void log(const std::string& s) const {
    if (options_.log) options_.log(s);
  }

  Formula formula(std::size_t id) {
    if (pool_.size() != cache_pool_) {
      cache_.assign(cache_.size(), std::nullopt);
      cache_pool_ = pool_.size();
    }
    if (cache_.size() <= id) cache_.resize(id + 1);
    if (cache_[id]) return *cache_[id];
    const Recipe& r = recipes_[id];
    Formula f = Formula::truth();
    switch (r.kind) {
      case Recipe::Kind::Root: f = preach(system_, property_.pre, pool_).formula; break;
      case Recipe::Kind::Reduce: {
        Formula s = formula(r.parent);
        f = r.exact ? s && down_formula(*r.exact)
                    : s && preach(system_, s && dead_approx(system_, r.killed, r.mode.level), pool_).formula;
        break;
      }
      case Recipe::Kind::Part: f = formula(r.parent) && down_formula(r.part); break;
    }
    cache_[id] = f;
    return f;
  }

  SolverVerdict refined(std::size_t id, const Formula& extra) {
    return check_refined(system_, [&] { return formula(id) && extra; }, pool_, solver_);
  }

  std::size_t add(Recipe r) {
    recipes_.push_back(std::move(r));
    Stage s;
    s.id = stages_.size();
    stages_.push_back(std::move(s));
    return stages_.back().id;
  }

  // Candidates that lost the escalation are dropped again.
  void drop_last() {
    recipes_.pop_back();
    stages_.pop_back();
    if (cache_.size() > recipes_.size()) cache_.resize(recipes_.size());
  }

  TransitionSet dead_of(std::size_t id) {
    TransitionSet dead;
    for (const auto& t : system_.transitions()) {
      SolverVerdict v = refined(id, enabled_formula(t));
      if (v.unsat()) dead.insert(t.name);
    }
    return dead;
  }

  bool equivalent(std::size_t a, std::size_t b) {
    double saved = solver_.options().timeout_seconds;
    solver_.set_timeout(std::min(saved, 10.0));
    auto implies = [&](std::size_t x, std::size_t y) {
      return solver_.check(rename_bound_apart(formula(x) && nnf(!formula(y)))).unsat();
    };
    bool same = implies(a, b) && implies(b, a);
    solver_.set_timeout(saved);
    return same;
  }

  // An earlier stage equal to the fresh one at id, which is then dropped.
  std::optional<std::size_t> duplicate_of(std::size_t id) {
    for (std::size_t j = 0; j < id; ++j)
      if (stages_[j].dead == stages_[id].dead && equivalent(j, id)) return j;
    return std::nullopt;
  }

  std::size_t commit_child(std::size_t parent, std::size_t child, std::deque<std::size_t>& work) {
    if (auto j = duplicate_of(child)) {
      log("stage " + std::to_string(child) + " coincides with stage " + std::to_string(*j));
      drop_last();
      child = *j;
    } else {
      work.push_back(child);
      if (stages_.size() > options_.max_stages)
        throw BudgetExceeded("more than " + std::to_string(options_.max_stages) + " stages");
    }
    auto& kids = stages_[parent].children;
    if (std::find(kids.begin(), kids.end(), child) == kids.end()) kids.push_back(child);
    return child;
  }

  struct BudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
  };

  std::variant<StageGraph, ConstructionFailure> build() {
    recipes_.clear();
    stages_.clear();
    std::size_t root = add(Recipe{});
    stages_[root].dead = dead_of(root);
    std::deque<std::size_t> work{root};
    try {
      while (!work.empty()) {
        std::size_t id = work.front();
        work.pop_front();
        if (auto failed = process(id, work)) return *failed;
      }
    } catch (const BudgetExceeded& e) {
      return failure(ConstructionFailure::Kind::Budget, e.what(), std::nullopt, std::nullopt);
    }
    return graph();
  }

  std::optional<ConstructionFailure> process(std::size_t id, std::deque<std::size_t>& work) {
    Stage& stage = stages_[id];
    for (std::size_t i = 0; i < property_.posts.size(); ++i) {
      SolverVerdict v = refined(id, nnf(!property_.posts[i]));
      if (v.unknown()) throw InconclusiveError("terminal check of stage " + std::to_string(id) + ": " + v.reason);
      if (v.unsat()) {
        stages_[id].terminal_post = i;
        log("stage " + std::to_string(id) + " is terminal");
        return std::nullopt;
      }
    }
    TransitionSet alive;
    for (const auto& t : system_.transitions())
      if (!stage.dead.count(t.name)) alive.insert(t.name);
    if (alive.empty()) {
      SolverVerdict v = refined(id, Formula::truth());
      std::optional<Configuration> w;
      if (v.sat()) w = configuration_of(system_, v.model);
      return failure(ConstructionFailure::Kind::Stuck, "every transition is dead but no postcondition holds", id, w);
    }

    EventDeadResult ed = event_dead(system_, alive, options_.global_diseqdead, solver_);
    if (!ed.killed.empty()) return reduce(id, ed, work);

    auto split = try_split(system_, formula(id), alive, options_.split, solver_);
    if (auto* f = std::get_if<SplitFailure>(&split))
      return failure(ConstructionFailure::Kind::Stuck, "no eventually dead transitions and no split: " + f->reason,
                     id, f->witness);
    auto& parts = std::get<SplitResult>(split).parts;
    StageCertificate cert;
    cert.kind = CertificateKind::SplitCover;
    for (const auto& p : parts) {
      cert.witnesses.push_back(p.certificate);
      cert.killed.insert(p.certificate.killed.begin(), p.certificate.killed.end());
    }
    stages_[id].certificate = cert;
    log("stage " + std::to_string(id) + " splits into " + std::to_string(parts.size()) + " parts");
    std::vector<std::size_t> kids;
    for (const auto& p : parts) {
      Recipe r;
      r.kind = Recipe::Kind::Part;
      r.parent = id;
      r.part = DownwardSet{p.certificate.witnesses};
      std::size_t child = add(std::move(r));
      stages_[child].dead = dead_of(child);
      if (!subset(stages_[id].dead, stages_[child].dead) || stages_[child].dead == stages_[id].dead)
        throw std::logic_error("split part without dead growth");
      kids.push_back(commit_child(id, child, work));
    }
    // Witnesses follow the child order, one per child.
    if (kids.size() != stages_[id].children.size()) {
      auto& c = stages_[id].certificate;
      std::vector<DeathCertificate> ws;
      for (std::size_t k : stages_[id].children)
        ws.push_back(c.witnesses[std::find(kids.begin(), kids.end(), k) - kids.begin()]);
      c.witnesses = ws;
    }
    return std::nullopt;
  }

  std::optional<ConstructionFailure> reduce(std::size_t id, const EventDeadResult& ed, std::deque<std::size_t>& work) {
    StageCertificate cert;
    cert.killed = ed.killed;
    if (auto* r = std::get_if<RankingCertificate>(&ed.certificate)) {
      cert.kind = CertificateKind::Ranking;
      cert.coefficients = r->coefficients;
      cert.k = r->bound_k;
    } else {
      const auto& l = std::get<LayerCertificate>(ed.certificate);
      cert.kind = CertificateKind::Layer;
      cert.coefficients = l.coefficients;
      cert.k = Int(1);
    }
    stages_[id].certificate = cert;
    log("stage " + std::to_string(id) + ": " + to_string(cert.kind) + " kills " + join(ed.killed));

    const TransitionSet parent_dead = stages_[id].dead;
    std::optional<std::pair<Overapprox, TransitionSet>> growing;
    std::optional<std::pair<Overapprox, TransitionSet>> chosen;
    for (const Overapprox& mode : options_.ladder) {
      std::size_t child = 0;
      try {
        child = candidate(id, ed.killed, mode);
      } catch (const ExactComputationTooLarge& e) {
        log(std::string("exact dead set skipped: ") + e.what());
        continue;
      }
      TransitionSet dead = stages_[child].dead;
      drop_last();
      log("  mode " + mode.to_string() + ": dead " + join(dead));
      if (subset(ed.killed, dead)) {
        chosen.emplace(mode, dead);
        break;
      }
      if (subset(parent_dead, dead) && dead != parent_dead) growing.emplace(mode, dead);
    }
    if (!chosen) chosen = growing;
    if (!chosen)
      return failure(ConstructionFailure::Kind::Stuck,
                     "no overapproximation of the stage after " + join(ed.killed) + " dies grows the dead set", id,
                     std::nullopt);
    std::size_t child = candidate(id, ed.killed, chosen->first);
    stages_[child].dead = chosen->second;
    child = commit_child(id, child, work);
    modes_[{id, child}] = chosen->first;
    return std::nullopt;
  }

  std::size_t candidate(std::size_t id, const TransitionSet& killed, Overapprox mode) {
    Recipe r;
    r.kind = Recipe::Kind::Reduce;
    r.parent = id;
    r.killed = killed;
    r.mode = mode;
    if (mode.exact) r.exact = dead_exact(system_, killed, options_.exact_budget);
    std::size_t child = add(std::move(r));
    stages_[child].dead = dead_of(child);
    return child;
  }

  std::string summary(std::size_t id) {
    std::string out;
    for (const auto& q : system_.states()) {
      SolverVerdict v = solver_.check(rename_bound_apart(formula(id) && (LinearTerm::var(q) >= LinearTerm(1))));
      if (v.unsat()) out += (out.empty() ? "" : ", ") + q + " == 0";
    }
    return out.empty() ? "true" : out;
  }

  StageGraph graph() {
    StageGraph g;
    g.system_name = system_.name();
    g.fingerprint = system_.fingerprint();
    g.property = property_;
    g.global_diseqdead = options_.global_diseqdead;
    g.tool_version = tool_version;
    g.roots = {0};
    g.overapprox = modes_;
    for (std::size_t id = 0; id < stages_.size(); ++id) {
      Stage s = stages_[id];
      s.formula = formula(id);
      s.summary = summary(id);
      g.stages.emplace(id, std::move(s));
    }
    return g;
  }

  ConstructionFailure failure(ConstructionFailure::Kind kind, const std::string& reason,
                              std::optional<std::size_t> stuck, std::optional<Configuration> witness) {
    ConstructionFailure f;
    f.kind = kind;
    f.reason = reason;
    f.stuck_stage = stuck;
    f.witness = std::move(witness);
    try {
      if (stuck) f.stuck_formula = formula(*stuck);
      StageGraph g;
      g.system_name = system_.name();
      g.fingerprint = system_.fingerprint();
      g.property = property_;
      g.global_diseqdead = options_.global_diseqdead;
      g.tool_version = tool_version;
      if (!stages_.empty()) g.roots = {0};
      g.overapprox = modes_;
      for (std::size_t id = 0; id < stages_.size(); ++id) {
        Stage s = stages_[id];
        s.formula = formula(id);
        g.stages.emplace(id, std::move(s));
      }
      f.partial = std::move(g);
    } catch (const std::exception&) {
      // the diagnosis stands without a partial graph
    }
    return f;
  }
};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::variant<StageGraph, ConstructionFailure> construct_stage_graph(const ReplicatedSystem& system,
                                                                    const StableTerminationProperty& property,
                                                                    const EngineOptions& options, Solver& solver) {
  validate_property(system, property);
  if (options.ladder.empty()) throw PreconditionError("empty overapproximation ladder");
  Builder b(system, property, options, solver);
  return b.run();
}

std::string to_dot(const ReplicatedSystem& system, const StageGraph& graph) {
  (void)system;
  std::ostringstream out;
  out << "digraph stages {\n  node [shape=box, fontname=\"monospace\"];\n";
  for (const auto& [id, s] : graph.stages) {
    std::string label = "S" + std::to_string(id) + ": " + (s.summary.empty() ? "?" : s.summary);
    label += "\\nDead: " + join(s.dead);
    if (s.terminal_post) {
      label += "\\nterminal (post " + std::to_string(*s.terminal_post) + ")";
    } else {
      label += "\\n" + std::string(to_string(s.certificate.kind));
      if (!s.certificate.coefficients.empty()) {
        std::string f;
        for (const auto& [q, a] : s.certificate.coefficients)
          if (a != 0) f += (f.empty() ? "" : " + ") + (a == 1 ? q : a.str() + "*" + q);
        label += " " + (f.empty() ? "0" : f);
      }
      label += " kills " + join(s.certificate.killed);
    }
    out << "  s" << id << " [label=\"" << escape(label) << "\"";
    if (s.terminal_post) out << ", peripheries=2";
    out << "];\n";
  }
  for (const auto& [id, s] : graph.stages)
    for (std::size_t c : s.children) {
      out << "  s" << id << " -> s" << c;
      auto m = graph.overapprox.find({id, c});
      if (m != graph.overapprox.end()) out << " [label=\"" << m->second.to_string() << "\"]";
      out << ";\n";
    }
  out << "}\n";
  return out.str();
}

}  // namespace sg
