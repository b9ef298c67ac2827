// Command-line frontend: verify, check, oracle, simulate.

#include "CLI11.hpp"

#include "stagegraph/checker.hpp"
#include "stagegraph/engine.hpp"
#include "stagegraph/io.hpp"
#include "stagegraph/oracle.hpp"

#include <iostream>

using namespace sg;

namespace {

enum Exit { Ok = 0, Failed = 1, Usage = 2, Resource = 3 };

void configure_solver(const std::string& command, double timeout) {
  SolverOptions o = default_solver_options();
  if (!command.empty()) o.command = command;
  if (timeout > 0) o.timeout_seconds = timeout;
  set_default_solver_options(o);
}

void print_report(const CheckReport& r, std::ostream& out) {
  out << "verdict: " << to_string(r.verdict) << "\n";
  for (const auto& o : r.obligations) {
    if (o.outcome == Obligation::Outcome::Holds) continue;
    out << "  " << to_string(o.outcome) << " " << o.name;
    if (o.stage) out << " at stage " << *o.stage;
    if (!o.detail.empty()) out << ": " << o.detail;
    out << "\n";
  }
}

int exit_for(const CheckReport& r) {
  switch (r.verdict) {
    case CheckReport::Verdict::Accept: return Ok;
    case CheckReport::Verdict::Reject: return Failed;
    case CheckReport::Verdict::Inconclusive: return Resource;
  }
  return Resource;
}

struct VerifyArgs {
  std::string file, property, overapprox = "auto", solver, out, dot;
  double timeout = 0;
  std::size_t max_splits = 16, max_stages = 256;
  bool global_diseqdead = false, verbose = false;
};

int verify(const VerifyArgs& a) {
  configure_solver(a.solver, a.timeout);
  SystemFile file = load_system(a.file);
  const auto& property = find_property(file, a.property);
  EngineOptions o;
  if (a.overapprox != "auto") o.ladder = {Overapprox::parse(a.overapprox)};
  o.split.max_parts = a.max_splits;
  o.max_stages = a.max_stages;
  o.global_diseqdead = a.global_diseqdead;
  if (a.verbose) o.log = [](const std::string& s) { std::cerr << s << "\n"; };

  auto result = construct_stage_graph(file.system, property, o);
  if (auto* f = std::get_if<ConstructionFailure>(&result)) {
    std::cerr << "construction failed: " << f->reason << "\n";
    if (f->stuck_stage) std::cerr << "stuck at stage " << *f->stuck_stage << "\n";
    if (f->witness) std::cerr << "witness configuration: " << f->witness->to_string() << "\n";
    if (!a.out.empty() && !f->partial.stages.empty()) write_file(a.out, emit_graph(file.system, f->partial));
    return f->kind == ConstructionFailure::Kind::Stuck ? Failed : Resource;
  }
  const StageGraph& g = std::get<StageGraph>(result);
  CheckReport report = check_stage_graph(file.system, g);
  if (report.verdict != CheckReport::Verdict::Accept) {
    std::cerr << "the constructed graph did not pass the checker\n";
    print_report(report, std::cerr);
    return exit_for(report);
  }
  std::string json = emit_graph(file.system, g);
  if (a.out.empty())
    std::cout << json;
  else
    write_file(a.out, json);
  if (!a.dot.empty()) write_file(a.dot, to_dot(file.system, g));
  std::cerr << property.name << ": verified with " << g.stages.size() << " stages\n";
  return Ok;
}

int check(const std::string& system_path, const std::string& graph_path, const std::string& solver,
          const std::string& report_path) {
  configure_solver(solver, 0);
  SystemFile file = load_system(system_path);
  StageGraph g = parse_graph(file.system, read_file(graph_path));
  CheckReport r = check_stage_graph(file.system, g);
  print_report(r, std::cout);
  if (!report_path.empty()) write_file(report_path, emit_report(r));
  return exit_for(r);
}

int oracle(const std::string& path, const std::string& config, const std::string& property_name) {
  SystemFile file = load_system(path);
  const auto& property = find_property(file, property_name);
  Configuration c = parse_config(file.system, config);
  std::string warning;
  bool holds = check_stable_termination_at(file.system, property, c, &warning);
  if (!warning.empty()) std::cerr << "warning: " << warning << "\n";
  std::cout << property.name << " at " << c.to_string() << ": " << (holds ? "holds" : "refuted") << "\n";
  return holds ? Ok : Failed;
}

int simulate_cmd(const std::string& path, const std::string& config, std::size_t steps, std::uint64_t seed) {
  SystemFile file = load_system(path);
  Configuration c = parse_config(file.system, config);
  std::cout << emit_trace(file.system, simulate(file.system, c, steps, seed));
  return Ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stage-graph verification of stable termination for replicated systems"};
  app.require_subcommand(1);

  VerifyArgs va;
  auto* v = app.add_subcommand("verify", "construct and check a stage graph");
  v->add_option("FILE", va.file, "system file")->required();
  v->add_option("--property", va.property, "property name");
  v->add_option("--overapprox", va.overapprox, "auto, a level such as 0 or 1, or exact");
  v->add_option("--solver", va.solver, "SMT solver command");
  v->add_option("--timeout", va.timeout, "per-query timeout in seconds");
  v->add_option("--max-splits", va.max_splits, "maximal number of parts per split");
  v->add_option("--max-stages", va.max_stages, "maximal number of stages");
  v->add_option("--out", va.out, "write the graph here instead of stdout");
  v->add_option("--dot", va.dot, "write a Graphviz rendering here");
  v->add_flag("--global-diseqdead", va.global_diseqdead, "layer condition over all transitions");
  v->add_flag("--verbose", va.verbose, "log construction steps to stderr");

  std::string c_file, c_graph, c_solver, c_report;
  auto* c = app.add_subcommand("check", "validate a stage graph");
  c->add_option("FILE", c_file, "system file")->required();
  c->add_option("GRAPH", c_graph, "stage-graph file")->required();
  c->add_option("--solver", c_solver, "SMT solver command");
  c->add_option("--report", c_report, "write the JSON report here");

  std::string o_file, o_config, o_property;
  auto* o = app.add_subcommand("oracle", "decide the property at one configuration by enumeration");
  o->add_option("FILE", o_file, "system file")->required();
  o->add_option("--config", o_config, "configuration, e.g. AY:2,AN:1")->required();
  o->add_option("--property", o_property, "property name");

  std::string s_file, s_config;
  std::size_t s_steps = 0;
  std::uint64_t s_seed = 0;
  auto* s = app.add_subcommand("simulate", "random run, one JSON line per step");
  s->add_option("FILE", s_file, "system file")->required();
  s->add_option("--config", s_config, "initial configuration")->required();
  s->add_option("--steps", s_steps, "number of steps")->required();
  s->add_option("--seed", s_seed, "random seed")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? Ok : Usage;
  }

  try {
    if (*v) return verify(va);
    if (*c) return check(c_file, c_graph, c_solver, c_report);
    if (*o) return oracle(o_file, o_config, o_property);
    if (*s) return simulate_cmd(s_file, s_config, s_steps, s_seed);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return Usage;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return Usage;
  } catch (const InconclusiveError& e) {
    std::cerr << "solver: " << e.what() << "\n";
    return Resource;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return Resource;
  }
  return Usage;
}
