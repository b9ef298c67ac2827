#include "stagegraph/io.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

namespace sg {

using nlohmann::json;

namespace {

const char* const graph_format = "stagegraph/1";

[[noreturn]] void schema(const std::string& path, const std::string& what) {
  throw InputError(path + ": " + what);
}

const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) schema(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) schema(path, "missing field '" + key + "'");
  return *it;
}

std::string string_at(const json& j, const std::string& path) {
  if (!j.is_string()) schema(path, "expected a string");
  return j.get<std::string>();
}

json int_json(const Int& v) {
  if (v >= std::numeric_limits<std::int64_t>::min() && v <= std::numeric_limits<std::int64_t>::max())
    return static_cast<std::int64_t>(v);
  return v.str();
}

Int int_at(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return Int(j.get<std::uint64_t>());
  if (j.is_number_integer()) return Int(j.get<std::int64_t>());
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    bool ok = !s.empty() && std::all_of(s.begin() + (s[0] == '-' ? 1 : 0), s.end(), ::isdigit) && s != "-";
    if (ok) return Int(s);
  }
  schema(path, "expected an integer");
}

std::size_t index_at(const json& j, const std::string& path) {
  if (!j.is_number_unsigned()) schema(path, "expected a nonnegative integer");
  return j.get<std::size_t>();
}

std::vector<std::string> strings_at(const json& j, const std::string& path) {
  if (!j.is_array()) schema(path, "expected an array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(string_at(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

Formula formula_at(const json& j, const std::string& path) {
  std::string text = string_at(j, path);
  try {
    return parse_formula(text);
  } catch (const InputError& e) {
    schema(path, e.what());
  }
}

json multiset_json(const Multiset& m) {
  json out = json::object();
  for (const auto& [q, n] : m.entries()) out[q] = int_json(n);
  return out;
}

Multiset multiset_at(const json& j, const std::string& path) {
  if (!j.is_object()) schema(path, "expected an object of counts");
  Multiset m;
  for (auto it = j.begin(); it != j.end(); ++it) {
    Int n = int_at(it.value(), path + "." + it.key());
    if (n < 0) schema(path + "." + it.key(), "negative count");
    m.set(it.key(), n);
  }
  return m;
}

json property_json(const StableTerminationProperty& p) {
  json posts = json::array();
  for (const auto& f : p.posts) posts.push_back(f.to_string());
  return {{"name", p.name}, {"pre", p.pre.to_string()}, {"post", posts}};
}

StableTerminationProperty property_at(const json& j, const std::string& path) {
  StableTerminationProperty p;
  p.name = string_at(field(j, "name", path), path + ".name");
  p.pre = formula_at(field(j, "pre", path), path + ".pre");
  const json& posts = field(j, "post", path);
  if (!posts.is_array()) schema(path + ".post", "expected an array of formulas");
  for (std::size_t i = 0; i < posts.size(); ++i)
    p.posts.push_back(formula_at(posts[i], path + ".post[" + std::to_string(i) + "]"));
  return p;
}

json omega_json(const ReplicatedSystem& system, const OmegaConfiguration& w) {
  json out = json::object();
  for (const auto& q : system.states()) {
    auto v = w.at(q);
    out[q] = v ? int_json(*v) : json("omega");
  }
  return out;
}

OmegaConfiguration omega_at(const ReplicatedSystem& system, const json& j, const std::string& path) {
  if (!j.is_object()) schema(path, "expected an object");
  OmegaConfiguration w;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!system.has_state(it.key())) schema(path, "unknown state '" + it.key() + "'");
    if (it.value() == "omega") continue;
    Int v = int_at(it.value(), path + "." + it.key());
    if (v < 0) schema(path + "." + it.key(), "negative component");
    w.set(it.key(), v);
  }
  return w;
}

json transitions_json(const TransitionSet& s) { return json(std::vector<std::string>(s.begin(), s.end())); }

TransitionSet transitions_at(const ReplicatedSystem& system, const json& j, const std::string& path) {
  TransitionSet out;
  for (const auto& name : strings_at(j, path)) {
    try {
      system.transition(name);
    } catch (const std::exception&) {
      schema(path, "unknown transition '" + name + "'");
    }
    out.insert(name);
  }
  return out;
}

json certificate_json(const ReplicatedSystem& system, const StageCertificate& c) {
  json coeffs = json::object();
  for (const auto& [q, a] : c.coefficients) coeffs[q] = int_json(a);
  json ws = json::array();
  for (const auto& d : c.witnesses) {
    json elems = json::array();
    for (const auto& w : d.witnesses) elems.push_back(omega_json(system, w));
    ws.push_back({{"killed", transitions_json(d.killed)}, {"witnesses", elems}});
  }
  return {{"kind", to_string(c.kind)},
          {"coefficients", coeffs},
          {"k", c.k ? int_json(*c.k) : json(nullptr)},
          {"killed", transitions_json(c.killed)},
          {"witnesses", ws}};
}

StageCertificate certificate_at(const ReplicatedSystem& system, const json& j, const std::string& path) {
  StageCertificate c;
  try {
    c.kind = parse_certificate_kind(string_at(field(j, "kind", path), path + ".kind"));
  } catch (const InputError& e) {
    schema(path + ".kind", e.what());
  }
  if (j.contains("coefficients")) {
    const json& a = j["coefficients"];
    if (!a.is_object()) schema(path + ".coefficients", "expected an object");
    for (auto it = a.begin(); it != a.end(); ++it) {
      if (!system.has_state(it.key())) schema(path + ".coefficients", "unknown state '" + it.key() + "'");
      c.coefficients[it.key()] = int_at(it.value(), path + ".coefficients." + it.key());
    }
  }
  if (j.contains("k") && !j["k"].is_null()) c.k = int_at(j["k"], path + ".k");
  if (j.contains("killed")) c.killed = transitions_at(system, j["killed"], path + ".killed");
  if (j.contains("witnesses")) {
    const json& ws = j["witnesses"];
    if (!ws.is_array()) schema(path + ".witnesses", "expected an array");
    for (std::size_t i = 0; i < ws.size(); ++i) {
      std::string p = path + ".witnesses[" + std::to_string(i) + "]";
      DeathCertificate d;
      d.killed = transitions_at(system, field(ws[i], "killed", p), p + ".killed");
      const json& elems = field(ws[i], "witnesses", p);
      if (!elems.is_array()) schema(p + ".witnesses", "expected an array");
      for (std::size_t k = 0; k < elems.size(); ++k)
        d.witnesses.push_back(omega_at(system, elems[k], p + ".witnesses[" + std::to_string(k) + "]"));
      c.witnesses.push_back(std::move(d));
    }
  }
  return c;
}

}  // namespace

SystemFile parse_system(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
  std::string name = string_at(field(j, "name", "$"), "$.name");
  std::vector<std::string> states = strings_at(field(j, "states", "$"), "$.states");
  const json& ts = field(j, "transitions", "$");
  if (!ts.is_array()) schema("$.transitions", "expected an array");
  std::vector<Transition> transitions;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    std::string p = "$.transitions[" + std::to_string(i) + "]";
    Transition t;
    t.name = string_at(field(ts[i], "name", p), p + ".name");
    t.pre = multiset_at(field(ts[i], "pre", p), p + ".pre");
    t.post = multiset_at(field(ts[i], "post", p), p + ".post");
    if (ts[i].contains("identity")) {
      if (!ts[i]["identity"].is_boolean()) schema(p + ".identity", "expected a boolean");
      t.identity = ts[i]["identity"].get<bool>();
    }
    transitions.push_back(std::move(t));
  }
  std::optional<ReplicatedSystem> system;
  try {
    system.emplace(name, states, transitions);
  } catch (const InputError& e) {
    throw InputError(std::string("$.transitions: ") + e.what());
  }
  SystemFile file{*system, {}};
  if (j.contains("properties")) {
    const json& ps = j["properties"];
    if (!ps.is_array()) schema("$.properties", "expected an array");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      std::string p = "$.properties[" + std::to_string(i) + "]";
      StableTerminationProperty prop = property_at(ps[i], p);
      try {
        validate_property(file.system, prop);
      } catch (const InputError& e) {
        schema(p, e.what());
      }
      file.properties.push_back(std::move(prop));
    }
  }
  return file;
}

SystemFile load_system(const std::string& path) { return parse_system(read_file(path)); }

std::string emit_system(const SystemFile& file) {
  json ts = json::array();
  for (const auto& t : file.system.transitions()) {
    json o{{"name", t.name}, {"pre", multiset_json(t.pre)}, {"post", multiset_json(t.post)}};
    if (t.identity) o["identity"] = true;
    ts.push_back(o);
  }
  json ps = json::array();
  for (const auto& p : file.properties) ps.push_back(property_json(p));
  json j{{"name", file.system.name()}, {"states", file.system.states()}, {"transitions", ts}, {"properties", ps}};
  return j.dump(2) + "\n";
}

const StableTerminationProperty& find_property(const SystemFile& file, const std::string& name) {
  if (name.empty()) {
    if (file.properties.size() == 1) return file.properties[0];
    throw InputError("the system file has " + std::to_string(file.properties.size()) +
                     " properties; choose one with --property");
  }
  for (const auto& p : file.properties)
    if (p.name == name) return p;
  throw InputError("no property named '" + name + "'");
}

std::string emit_graph(const ReplicatedSystem& system, const StageGraph& graph) {
  json stages = json::array();
  for (const auto& [id, s] : graph.stages) {
    stages.push_back({{"id", id},
                      {"formula", s.formula.to_string()},
                      {"summary", s.summary},
                      {"dead", transitions_json(s.dead)},
                      {"certificate", certificate_json(system, s.certificate)},
                      {"children", s.children},
                      {"terminal_post", s.terminal_post ? json(*s.terminal_post) : json(nullptr)}});
  }
  json edges = json::array();
  for (const auto& [e, m] : graph.overapprox) edges.push_back({{"from", e.first}, {"to", e.second}, {"mode", m.to_string()}});
  json j{{"format", graph_format},
         {"system", {{"name", graph.system_name}, {"fingerprint", graph.fingerprint}}},
         {"property", property_json(graph.property)},
         {"roots", graph.roots},
         {"stages", stages},
         {"metadata",
          {{"tool_version", graph.tool_version},
           {"diseqdead_scope", graph.global_diseqdead ? "all" : "alive"},
           {"overapprox", edges}}}};
  return j.dump(2) + "\n";
}

StageGraph parse_graph(const ReplicatedSystem& system, const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
  if (string_at(field(j, "format", "$"), "$.format") != graph_format)
    schema("$.format", std::string("expected '") + graph_format + "'");
  StageGraph g;
  const json& sys = field(j, "system", "$");
  g.system_name = string_at(field(sys, "name", "$.system"), "$.system.name");
  g.fingerprint = string_at(field(sys, "fingerprint", "$.system"), "$.system.fingerprint");
  if (g.fingerprint != system.fingerprint())
    throw InputError("$.system.fingerprint: the graph was built for a different system");
  g.property = property_at(field(j, "property", "$"), "$.property");
  const json& roots = field(j, "roots", "$");
  if (!roots.is_array()) schema("$.roots", "expected an array");
  for (std::size_t i = 0; i < roots.size(); ++i) g.roots.push_back(index_at(roots[i], "$.roots[" + std::to_string(i) + "]"));
  const json& stages = field(j, "stages", "$");
  if (!stages.is_array()) schema("$.stages", "expected an array");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    std::string p = "$.stages[" + std::to_string(i) + "]";
    const json& sj = stages[i];
    Stage s;
    s.id = index_at(field(sj, "id", p), p + ".id");
    s.formula = formula_at(field(sj, "formula", p), p + ".formula");
    if (sj.contains("summary")) s.summary = string_at(sj["summary"], p + ".summary");
    s.dead = transitions_at(system, field(sj, "dead", p), p + ".dead");
    s.certificate = certificate_at(system, field(sj, "certificate", p), p + ".certificate");
    const json& kids = field(sj, "children", p);
    if (!kids.is_array()) schema(p + ".children", "expected an array");
    for (std::size_t k = 0; k < kids.size(); ++k)
      s.children.push_back(index_at(kids[k], p + ".children[" + std::to_string(k) + "]"));
    if (sj.contains("terminal_post") && !sj["terminal_post"].is_null())
      s.terminal_post = index_at(sj["terminal_post"], p + ".terminal_post");
    if (g.stages.count(s.id)) schema(p + ".id", "duplicate stage id");
    g.stages.emplace(s.id, std::move(s));
  }
  if (j.contains("metadata")) {
    const json& m = j["metadata"];
    if (m.contains("tool_version")) g.tool_version = string_at(m["tool_version"], "$.metadata.tool_version");
    if (m.contains("diseqdead_scope")) {
      std::string scope = string_at(m["diseqdead_scope"], "$.metadata.diseqdead_scope");
      if (scope != "all" && scope != "alive") schema("$.metadata.diseqdead_scope", "expected 'all' or 'alive'");
      g.global_diseqdead = scope == "all";
    }
    if (m.contains("overapprox")) {
      const json& es = m["overapprox"];
      if (!es.is_array()) schema("$.metadata.overapprox", "expected an array");
      for (std::size_t i = 0; i < es.size(); ++i) {
        std::string p = "$.metadata.overapprox[" + std::to_string(i) + "]";
        std::size_t from = index_at(field(es[i], "from", p), p + ".from");
        std::size_t to = index_at(field(es[i], "to", p), p + ".to");
        try {
          g.overapprox[{from, to}] = Overapprox::parse(string_at(field(es[i], "mode", p), p + ".mode"));
        } catch (const InputError& e) {
          schema(p + ".mode", e.what());
        }
      }
    }
  }
  return g;
}

bool same_graph(const StageGraph& a, const StageGraph& b) {
  auto same_property = [](const StableTerminationProperty& x, const StableTerminationProperty& y) {
    if (x.name != y.name || !x.pre.same_as(y.pre) || x.posts.size() != y.posts.size()) return false;
    for (std::size_t i = 0; i < x.posts.size(); ++i)
      if (!x.posts[i].same_as(y.posts[i])) return false;
    return true;
  };
  auto same_certificate = [](const StageCertificate& x, const StageCertificate& y) {
    if (x.kind != y.kind || x.coefficients != y.coefficients || x.k != y.k || x.killed != y.killed ||
        x.witnesses.size() != y.witnesses.size())
      return false;
    for (std::size_t i = 0; i < x.witnesses.size(); ++i)
      if (x.witnesses[i].killed != y.witnesses[i].killed || x.witnesses[i].witnesses != y.witnesses[i].witnesses)
        return false;
    return true;
  };
  if (a.system_name != b.system_name || a.fingerprint != b.fingerprint || a.roots != b.roots ||
      a.overapprox != b.overapprox || a.global_diseqdead != b.global_diseqdead || a.tool_version != b.tool_version ||
      !same_property(a.property, b.property) || a.stages.size() != b.stages.size())
    return false;
  for (const auto& [id, s] : a.stages) {
    auto it = b.stages.find(id);
    if (it == b.stages.end()) return false;
    const Stage& t = it->second;
    if (s.id != t.id || !s.formula.same_as(t.formula) || s.dead != t.dead || s.children != t.children ||
        s.terminal_post != t.terminal_post || s.summary != t.summary || !same_certificate(s.certificate, t.certificate))
      return false;
  }
  return true;
}

Configuration parse_config(const ReplicatedSystem& system, const std::string& text) {
  Configuration c;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
      return s;
    };
    item = trim(item);
    if (item.empty()) continue;
    auto colon = item.find(':');
    if (colon == std::string::npos) throw InputError("config entry '" + item + "' is not STATE:count");
    std::string state = trim(item.substr(0, colon));
    std::string count = trim(item.substr(colon + 1));
    if (!system.has_state(state)) throw InputError("unknown state '" + state + "' in config");
    if (count.empty() || !std::all_of(count.begin(), count.end(), ::isdigit))
      throw InputError("bad count '" + count + "' for state " + state);
    if (!c[state].is_zero()) throw InputError("state " + state + " given twice in config");
    c.set(state, Int(count));
  }
  return c;
}

std::string emit_report(const CheckReport& report) {
  json obligations = json::array();
  for (const auto& o : report.obligations)
    obligations.push_back({{"obligation", o.name},
                           {"stage", o.stage ? json(*o.stage) : json(nullptr)},
                           {"status", to_string(o.outcome)},
                           {"detail", o.detail}});
  json j{{"verdict", to_string(report.verdict)}, {"obligations", obligations}};
  return j.dump(2) + "\n";
}

std::string emit_trace(const ReplicatedSystem& system, const std::vector<TraceStep>& trace) {
  std::string out;
  for (const auto& s : trace) {
    json conf = json::object();
    for (const auto& q : system.states()) conf[q] = int_json(s.configuration[q]);
    json line{{"step", s.index},
              {"transition", s.transition.empty() ? json(nullptr) : json(s.transition)},
              {"configuration", conf}};
    out += line.dump() + "\n";
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw InputError("cannot write " + path);
}

}  // namespace sg
