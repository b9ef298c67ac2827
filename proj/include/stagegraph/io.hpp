#pragma once

// File formats: system files with their properties, stage-graph files,
// checker reports, simulation traces and configuration strings.

#include "stagegraph/checker.hpp"
#include "stagegraph/engine.hpp"
#include "stagegraph/oracle.hpp"

#include <string>
#include <vector>

namespace sg {

struct SystemFile {
  ReplicatedSystem system;
  std::vector<StableTerminationProperty> properties;
};

/// Throws InputError naming the JSON path (and line for syntax errors).
SystemFile parse_system(const std::string& text);
SystemFile load_system(const std::string& path);
std::string emit_system(const SystemFile& file);

/// By name; the only property when name is empty and there is exactly one.
/// Throws InputError otherwise.
const StableTerminationProperty& find_property(const SystemFile& file, const std::string& name);

std::string emit_graph(const ReplicatedSystem& system, const StageGraph& graph);
/// Throws InputError on schema violations and when the fingerprint does
/// not match the system.
StageGraph parse_graph(const ReplicatedSystem& system, const std::string& text);

/// Same stages, roots, certificates, metadata and formulas up to syntax.
bool same_graph(const StageGraph& a, const StageGraph& b);

/// "AY:2,AN:1"; omitted states are 0. Throws InputError.
Configuration parse_config(const ReplicatedSystem& system, const std::string& text);

std::string emit_report(const CheckReport& report);
/// One JSON object per line: step, transition (null for the start or a
/// silent step) and configuration.
std::string emit_trace(const ReplicatedSystem& system, const std::vector<TraceStep>& trace);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace sg
