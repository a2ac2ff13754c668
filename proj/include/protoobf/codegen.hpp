#pragma once

#include <string>
#include <utility>
#include <vector>

#include "protoobf/obfuscator.hpp"

namespace protoobf {

// A standalone generated serialization library: accessor header, serializer/
// parser translation unit, script-driven CLI driver, and a manifest recording
// every emitted function, type definition, and call edge.
struct SourceBundle {
  std::string protocol;
  std::string dir_name;  // "<protocol>_<planhash8>"
  std::vector<std::pair<std::string, std::string>> files;  // name -> text
  std::vector<std::string> functions;
  std::vector<std::string> type_definitions;
  std::vector<std::pair<std::string, std::string>> call_edges;  // caller -> callee
};

struct PotencyMetrics {
  std::size_t lines = 0;  // non-blank, non-comment lines across source files
  std::size_t type_definitions = 0;
  std::size_t call_graph_size = 0;   // emitted functions
  std::size_t call_graph_depth = 0;  // longest call chain
};

// Emits the bundle for a plan. The generated library stores aggregated field
// representations (setters apply value transforms at store time) and is
// byte-compatible with the interpretive wire engine for any message seed.
// Accessor prototypes depend only on the original graph, never on the plan.
SourceBundle generate(const ObfuscationPlan& plan, const FormatGraph& original);

PotencyMetrics measure(const SourceBundle& bundle);

// Writes bundle files under <out_dir>/<bundle.dir_name>/; returns that path.
std::string write_bundle(const SourceBundle& bundle, const std::string& out_dir);

}  // namespace protoobf
