#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "protoobf/format_model.hpp"
#include "protoobf/transform_catalog.hpp"

namespace protoobf {

// A replayable obfuscation recipe; both communication endpoints must hold an
// identical plan.
struct ObfuscationPlan {
  int version = 1;
  std::string protocol;
  std::string spec_hash;  // sha-256 of the canonical spec text, lowercase hex
  std::uint64_t seed = 0;
  int per_node_budget = 0;
  std::vector<TransformRecord> records;
  FormatGraph final_graph;  // derived: replay of records over the source graph
};

// One DFS pass per budget unit over a snapshot of the node names at pass
// start; per node, one uniformly chosen applicable transform (skip when the
// applicable set is empty). Pure function of (graph, budget, seed).
ObfuscationPlan obfuscate(const FormatGraph& graph, int per_node_budget,
                          std::uint64_t seed);

// Stable JSON with keys ordered: version, protocol, spec_hash, seed,
// per_node_budget, records. Replay never consults the Prng.
std::string save_plan(const ObfuscationPlan& plan);

// Verifies spec_hash against the given source graph, replays records, and
// reports corrupt records by index.
ObfuscationPlan load_plan(const std::string& text, const FormatGraph& graph);

// sha-256 of save_plan(plan), lowercase hex (codegen bundle naming).
std::string plan_digest(const ObfuscationPlan& plan);

}  // namespace protoobf
