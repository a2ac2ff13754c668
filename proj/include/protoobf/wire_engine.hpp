#pragma once

#include <cstdint>
#include <string>

#include "protoobf/message_ast.hpp"
#include "protoobf/obfuscator.hpp"

namespace protoobf {

using WireMessage = Bytes;

// Obfuscating serializer: walks the plan's transformed graph depth-first,
// pulling logical values out of `ast` (an instance of the ORIGINAL graph),
// applying value hooks (const ops, splits, pads) on the way down and region
// hooks (mirroring) on the way up. Two passes: the first measures regions and
// element counts so derived length/count fields can be filled in the second.
// Deterministic for a fixed msg_seed.
WireMessage serialize(const MessageAst& ast, const ObfuscationPlan& plan,
                      std::uint64_t msg_seed);

// Inverse walk over the transformed graph with region-scoped readers; returns
// a de-obfuscated AST over the original graph. Derived fields stay empty (they
// are transport artifacts, recomputed on send).
MessageAst parse(const WireMessage& wire, const ObfuscationPlan& plan,
                 const FormatGraph& graph);

struct RoundtripReport {
  bool ok = true;
  std::size_t trials = 0;
  std::size_t failed_trial = 0;
  std::string detail;  // first counterexample: AST JSON + wire hex, or the error
};

RoundtripReport roundtrip_check(const FormatGraph& graph, const ObfuscationPlan& plan,
                                std::size_t trials, std::uint64_t seed);

}  // namespace protoobf
