#pragma once

#include <string>

#include "protoobf/format_model.hpp"

namespace protoobf {

// Parses spec text into a validated FormatGraph. Throws ProtoError with rule
// "dsl.syntax" (line:column included) or "dsl.semantic"; validation failures
// surface as "dsl.validate" with the full report in the message.
FormatGraph parse_spec(const std::string& text);

// Canonical form: nodes in DFS order, fixed attribute order, lowercase
// keywords, hex byte literals. parse_spec(print_spec(g)) is structurally g.
std::string print_spec(const FormatGraph& graph);

// SHA-256 of the canonical spec text.
Bytes spec_hash(const FormatGraph& graph);

}  // namespace protoobf
