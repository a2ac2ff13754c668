#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "protoobf/format_model.hpp"

namespace protoobf {

// Concrete instance of a format graph node. The payload variant follows the
// node type: Terminal -> value, Sequence -> children, Optional -> present +
// single child, Repetition/Tabular -> elements.
struct AstNode {
  NodePath graph_ref;            // path into the (original) graph
  Bytes value;                   // Terminal
  bool present = false;          // Optional
  std::vector<AstNode> children;  // Sequence children, Optional child (when
                                  // present), Repetition/Tabular elements
};

struct MessageAst {
  const FormatGraph* graph = nullptr;
  AstNode root;
};

bool ast_equal(const MessageAst& a, const MessageAst& b);

// "name" plus element indices for repeated ancestors, written Item[2].Addr.
// Segments name repeated ancestors on the path from root to the target; the
// final segment names the target itself.
struct FieldSelector {
  struct Segment {
    std::string name;
    std::size_t index = 0;
    bool has_index = false;
  };
  std::vector<Segment> segments;

  static FieldSelector parse(const std::string& text);
  std::string str() const;
};

MessageAst new_ast(const FormatGraph& graph);

void set_value(MessageAst& ast, const FieldSelector& sel, const Bytes& value);
Bytes get_value(const MessageAst& ast, const FieldSelector& sel);

// Appends a skeleton element to a Repetition/Tabular; returns its index.
std::size_t push_element(MessageAst& ast, const FieldSelector& sel);
void set_present(MessageAst& ast, const FieldSelector& sel, bool present);

// Deterministic random instance; always serializable at obfuscation level 0.
MessageAst random_ast(const FormatGraph& graph, std::uint64_t rng_seed);

// AST JSON form (external interface): {"node":..,"value":"<hex>"} /
// {"node":..,"children":[..]} / {"node":..,"present":..,"child":..} /
// {"node":..,"elements":[..]}.
std::string ast_to_json(const MessageAst& ast);
MessageAst ast_from_json(const FormatGraph& graph, const std::string& json_text);

// Line-based construction script: one command per line in DFS order.
//   V <name> <hex|->   terminal value (- for empty or derived)
//   P <name> 0|1       optional presence
//   N <name> <count>   repetition/tabular element count
// The same script drives the generated accessors, whatever the plan.
std::string ast_to_script(const MessageAst& ast);
MessageAst ast_from_script(const FormatGraph& graph, const std::string& script);

}  // namespace protoobf
