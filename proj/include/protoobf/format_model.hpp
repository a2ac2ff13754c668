#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "protoobf/bytes.hpp"

namespace protoobf {

enum class NodeType { Terminal, Sequence, Optional, Repetition, Tabular };

enum class BoundaryKind { Fixed, Delimited, Length, Counter, End, Delegated };

struct Boundary {
  BoundaryKind kind = BoundaryKind::End;
  std::size_t size = 0;  // Fixed
  Bytes delim;           // Delimited
  std::string ref;       // Length / Counter

  static Boundary fixed(std::size_t n) { return {BoundaryKind::Fixed, n, {}, {}}; }
  static Boundary delimited(Bytes d) { return {BoundaryKind::Delimited, 0, std::move(d), {}}; }
  static Boundary length(std::string r) { return {BoundaryKind::Length, 0, {}, std::move(r)}; }
  static Boundary counter(std::string r) { return {BoundaryKind::Counter, 0, {}, std::move(r)}; }
  static Boundary end() { return {BoundaryKind::End, 0, {}, {}}; }
  static Boundary delegated() { return {BoundaryKind::Delegated, 0, {}, {}}; }
};

enum class DerivationKind { None, LengthOf, CountOf };

struct Derivation {
  DerivationKind kind = DerivationKind::None;
  std::string ref;
};

struct PresenceCondition {
  std::string ref;  // a Terminal (or value-carrying) node earlier in DFS order
  Bytes expected;
};

// Obfuscation annotations. Source graphs carry Role::Plain everywhere; the
// transform catalog rewrites graphs into annotated form.
enum class NodeRole {
  Plain,
  SplitGroup,  // Sequence encoding one logical value across tagged parts
  SplitPart,   // value-carrying child of a SplitGroup
  Pad,         // random filler terminal, discarded at parse
  TabGroup,    // Sequence of per-part Tabulars replacing one Tabular
  TabPart,     // Tabular over one part of the original element sequence
  RepGroup,    // Sequence of per-part element runs replacing one Repetition
  RepPart,     // one part run inside a RepGroup
};

enum class SplitKind { Add, Sub, Xor, Cat };

enum class ConstOp { Add, Sub, Xor };

struct ValueOp {
  ConstOp op;
  Bytes constant;  // same width as the field
};

struct FormatNode {
  std::string name;
  NodeType type = NodeType::Terminal;
  Boundary boundary;
  std::vector<FormatNode> children;
  Derivation derivation;                     // Terminal / SplitGroup carriers
  std::optional<PresenceCondition> presence;  // Optional only

  // Transform annotations.
  NodeRole role = NodeRole::Plain;
  std::string origin;            // original node this subtree stands for
  SplitKind split_kind = SplitKind::Add;  // SplitGroup
  std::size_t cat_offset = 0;             // SplitGroup with Cat
  int part_index = -1;                    // SplitPart (1/2), TabPart/RepPart (0-based)
  std::vector<ValueOp> value_ops;         // applied value-to-wire, in order
  int mirror = 0;                         // ReadFromEnd application count
};

using NodePath = std::vector<std::size_t>;

struct FormatGraph {
  std::string name;
  FormatNode root;
  std::map<std::string, NodePath> index;  // node name -> path
  int gensym_counter = 0;                 // fresh-name source for rewrites

  void rebuild_index();
  const FormatNode* find(const std::string& node_name) const;
  const FormatNode& at(const NodePath& path) const;
  FormatNode& at_mut(const NodePath& path);
  std::optional<NodePath> parent_of(const NodePath& path) const;
};

struct ValidationEntry {
  enum class Severity { Error, Warning };
  Severity severity;
  std::string node;
  std::string rule;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationEntry> entries;
  bool ok() const {
    for (const auto& e : entries)
      if (e.severity == ValidationEntry::Severity::Error) return false;
    return true;
  }
  std::string summary() const;
};

ValidationReport validate(const FormatGraph& graph);

// Pre-order depth-first enumeration of all node paths.
std::vector<NodePath> dfs_order(const FormatGraph& graph);

// True when the node at `a` comes before the node at `b` in pre-order DFS.
bool dfs_precedes(const NodePath& a, const NodePath& b);

// Static serialized width of a subtree, when it is independent of any message
// content (fixed terminals, delegated sequences of static children, ...).
std::optional<std::size_t> static_size(const FormatNode& node);

// True when the node (Terminal or SplitGroup) yields a logical value at parse.
inline bool is_value_carrier(const FormatNode& n) {
  return n.type == NodeType::Terminal || n.role == NodeRole::SplitGroup;
}

const char* node_type_name(NodeType t);
const char* boundary_kind_name(BoundaryKind k);

// Structural equality over all fields, annotations included.
bool node_equal(const FormatNode& a, const FormatNode& b);
inline bool graph_equal(const FormatGraph& a, const FormatGraph& b) {
  return a.name == b.name && node_equal(a.root, b.root);
}

}  // namespace protoobf
