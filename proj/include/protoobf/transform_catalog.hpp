#pragma once

#include <set>
#include <string>
#include <vector>

#include "protoobf/format_model.hpp"

namespace protoobf {

enum class TransformKind {
  SplitAdd,
  SplitSub,
  SplitXor,
  SplitCat,
  ConstAdd,
  ConstSub,
  ConstXor,
  BoundaryChange,
  PadInsert,
  ReadFromEnd,
  TabSplit,
  RepSplit,
  ChildMove,
};

// Serialization hook phase: Down runs before a node's content is produced,
// Up runs on the serialized byte region of the node.
enum class Phase { Down, Up };

Phase phase_of(TransformKind kind);
bool is_aggregation(TransformKind kind);  // content vs ordering
const char* transform_kind_name(TransformKind kind);
TransformKind transform_kind_from_name(const std::string& name);

struct TransformParams {
  std::size_t offset = 0;    // SplitCat: split point, 1..w-1
  Bytes constant;            // Const*: same width as the field
  std::size_t index = 0;     // PadInsert: insertion position
  std::size_t width = 0;     // PadInsert: pad width / BoundaryChange: prefix width
  std::size_t child_i = 0;   // ChildMove
  std::size_t child_j = 0;   // ChildMove
};

struct TransformRecord {
  TransformKind kind;
  NodePath target;  // path in the graph version the record was applied to
  TransformParams params;
  Phase phase;
};

// Kinds whose constraints hold at `path`; deterministic (ordered by kind).
std::set<TransformKind> applicable(const FormatGraph& graph, const NodePath& path);

// Purely structural rewrite; result passes validate(). Throws
// "transform.constraint" / "transform.params" on violations.
FormatGraph apply_transform(const FormatGraph& graph, const TransformRecord& record);

// Human-readable constraint description (normative table).
std::string constraints(TransformKind kind);

// ChildMove pairs (i < j) whose swap keeps the graph valid.
std::vector<std::pair<std::size_t, std::size_t>> valid_child_swaps(
    const FormatGraph& graph, const NodePath& path);

// Highest legal PadInsert index in a sequence: a pad placed after a child
// that consumes the remainder (End boundary anywhere inside) is unparseable.
std::size_t pad_index_limit(const FormatNode& seq);

// --- value hooks shared by the wire engine, codegen, and the test oracles ---

// wire = v (op) constant, applied left to right.
Bytes apply_value_ops(const std::vector<ValueOp>& ops, Bytes v);
Bytes invert_value_ops(const std::vector<ValueOp>& ops, Bytes wire);

// Forward split of value v with random part r; returns {v1, v2}.
std::pair<Bytes, Bytes> split_forward(SplitKind kind, const Bytes& v, const Bytes& r,
                                      std::size_t cat_offset);
// Inverse: recombine parts into the original value.
Bytes split_combine(SplitKind kind, const Bytes& v1, const Bytes& v2);

// Original node a transformed node stands for ("" when synthetic).
std::string effective_origin(const FormatNode& node, const FormatGraph& original);

}  // namespace protoobf
