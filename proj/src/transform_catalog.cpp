#include "protoobf/transform_catalog.hpp"

#include <algorithm>
#include <functional>

namespace protoobf {

namespace {

struct KindInfo {
  TransformKind kind;
  const char* name;
  Phase phase;
  bool aggregation;
};

constexpr KindInfo kKinds[] = {
    {TransformKind::SplitAdd, "SplitAdd", Phase::Down, true},
    {TransformKind::SplitSub, "SplitSub", Phase::Down, true},
    {TransformKind::SplitXor, "SplitXor", Phase::Down, true},
    {TransformKind::SplitCat, "SplitCat", Phase::Down, true},
    {TransformKind::ConstAdd, "ConstAdd", Phase::Down, true},
    {TransformKind::ConstSub, "ConstSub", Phase::Down, true},
    {TransformKind::ConstXor, "ConstXor", Phase::Down, true},
    {TransformKind::BoundaryChange, "BoundaryChange", Phase::Up, true},
    {TransformKind::PadInsert, "PadInsert", Phase::Down, true},
    {TransformKind::ReadFromEnd, "ReadFromEnd", Phase::Up, false},
    {TransformKind::TabSplit, "TabSplit", Phase::Down, false},
    {TransformKind::RepSplit, "RepSplit", Phase::Down, false},
    {TransformKind::ChildMove, "ChildMove", Phase::Down, false},
};

const KindInfo& info(TransformKind k) {
  for (const auto& i : kKinds)
    if (i.kind == k) return i;
  throw ProtoError("transform.kind", "unknown transform kind");
}

bool path_contains(const NodePath& outer, const NodePath& inner) {
  return inner.size() >= outer.size() &&
         std::equal(outer.begin(), outer.end(), inner.begin());
}

std::vector<BoundaryKind> ancestor_kinds(const FormatGraph& g, const NodePath& path) {
  std::vector<BoundaryKind> out;
  const FormatNode* n = &g.root;
  for (std::size_t i : path) {
    out.push_back(n->boundary.kind);
    n = &n->children[i];
  }
  return out;
}

bool contains_boundary(const FormatNode& n, BoundaryKind k) {
  if (n.boundary.kind == k) return true;
  for (const auto& c : n.children)
    if (contains_boundary(c, k)) return true;
  return false;
}

bool ref_outside(const FormatGraph& g, const NodePath& subtree, const std::string& ref) {
  auto it = g.index.find(ref);
  return it != g.index.end() && !path_contains(subtree, it->second);
}

// Every Length-bounded ancestor region that grows must have a length field the
// serializer back-patches, otherwise a fixed user value would go stale.
// Logical value width of a carrier (Terminal or SplitGroup).
std::size_t carrier_width(const FormatNode& n) {
  if (n.type == NodeType::Terminal) return n.boundary.size;
  if (n.role == NodeRole::SplitGroup) {
    std::size_t w = carrier_width(n.children[0]);
    if (n.split_kind == SplitKind::Cat) w += carrier_width(n.children[1]);
    return w;
  }
  return 0;
}

bool length_ancestors_derived(const FormatGraph& g, const NodePath& path,
                              bool include_target) {
  const FormatNode* n = &g.root;
  std::size_t depth = 0;
  for (;;) {
    bool is_target = depth == path.size();
    if ((include_target || !is_target) && n->boundary.kind == BoundaryKind::Length) {
      const FormatNode* r = g.find(n->boundary.ref);
      if (!r || r->derivation.kind != DerivationKind::LengthOf ||
          r->derivation.ref != n->name)
        return false;
      // A 1-byte length field saturates too easily once transforms start
      // growing its region; keep such regions width-stable.
      if (carrier_width(*r) < 2) return false;
    }
    if (is_target) return true;
    n = &n->children[path[depth++]];
  }
}

// Can the node's byte extent be computed at parse time before reading its
// region (required for mirroring)?
bool extent_ok(const FormatGraph& g, const NodePath& subtree, const FormatNode& n) {
  switch (n.boundary.kind) {
    case BoundaryKind::Fixed:
    case BoundaryKind::End:
      return true;
    case BoundaryKind::Delimited:
      return false;
    case BoundaryKind::Length:
      return ref_outside(g, subtree, n.boundary.ref);
    case BoundaryKind::Counter:
      return ref_outside(g, subtree, n.boundary.ref) && !n.children.empty() &&
             static_size(n.children[0]).has_value();
    case BoundaryKind::Delegated: {
      if (n.type == NodeType::Optional)
        return n.presence && ref_outside(g, subtree, n.presence->ref) &&
               n.children.size() == 1 && extent_ok(g, subtree, n.children[0]);
      if (n.role == NodeRole::RepPart) return false;  // count known only group-wide
      for (const auto& c : n.children)
        if (!extent_ok(g, subtree, c)) return false;
      return true;
    }
  }
  return false;
}

std::string gensym(FormatGraph& g, const char* base) {
  std::string name;
  do {
    name = "g" + std::to_string(++g.gensym_counter) + "_" + base;
  } while (g.index.count(name));
  return name;
}

std::string inherited_origin(const FormatNode& old) {
  return old.origin.empty() ? old.name : old.origin;
}

enum RetargetMask { kValueRefs = 1, kLengthOf = 2, kCountOf = 4 };

void retarget(FormatNode& n, const std::string& from, const std::string& to, int mask) {
  if (mask & kValueRefs) {
    if (n.boundary.ref == from) n.boundary.ref = to;
    if (n.presence && n.presence->ref == from) n.presence->ref = to;
  }
  if (n.derivation.ref == from &&
      ((mask & kLengthOf && n.derivation.kind == DerivationKind::LengthOf) ||
       (mask & kCountOf && n.derivation.kind == DerivationKind::CountOf)))
    n.derivation.ref = to;
  for (auto& c : n.children) retarget(c, from, to, mask);
}

void bump_fixed_ancestors(FormatGraph& g, const NodePath& path, std::size_t delta) {
  FormatNode* n = &g.root;
  for (std::size_t i : path) {
    if (n->boundary.kind == BoundaryKind::Fixed) n->boundary.size += delta;
    n = &n->children[i];
  }
}

void constraint_error(const std::string& msg) { throw ProtoError("transform.constraint", msg); }
void param_error(const std::string& msg) { throw ProtoError("transform.params", msg); }

void finish(FormatGraph& g) {
  g.rebuild_index();
  auto report = validate(g);
  if (!report.ok())
    constraint_error("rewritten graph fails validation:\n" + report.summary());
}

bool split_ancestors_ok(const FormatGraph& g, const NodePath& path) {
  for (auto k : ancestor_kinds(g, path))
    if (k != BoundaryKind::Delegated && k != BoundaryKind::End &&
        k != BoundaryKind::Fixed && k != BoundaryKind::Length)
      return false;
  return true;
}

bool split_target_ok(const FormatGraph& g, const NodePath& path, const FormatNode& t) {
  return t.type == NodeType::Terminal && t.boundary.kind == BoundaryKind::Fixed &&
         t.boundary.size >= 1 && split_ancestors_ok(g, path);
}

void apply_split(FormatGraph& g, const NodePath& path, SplitKind kind,
                 std::size_t offset) {
  FormatNode& slot = g.at_mut(path);
  if (!split_target_ok(g, path, slot))
    constraint_error("split needs a fixed terminal whose ancestors are Delegated/End/Fixed/Length");
  if (slot.role == NodeRole::SplitPart)
    constraint_error("split parts cannot be split again");
  std::size_t w = slot.boundary.size;
  if (kind == SplitKind::Cat && (offset < 1 || offset >= w))
    param_error("SplitCat offset must be in [1, width-1]");
  if (kind != SplitKind::Cat && !length_ancestors_derived(g, path, false))
    constraint_error("width change under a non-derived length boundary");

  FormatNode old = slot;
  FormatNode grp;
  grp.name = gensym(g, "sp");
  grp.type = NodeType::Sequence;
  grp.boundary = Boundary::delegated();
  grp.role = NodeRole::SplitGroup;
  grp.split_kind = kind;
  grp.cat_offset = kind == SplitKind::Cat ? offset : 0;
  grp.origin = inherited_origin(old);
  grp.derivation = old.derivation;
  grp.value_ops = old.value_ops;
  grp.mirror = old.mirror;
  grp.part_index = old.part_index;

  std::size_t w1 = kind == SplitKind::Cat ? offset : w;
  std::size_t w2 = kind == SplitKind::Cat ? w - offset : w;
  for (int p = 1; p <= 2; ++p) {
    FormatNode part;
    part.name = gensym(g, p == 1 ? "v1" : "v2");
    part.type = NodeType::Terminal;
    part.boundary = Boundary::fixed(p == 1 ? w1 : w2);
    part.role = NodeRole::SplitPart;
    part.part_index = p;
    grp.children.push_back(std::move(part));
  }
  slot = std::move(grp);
  retarget(g.root, old.name, g.at(path).name, kValueRefs | kLengthOf | kCountOf);
  if (kind != SplitKind::Cat) bump_fixed_ancestors(g, path, w);
}

void apply_const(FormatGraph& g, const NodePath& path, ConstOp op, const Bytes& c) {
  FormatNode& slot = g.at_mut(path);
  if (!split_target_ok(g, path, slot))
    constraint_error("const op needs a fixed terminal whose ancestors are Delegated/End/Fixed/Length");
  if (c.size() != slot.boundary.size)
    param_error("constant width must equal the field width");
  slot.value_ops.push_back({op, c});
}

void apply_boundary_change(FormatGraph& g, const NodePath& path, std::size_t width) {
  FormatNode& slot = g.at_mut(path);
  if (slot.boundary.kind != BoundaryKind::Delimited)
    constraint_error("BoundaryChange needs a Delimited boundary");
  for (auto k : ancestor_kinds(g, path))
    if (k != BoundaryKind::Delegated && k != BoundaryKind::End)
      constraint_error("BoundaryChange ancestors must be Delegated or End");
  if (width < 1 || width > 8) param_error("length-prefix width must be in [1,8]");

  FormatNode old = slot;
  std::string grp_name = gensym(g, "bc");
  std::string len_name = gensym(g, "ln");
  // Regions formerly measured through the delimiter now cover prefix+content.
  retarget(g.root, old.name, grp_name, kLengthOf);

  FormatNode grp;
  grp.name = grp_name;
  grp.type = NodeType::Sequence;
  grp.boundary = Boundary::delegated();
  grp.origin = inherited_origin(old);

  FormatNode len;
  len.name = len_name;
  len.type = NodeType::Terminal;
  len.boundary = Boundary::fixed(width);
  len.derivation = {DerivationKind::LengthOf, old.name};

  FormatNode content = old;  // keeps its name, so value refs stay intact
  content.boundary = Boundary::length(len_name);
  content.origin = grp.origin;

  grp.children.push_back(std::move(len));
  grp.children.push_back(std::move(content));
  slot = std::move(grp);
}

void apply_pad_insert(FormatGraph& g, const NodePath& path, std::size_t index,
                      std::size_t width) {
  FormatNode& slot = g.at_mut(path);
  if (slot.type != NodeType::Sequence)
    constraint_error("PadInsert target must be a Sequence");
  if (slot.role == NodeRole::SplitGroup)
    constraint_error("PadInsert cannot break up a split group");
  if (slot.boundary.kind == BoundaryKind::Fixed)
    constraint_error("PadInsert target extent must not be Fixed");
  for (auto k : ancestor_kinds(g, path))
    if (k == BoundaryKind::Delimited)
      constraint_error("PadInsert forbidden under a Delimited ancestor");
  if (!length_ancestors_derived(g, path, true))
    constraint_error("width change under a non-derived length boundary");
  if (index > slot.children.size()) param_error("insertion index out of range");
  if (index > pad_index_limit(slot))
    constraint_error("pad cannot follow a child that consumes the remainder");
  if (width < 1 || width > 8) param_error("pad width must be in [1,8]");

  FormatNode pad;
  pad.name = gensym(g, "pad");
  pad.type = NodeType::Terminal;
  pad.boundary = Boundary::fixed(width);
  pad.role = NodeRole::Pad;
  slot.children.insert(slot.children.begin() + static_cast<std::ptrdiff_t>(index),
                       std::move(pad));
  bump_fixed_ancestors(g, path, width);
}

void apply_read_from_end(FormatGraph& g, const NodePath& path) {
  FormatNode& slot = g.at_mut(path);
  if (slot.role == NodeRole::RepPart)
    constraint_error("ReadFromEnd cannot target a repetition part run");
  if (contains_boundary(slot, BoundaryKind::Delimited))
    constraint_error("ReadFromEnd forbids Delimited boundaries inside the target");
  for (auto k : ancestor_kinds(g, path))
    if (k == BoundaryKind::Delimited)
      constraint_error("ReadFromEnd forbidden under a Delimited ancestor");
  if (!extent_ok(g, path, slot))
    constraint_error("ReadFromEnd target extent is not determinable before parsing");
  slot.mirror += 1;
}

void apply_tab_split(FormatGraph& g, const NodePath& path) {
  FormatNode& slot = g.at_mut(path);
  if (slot.type != NodeType::Tabular || slot.boundary.kind != BoundaryKind::Counter ||
      slot.children.size() != 1)
    constraint_error("TabSplit needs a Counter-bounded Tabular");
  const FormatNode& elem = slot.children[0];
  if (elem.type != NodeType::Sequence || elem.role != NodeRole::Plain ||
      elem.children.size() < 2)
    constraint_error("TabSplit element must be a plain Sequence of >= 2 parts");

  FormatNode old = slot;
  std::string grp_name = gensym(g, "tg");
  std::vector<std::string> part_names;
  for (std::size_t j = 0; j < old.children[0].children.size(); ++j)
    part_names.push_back(gensym(g, "tp"));

  FormatNode grp;
  grp.name = grp_name;
  grp.type = NodeType::Sequence;
  grp.boundary = Boundary::delegated();
  grp.role = NodeRole::TabGroup;
  grp.origin = inherited_origin(old);
  grp.mirror = old.mirror;
  for (std::size_t j = 0; j < part_names.size(); ++j) {
    FormatNode part;
    part.name = part_names[j];
    part.type = NodeType::Tabular;
    part.boundary = old.boundary;  // same Counter referent
    part.role = NodeRole::TabPart;
    part.part_index = static_cast<int>(j);
    part.origin = grp.origin;
    part.children.push_back(old.children[0].children[j]);
    grp.children.push_back(std::move(part));
  }
  slot = std::move(grp);
  retarget(g.root, old.name, part_names[0], kCountOf);
  retarget(g.root, old.name, grp_name, kLengthOf);
}

void apply_rep_split(FormatGraph& g, const NodePath& path) {
  FormatNode& slot = g.at_mut(path);
  bool extent_ok_rep = slot.boundary.kind == BoundaryKind::Length ||
                       slot.boundary.kind == BoundaryKind::End;
  if (slot.type != NodeType::Repetition || slot.role != NodeRole::Plain ||
      !extent_ok_rep || slot.children.size() != 1)
    constraint_error("RepSplit needs a plain Repetition with Length or End extent");
  const FormatNode& elem = slot.children[0];
  bool parts_fixed = elem.type == NodeType::Sequence && elem.role == NodeRole::Plain &&
                     elem.children.size() >= 2;
  if (parts_fixed)
    for (const auto& c : elem.children)
      parts_fixed &= c.type == NodeType::Terminal &&
                     c.boundary.kind == BoundaryKind::Fixed &&
                     c.role == NodeRole::Plain;
  if (!parts_fixed)
    constraint_error("RepSplit element must be a plain Sequence of >= 2 fixed terminals");

  FormatNode old = slot;
  std::string grp_name = gensym(g, "rg");

  FormatNode grp;
  grp.name = grp_name;
  grp.type = NodeType::Sequence;
  grp.boundary = old.boundary;
  grp.role = NodeRole::RepGroup;
  grp.origin = inherited_origin(old);
  grp.mirror = old.mirror;
  for (std::size_t j = 0; j < old.children[0].children.size(); ++j) {
    FormatNode part;
    part.name = gensym(g, "rp");
    part.type = NodeType::Repetition;
    part.boundary = Boundary::delegated();  // run length computed from the group extent
    part.role = NodeRole::RepPart;
    part.part_index = static_cast<int>(j);
    part.origin = grp.origin;
    part.children.push_back(old.children[0].children[j]);
    grp.children.push_back(std::move(part));
  }
  slot = std::move(grp);
  retarget(g.root, old.name, grp_name, kLengthOf);
}

void apply_child_move(FormatGraph& g, const NodePath& path, std::size_t i,
                      std::size_t j) {
  FormatNode& slot = g.at_mut(path);
  if (slot.type != NodeType::Sequence || slot.children.size() < 2)
    constraint_error("ChildMove target must be a Sequence with >= 2 children");
  if (i >= slot.children.size() || j >= slot.children.size() || i == j)
    param_error("child indices out of range");
  // An End-bounded subtree consumes the region remainder; it cannot move.
  if (contains_boundary(slot.children[i], BoundaryKind::End) ||
      contains_boundary(slot.children[j], BoundaryKind::End))
    constraint_error("cannot move a child containing an End boundary");
  std::swap(slot.children[i], slot.children[j]);
}

FormatGraph apply_impl(const FormatGraph& g, const TransformRecord& r) {
  FormatGraph out = g;
  if (r.phase != phase_of(r.kind)) param_error("phase does not match transform kind");
  switch (r.kind) {
    case TransformKind::SplitAdd: apply_split(out, r.target, SplitKind::Add, 0); break;
    case TransformKind::SplitSub: apply_split(out, r.target, SplitKind::Sub, 0); break;
    case TransformKind::SplitXor: apply_split(out, r.target, SplitKind::Xor, 0); break;
    case TransformKind::SplitCat:
      apply_split(out, r.target, SplitKind::Cat, r.params.offset);
      break;
    case TransformKind::ConstAdd: apply_const(out, r.target, ConstOp::Add, r.params.constant); break;
    case TransformKind::ConstSub: apply_const(out, r.target, ConstOp::Sub, r.params.constant); break;
    case TransformKind::ConstXor: apply_const(out, r.target, ConstOp::Xor, r.params.constant); break;
    case TransformKind::BoundaryChange: apply_boundary_change(out, r.target, r.params.width); break;
    case TransformKind::PadInsert: apply_pad_insert(out, r.target, r.params.index, r.params.width); break;
    case TransformKind::ReadFromEnd: apply_read_from_end(out, r.target); break;
    case TransformKind::TabSplit: apply_tab_split(out, r.target); break;
    case TransformKind::RepSplit: apply_rep_split(out, r.target); break;
    case TransformKind::ChildMove: apply_child_move(out, r.target, r.params.child_i, r.params.child_j); break;
  }
  finish(out);
  return out;
}

bool trial(const FormatGraph& g, TransformKind kind, const NodePath& path,
           TransformParams params = {}) {
  TransformRecord r{kind, path, std::move(params), phase_of(kind)};
  try {
    apply_impl(g, r);
    return true;
  } catch (const ProtoError&) {
    return false;
  }
}

}  // namespace

Phase phase_of(TransformKind kind) { return info(kind).phase; }
bool is_aggregation(TransformKind kind) { return info(kind).aggregation; }
const char* transform_kind_name(TransformKind kind) { return info(kind).name; }

TransformKind transform_kind_from_name(const std::string& name) {
  for (const auto& i : kKinds)
    if (name == i.name) return i.kind;
  throw ProtoError("transform.kind", "unknown transform kind '" + name + "'");
}

std::set<TransformKind> applicable(const FormatGraph& graph, const NodePath& path) {
  const FormatNode& t = graph.at(path);
  std::set<TransformKind> out;
  if (t.role == NodeRole::RepPart) return out;  // self-delimiting engine construct

  bool anc_delim = false;
  for (auto k : ancestor_kinds(graph, path)) anc_delim |= k == BoundaryKind::Delimited;

  if (t.type == NodeType::Terminal && t.boundary.kind == BoundaryKind::Fixed &&
      split_ancestors_ok(graph, path)) {
    if (t.role != NodeRole::SplitPart) {
      if (length_ancestors_derived(graph, path, false)) {
        out.insert(TransformKind::SplitAdd);
        out.insert(TransformKind::SplitSub);
        out.insert(TransformKind::SplitXor);
      }
      if (t.boundary.size >= 2) out.insert(TransformKind::SplitCat);
    }
    out.insert(TransformKind::ConstAdd);
    out.insert(TransformKind::ConstSub);
    out.insert(TransformKind::ConstXor);
  }

  if (t.boundary.kind == BoundaryKind::Delimited) {
    bool ok = true;
    for (auto k : ancestor_kinds(graph, path))
      ok &= k == BoundaryKind::Delegated || k == BoundaryKind::End;
    if (ok) out.insert(TransformKind::BoundaryChange);
  }

  if (t.type == NodeType::Sequence && t.role != NodeRole::SplitGroup &&
      t.boundary.kind != BoundaryKind::Fixed && !anc_delim &&
      length_ancestors_derived(graph, path, true))
    out.insert(TransformKind::PadInsert);

  if (!anc_delim && !contains_boundary(t, BoundaryKind::Delimited) &&
      extent_ok(graph, path, t))
    out.insert(TransformKind::ReadFromEnd);

  if (t.type == NodeType::Tabular && trial(graph, TransformKind::TabSplit, path))
    out.insert(TransformKind::TabSplit);
  if (t.type == NodeType::Repetition && trial(graph, TransformKind::RepSplit, path))
    out.insert(TransformKind::RepSplit);
  if (t.type == NodeType::Sequence && !valid_child_swaps(graph, path).empty())
    out.insert(TransformKind::ChildMove);

  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> valid_child_swaps(
    const FormatGraph& graph, const NodePath& path) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const FormatNode& t = graph.at(path);
  if (t.type != NodeType::Sequence || t.children.size() < 2) return out;
  for (std::size_t i = 0; i + 1 < t.children.size(); ++i)
    for (std::size_t j = i + 1; j < t.children.size(); ++j) {
      TransformParams p;
      p.child_i = i;
      p.child_j = j;
      if (trial(graph, TransformKind::ChildMove, path, p)) out.emplace_back(i, j);
    }
  return out;
}

std::size_t pad_index_limit(const FormatNode& seq) {
  for (std::size_t i = 0; i < seq.children.size(); ++i)
    if (contains_boundary(seq.children[i], BoundaryKind::End)) return i;
  return seq.children.size();
}

FormatGraph apply_transform(const FormatGraph& graph, const TransformRecord& record) {
  return apply_impl(graph, record);
}

std::string constraints(TransformKind kind) {
  switch (kind) {
    case TransformKind::SplitAdd:
    case TransformKind::SplitSub:
    case TransformKind::SplitXor:
    case TransformKind::SplitCat:
      return "target: Terminal with Fixed boundary, not itself a split part; "
             "ancestor boundaries in {Delegated, End, Fixed, Length}";
    case TransformKind::ConstAdd:
    case TransformKind::ConstSub:
    case TransformKind::ConstXor:
      return "target: Terminal with Fixed boundary; ancestor boundaries in "
             "{Delegated, End, Fixed, Length}";
    case TransformKind::BoundaryChange:
      return "target boundary: Delimited; ancestor boundaries in {Delegated, End}";
    case TransformKind::PadInsert:
      return "target: Sequence (not a split group) whose extent is not Fixed; "
             "no Delimited ancestor";
    case TransformKind::ReadFromEnd:
      return "no Delimited boundary on the target, inside it, or above it; "
             "target extent determinable before parsing";
    case TransformKind::TabSplit:
      return "target: Tabular with Counter boundary whose child is a Sequence "
             "of >= 2 parts";
    case TransformKind::RepSplit:
      return "target: Repetition with Length or End extent whose child is a "
             "Sequence of >= 2 fixed-size Terminals";
    case TransformKind::ChildMove:
      return "target: Sequence with >= 2 children; references must still "
             "precede their referrers after the swap";
  }
  return "";
}

Bytes apply_value_ops(const std::vector<ValueOp>& ops, Bytes v) {
  for (const auto& op : ops) {
    if (op.constant.size() != v.size())
      throw ProtoError("transform.params", "constant width mismatch");
    switch (op.op) {
      case ConstOp::Add: v = be_add(v, op.constant); break;
      case ConstOp::Sub: v = be_sub(v, op.constant); break;
      case ConstOp::Xor: v = be_xor(v, op.constant); break;
    }
  }
  return v;
}

Bytes invert_value_ops(const std::vector<ValueOp>& ops, Bytes wire) {
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
    if (it->constant.size() != wire.size())
      throw ProtoError("transform.params", "constant width mismatch");
    switch (it->op) {
      case ConstOp::Add: wire = be_sub(wire, it->constant); break;
      case ConstOp::Sub: wire = be_add(wire, it->constant); break;
      case ConstOp::Xor: wire = be_xor(wire, it->constant); break;
    }
  }
  return wire;
}

std::pair<Bytes, Bytes> split_forward(SplitKind kind, const Bytes& v, const Bytes& r,
                                      std::size_t cat_offset) {
  switch (kind) {
    case SplitKind::Add: return {r, be_sub(v, r)};   // v = v1 + v2
    case SplitKind::Sub: return {be_add(v, r), r};   // v = v1 - v2
    case SplitKind::Xor: return {r, be_xor(v, r)};   // v = v1 ^ v2
    case SplitKind::Cat:
      if (cat_offset < 1 || cat_offset >= v.size())
        throw ProtoError("transform.params", "SplitCat offset out of range");
      return {Bytes(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(cat_offset)),
              Bytes(v.begin() + static_cast<std::ptrdiff_t>(cat_offset), v.end())};
  }
  throw ProtoError("transform.kind", "unknown split kind");
}

Bytes split_combine(SplitKind kind, const Bytes& v1, const Bytes& v2) {
  switch (kind) {
    case SplitKind::Add: return be_add(v1, v2);
    case SplitKind::Sub: return be_sub(v1, v2);
    case SplitKind::Xor: return be_xor(v1, v2);
    case SplitKind::Cat: {
      Bytes out = v1;
      out.insert(out.end(), v2.begin(), v2.end());
      return out;
    }
  }
  throw ProtoError("transform.kind", "unknown split kind");
}

std::string effective_origin(const FormatNode& node, const FormatGraph& original) {
  const std::string& candidate = node.origin.empty() ? node.name : node.origin;
  return original.index.count(candidate) ? candidate : std::string{};
}

}  // namespace protoobf
