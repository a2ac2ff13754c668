#include "protoobf/format_model.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace protoobf {

const char* node_type_name(NodeType t) {
  switch (t) {
    case NodeType::Terminal: return "terminal";
    case NodeType::Sequence: return "sequence";
    case NodeType::Optional: return "optional";
    case NodeType::Repetition: return "repetition";
    case NodeType::Tabular: return "tabular";
  }
  return "?";
}

const char* boundary_kind_name(BoundaryKind k) {
  switch (k) {
    case BoundaryKind::Fixed: return "fixed";
    case BoundaryKind::Delimited: return "delimited";
    case BoundaryKind::Length: return "length";
    case BoundaryKind::Counter: return "counter";
    case BoundaryKind::End: return "end";
    case BoundaryKind::Delegated: return "delegated";
  }
  return "?";
}

void FormatGraph::rebuild_index() {
  index.clear();
  std::function<void(const FormatNode&, NodePath&)> walk = [&](const FormatNode& n,
                                                               NodePath& path) {
    index.emplace(n.name, path);
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      path.push_back(i);
      walk(n.children[i], path);
      path.pop_back();
    }
  };
  NodePath p;
  walk(root, p);
}

const FormatNode* FormatGraph::find(const std::string& node_name) const {
  auto it = index.find(node_name);
  if (it == index.end()) return nullptr;
  return &at(it->second);
}

const FormatNode& FormatGraph::at(const NodePath& path) const {
  const FormatNode* n = &root;
  for (std::size_t i : path) {
    if (i >= n->children.size()) throw ProtoError("graph.path", "path out of range");
    n = &n->children[i];
  }
  return *n;
}

FormatNode& FormatGraph::at_mut(const NodePath& path) {
  FormatNode* n = &root;
  for (std::size_t i : path) {
    if (i >= n->children.size()) throw ProtoError("graph.path", "path out of range");
    n = &n->children[i];
  }
  return *n;
}

std::optional<NodePath> FormatGraph::parent_of(const NodePath& path) const {
  if (path.empty()) return std::nullopt;
  return NodePath(path.begin(), path.end() - 1);
}

std::vector<NodePath> dfs_order(const FormatGraph& graph) {
  std::vector<NodePath> out;
  std::function<void(const FormatNode&, NodePath&)> walk = [&](const FormatNode& n,
                                                               NodePath& path) {
    out.push_back(path);
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      path.push_back(i);
      walk(n.children[i], path);
      path.pop_back();
    }
  };
  NodePath p;
  walk(graph.root, p);
  return out;
}

bool dfs_precedes(const NodePath& a, const NodePath& b) {
  return a != b && std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

std::optional<std::size_t> static_size(const FormatNode& node) {
  switch (node.type) {
    case NodeType::Terminal:
      if (node.boundary.kind == BoundaryKind::Fixed) return node.boundary.size;
      return std::nullopt;
    case NodeType::Sequence: {
      if (node.boundary.kind == BoundaryKind::Fixed) return node.boundary.size;
      if (node.boundary.kind != BoundaryKind::Delegated) return std::nullopt;
      std::size_t total = 0;
      for (const auto& c : node.children) {
        auto s = static_size(c);
        if (!s) return std::nullopt;
        total += *s;
      }
      return total;
    }
    default:
      return std::nullopt;
  }
}

bool node_equal(const FormatNode& a, const FormatNode& b) {
  if (a.name != b.name || a.type != b.type) return false;
  if (a.boundary.kind != b.boundary.kind || a.boundary.size != b.boundary.size ||
      a.boundary.delim != b.boundary.delim || a.boundary.ref != b.boundary.ref)
    return false;
  if (a.derivation.kind != b.derivation.kind || a.derivation.ref != b.derivation.ref)
    return false;
  if (a.presence.has_value() != b.presence.has_value()) return false;
  if (a.presence && (a.presence->ref != b.presence->ref ||
                     a.presence->expected != b.presence->expected))
    return false;
  if (a.role != b.role || a.origin != b.origin || a.split_kind != b.split_kind ||
      a.cat_offset != b.cat_offset || a.part_index != b.part_index || a.mirror != b.mirror)
    return false;
  if (a.value_ops.size() != b.value_ops.size()) return false;
  for (std::size_t i = 0; i < a.value_ops.size(); ++i)
    if (a.value_ops[i].op != b.value_ops[i].op ||
        a.value_ops[i].constant != b.value_ops[i].constant)
      return false;
  if (a.children.size() != b.children.size()) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!node_equal(a.children[i], b.children[i])) return false;
  return true;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& e : entries) {
    os << (e.severity == ValidationEntry::Severity::Error ? "error" : "warning") << " ["
       << e.rule << "] " << e.node << ": " << e.message << "\n";
  }
  return os.str();
}

namespace {

bool matrix_allows(const FormatNode& n) {
  auto k = n.boundary.kind;
  switch (n.type) {
    case NodeType::Terminal:
      return k == BoundaryKind::Fixed || k == BoundaryKind::Delimited ||
             k == BoundaryKind::Length || k == BoundaryKind::End;
    case NodeType::Sequence:
      return k == BoundaryKind::Delegated || k == BoundaryKind::Fixed ||
             k == BoundaryKind::Length || k == BoundaryKind::End;
    case NodeType::Optional:
      return k == BoundaryKind::Delegated;
    case NodeType::Repetition:
      return k == BoundaryKind::Length || k == BoundaryKind::End ||
             k == BoundaryKind::Delimited;
    case NodeType::Tabular:
      return k == BoundaryKind::Counter;
  }
  return false;
}

// Paths of Repetition/Tabular ancestors; derivation referent and referrer must
// share these so occurrences pair one-to-one.
std::vector<NodePath> repetition_scope(const FormatGraph& g, const NodePath& path) {
  std::vector<NodePath> out;
  const FormatNode* n = &g.root;
  NodePath cur;
  for (std::size_t i : path) {
    if (n->type == NodeType::Repetition || n->type == NodeType::Tabular) out.push_back(cur);
    cur.push_back(i);
    n = &n->children[i];
  }
  return out;
}

bool path_contains(const NodePath& outer, const NodePath& inner) {
  return inner.size() >= outer.size() &&
         std::equal(outer.begin(), outer.end(), inner.begin());
}

}  // namespace

ValidationReport validate(const FormatGraph& graph) {
  ValidationReport report;
  auto error = [&](const std::string& node, std::string rule, std::string msg) {
    report.entries.push_back(
        {ValidationEntry::Severity::Error, node, std::move(rule), std::move(msg)});
  };

  // Duplicate names: the index drops duplicates, so count nodes directly.
  std::map<std::string, int> seen;
  std::function<void(const FormatNode&)> count = [&](const FormatNode& n) {
    ++seen[n.name];
    for (const auto& c : n.children) count(c);
  };
  count(graph.root);
  for (const auto& [name, cnt] : seen)
    if (cnt > 1) error(name, "graph.dup_name", "node name appears " + std::to_string(cnt) + " times");

  auto order = dfs_order(graph);
  for (const auto& path : order) {
    const FormatNode& n = graph.at(path);

    // Structural arity.
    switch (n.type) {
      case NodeType::Terminal:
        if (!n.children.empty()) error(n.name, "node.children", "terminal must have no children");
        break;
      case NodeType::Sequence:
        if (n.children.empty()) error(n.name, "node.children", "sequence needs at least one child");
        break;
      case NodeType::Optional:
      case NodeType::Repetition:
      case NodeType::Tabular:
        if (n.children.size() != 1)
          error(n.name, "node.children",
                std::string(node_type_name(n.type)) + " must have exactly one child");
        break;
    }

    // Type/boundary consistency matrix (engine-internal roles delimit themselves).
    if (n.role != NodeRole::RepPart && n.role != NodeRole::RepGroup && !matrix_allows(n)) {
      if (n.type == NodeType::Terminal)
        error(n.name, "node.boundary_matrix", "terminal must use Fixed/Delimited/Length/End");
      else
        error(n.name, "node.boundary_matrix",
              std::string(node_type_name(n.type)) + " cannot use boundary " +
                  boundary_kind_name(n.boundary.kind));
    }

    if (n.boundary.kind == BoundaryKind::Fixed && n.boundary.size < 1)
      error(n.name, "boundary.params", "fixed size must be >= 1");
    if (n.boundary.kind == BoundaryKind::Delimited && n.boundary.delim.empty())
      error(n.name, "boundary.params", "delimiter must be non-empty");

    // Boundary references: must resolve to a value carrier that precedes the
    // referrer in DFS order (a streaming parser needs the value first).
    if (n.boundary.kind == BoundaryKind::Length || n.boundary.kind == BoundaryKind::Counter) {
      auto it = graph.index.find(n.boundary.ref);
      if (it == graph.index.end()) {
        error(n.name, "ref.boundary", "unknown node " + n.boundary.ref);
      } else {
        const FormatNode& ref = graph.at(it->second);
        if (!is_value_carrier(ref))
          error(n.name, "ref.boundary", "boundary referent must be a terminal");
        if (!dfs_precedes(it->second, path))
          error(n.name, "ref.boundary", "referent must precede referrer");
      }
    }

    // Derivation: referent is measured and back-patched, so it may follow the
    // derived field, but cannot contain it and must share repetition scope.
    if (n.derivation.kind != DerivationKind::None) {
      if (!is_value_carrier(n))
        error(n.name, "ref.derivation", "only terminals can derive values");
      else if (n.type == NodeType::Terminal && n.boundary.kind != BoundaryKind::Fixed)
        error(n.name, "ref.derivation", "derived terminal must have a fixed boundary");
      auto it = graph.index.find(n.derivation.ref);
      if (it == graph.index.end()) {
        error(n.name, "ref.derivation", "unknown node " + n.derivation.ref);
      } else {
        const FormatNode& ref = graph.at(it->second);
        if (n.derivation.kind == DerivationKind::CountOf && ref.type != NodeType::Tabular)
          error(n.name, "ref.derivation", "count_of referent must be tabular");
        if (path_contains(it->second, path))
          error(n.name, "ref.derivation", "referent cannot contain the derived field");
        if (repetition_scope(graph, it->second) != repetition_scope(graph, path))
          error(n.name, "ref.derivation", "referent must share the derived field's repetition scope");
      }
    }

    if (n.presence) {
      if (n.type != NodeType::Optional)
        error(n.name, "ref.presence", "presence condition only valid on optional nodes");
      if (n.presence->expected.empty())
        error(n.name, "ref.presence", "expected value must be non-empty");
      auto it = graph.index.find(n.presence->ref);
      if (it == graph.index.end()) {
        error(n.name, "ref.presence", "unknown node " + n.presence->ref);
      } else {
        const FormatNode& ref = graph.at(it->second);
        if (!is_value_carrier(ref))
          error(n.name, "ref.presence", "presence referent must be a terminal");
        if (!dfs_precedes(it->second, path))
          error(n.name, "ref.presence", "referent must precede referrer");
      }
    } else if (n.type == NodeType::Optional && n.role == NodeRole::Plain) {
      error(n.name, "ref.presence", "optional node needs a presence condition");
    }
  }

  return report;
}

}  // namespace protoobf
