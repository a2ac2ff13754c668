#include "protoobf/message_ast.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <functional>
#include <map>
#include <sstream>

#include "protoobf/prng.hpp"

namespace protoobf {

namespace {

using ordered_json = nlohmann::ordered_json;

AstNode skeleton(const FormatNode& g, const NodePath& path) {
  AstNode n;
  n.graph_ref = path;
  if (g.type == NodeType::Sequence) {
    NodePath child_path = path;
    for (std::size_t i = 0; i < g.children.size(); ++i) {
      child_path.push_back(i);
      n.children.push_back(skeleton(g.children[i], child_path));
      child_path.pop_back();
    }
  }
  return n;
}

bool ast_node_equal(const AstNode& a, const AstNode& b) {
  if (a.value != b.value || a.present != b.present ||
      a.children.size() != b.children.size())
    return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!ast_node_equal(a.children[i], b.children[i])) return false;
  return true;
}

struct Resolved {
  AstNode* ast;
  const FormatNode* node;
  NodePath path;
};

Resolved resolve(MessageAst& ast, const FieldSelector& sel) {
  if (sel.segments.empty()) throw ProtoError("ast.selector", "empty selector");
  const std::string& target = sel.segments.back().name;
  auto it = ast.graph->index.find(target);
  if (it == ast.graph->index.end())
    throw ProtoError("ast.selector", "unknown node " + target);
  const NodePath& path = it->second;

  AstNode* cur = &ast.root;
  const FormatNode* g = &ast.graph->root;
  std::size_t seg = 0;
  for (std::size_t depth = 0; depth < path.size(); ++depth) {
    std::size_t next = path[depth];
    switch (g->type) {
      case NodeType::Sequence:
        cur = &cur->children[next];
        break;
      case NodeType::Optional:
        if (!cur->present || cur->children.empty())
          throw ProtoError("ast.selector", "optional " + g->name + " is absent");
        cur = &cur->children[0];
        break;
      case NodeType::Repetition:
      case NodeType::Tabular: {
        if (seg >= sel.segments.size() - 1 || sel.segments[seg].name != g->name ||
            !sel.segments[seg].has_index)
          throw ProtoError("ast.selector",
                           "selector must index repeated ancestor " + g->name);
        std::size_t idx = sel.segments[seg].index;
        ++seg;
        if (idx >= cur->children.size())
          throw ProtoError("ast.selector", "element index out of range in " + g->name);
        cur = &cur->children[idx];
        break;
      }
      case NodeType::Terminal:
        throw ProtoError("ast.selector", "terminal has no children");
    }
    g = &g->children[next];
  }
  if (seg != sel.segments.size() - 1)
    throw ProtoError("ast.selector", "selector names non-ancestor segments");
  return {cur, g, path};
}

Resolved resolve(const MessageAst& ast, const FieldSelector& sel) {
  return resolve(const_cast<MessageAst&>(ast), sel);
}

}  // namespace

bool ast_equal(const MessageAst& a, const MessageAst& b) {
  return ast_node_equal(a.root, b.root);
}

FieldSelector FieldSelector::parse(const std::string& text) {
  FieldSelector sel;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t dot = text.find('.', pos);
    std::string part = text.substr(pos, dot == std::string::npos ? dot : dot - pos);
    Segment s;
    auto br = part.find('[');
    if (br != std::string::npos) {
      if (part.back() != ']') throw ProtoError("ast.selector", "malformed index in " + part);
      s.name = part.substr(0, br);
      s.index = static_cast<std::size_t>(std::stoull(part.substr(br + 1, part.size() - br - 2)));
      s.has_index = true;
    } else {
      s.name = part;
    }
    if (s.name.empty()) throw ProtoError("ast.selector", "empty selector segment");
    sel.segments.push_back(std::move(s));
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  return sel;
}

std::string FieldSelector::str() const {
  std::string out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i) out += ".";
    out += segments[i].name;
    if (segments[i].has_index) out += "[" + std::to_string(segments[i].index) + "]";
  }
  return out;
}

MessageAst new_ast(const FormatGraph& graph) {
  MessageAst ast;
  ast.graph = &graph;
  ast.root = skeleton(graph.root, {});
  return ast;
}

void set_value(MessageAst& ast, const FieldSelector& sel, const Bytes& value) {
  auto r = resolve(ast, sel);
  if (r.node->type != NodeType::Terminal)
    throw ProtoError("ast.set", sel.str() + " is not a terminal");
  if (r.node->derivation.kind != DerivationKind::None)
    throw ProtoError("ast.set", sel.str() + " is derived and owned by the engine");
  if (r.node->boundary.kind == BoundaryKind::Fixed && value.size() != r.node->boundary.size)
    throw ProtoError("ast.width", sel.str() + " expects " +
                                      std::to_string(r.node->boundary.size) + " bytes, got " +
                                      std::to_string(value.size()));
  r.ast->value = value;
}

Bytes get_value(const MessageAst& ast, const FieldSelector& sel) {
  auto r = resolve(ast, sel);
  if (r.node->type != NodeType::Terminal)
    throw ProtoError("ast.get", sel.str() + " is not a terminal");
  if (r.node->derivation.kind != DerivationKind::None)
    throw ProtoError("ast.get", sel.str() + " is derived and owned by the engine");
  return r.ast->value;
}

std::size_t push_element(MessageAst& ast, const FieldSelector& sel) {
  auto r = resolve(ast, sel);
  if (r.node->type != NodeType::Repetition && r.node->type != NodeType::Tabular)
    throw ProtoError("ast.push", sel.str() + " is not a repetition or tabular");
  NodePath child_path = r.path;
  child_path.push_back(0);
  r.ast->children.push_back(skeleton(r.node->children[0], child_path));
  return r.ast->children.size() - 1;
}

void set_present(MessageAst& ast, const FieldSelector& sel, bool present) {
  auto r = resolve(ast, sel);
  if (r.node->type != NodeType::Optional)
    throw ProtoError("ast.present", sel.str() + " is not optional");
  r.ast->present = present;
  r.ast->children.clear();
  if (present) {
    NodePath child_path = r.path;
    child_path.push_back(0);
    r.ast->children.push_back(skeleton(r.node->children[0], child_path));
  }
}

namespace {

struct RandomCtx {
  Prng rng;
  const FormatGraph& graph;
  // presence referent name -> expected values of the optionals depending on it
  std::map<std::string, std::vector<Bytes>> steering;
  // non-derived counter referents: generate a small count value so element
  // counts can follow it (referents precede their tabulars in DFS order)
  std::map<std::string, bool> count_refs;
  std::map<std::string, Bytes> env;  // generated terminal values, last-wins
};

// Delimiters that must not appear inside a value generated in this scope.
void collect_forbidden(const FormatNode& n, std::vector<Bytes>& forbidden) {
  if (n.boundary.kind == BoundaryKind::Delimited) forbidden.push_back(n.boundary.delim);
}

Bytes random_value(RandomCtx& ctx, std::size_t len, const std::vector<Bytes>& forbidden) {
  if (forbidden.empty()) return ctx.rng.bytes(len);
  // Exclude every byte occurring in a forbidden string; conservative but
  // guarantees no forbidden substring can appear.
  std::vector<std::uint8_t> allowed;
  bool banned[256] = {};
  for (const auto& f : forbidden)
    for (std::uint8_t b : f) banned[b] = true;
  for (int b = 0; b < 256; ++b)
    if (!banned[b]) allowed.push_back(static_cast<std::uint8_t>(b));
  Bytes out(len);
  for (auto& b : out) b = allowed[ctx.rng.below(allowed.size())];
  return out;
}

AstNode random_node(RandomCtx& ctx, const FormatNode& g, const NodePath& path,
                    std::vector<Bytes> forbidden) {
  AstNode n;
  n.graph_ref = path;
  collect_forbidden(g, forbidden);
  switch (g.type) {
    case NodeType::Terminal: {
      if (g.derivation.kind != DerivationKind::None) break;  // engine-owned
      std::size_t len = g.boundary.kind == BoundaryKind::Fixed ? g.boundary.size
                                                               : ctx.rng.below(33);
      if (ctx.count_refs.count(g.name) && g.boundary.kind == BoundaryKind::Fixed) {
        n.value = be_encode(ctx.rng.below(9), len);
        ctx.env[g.name] = n.value;
        break;
      }
      n.value = random_value(ctx, len, forbidden);
      auto st = ctx.steering.find(g.name);
      if (st != ctx.steering.end() && ctx.rng.below(2) == 0) {
        const Bytes& expected = st->second[ctx.rng.below(st->second.size())];
        bool clean = true;
        for (const auto& f : forbidden)
          if (contains_subseq(expected, f)) clean = false;
        if (g.boundary.kind == BoundaryKind::Fixed && expected.size() != g.boundary.size)
          clean = false;
        if (clean) n.value = expected;
      }
      ctx.env[g.name] = n.value;
      break;
    }
    case NodeType::Sequence: {
      NodePath child_path = path;
      for (std::size_t i = 0; i < g.children.size(); ++i) {
        child_path.push_back(i);
        n.children.push_back(random_node(ctx, g.children[i], child_path, forbidden));
        child_path.pop_back();
      }
      break;
    }
    case NodeType::Optional: {
      auto it = ctx.env.find(g.presence->ref);
      n.present = it != ctx.env.end() && it->second == g.presence->expected;
      if (n.present) {
        NodePath child_path = path;
        child_path.push_back(0);
        n.children.push_back(random_node(ctx, g.children[0], child_path, forbidden));
      }
      break;
    }
    case NodeType::Repetition:
    case NodeType::Tabular: {
      std::size_t count = ctx.rng.below(9);
      if (g.boundary.kind == BoundaryKind::Counter) {
        auto it = ctx.env.find(g.boundary.ref);
        const FormatNode* ref = ctx.graph.find(g.boundary.ref);
        if (ref && ref->derivation.kind == DerivationKind::None && it != ctx.env.end())
          count = static_cast<std::size_t>(be_decode(it->second));
      }
      NodePath child_path = path;
      child_path.push_back(0);
      for (std::size_t i = 0; i < count; ++i)
        n.children.push_back(random_node(ctx, g.children[0], child_path, forbidden));
      break;
    }
  }
  return n;
}

}  // namespace

MessageAst random_ast(const FormatGraph& graph, std::uint64_t rng_seed) {
  RandomCtx ctx{Prng(rng_seed), graph, {}, {}, {}};
  std::function<void(const FormatNode&)> scan = [&](const FormatNode& n) {
    if (n.presence) ctx.steering[n.presence->ref].push_back(n.presence->expected);
    if (n.boundary.kind == BoundaryKind::Counter) {
      const FormatNode* ref = graph.find(n.boundary.ref);
      if (ref && ref->derivation.kind == DerivationKind::None)
        ctx.count_refs[n.boundary.ref] = true;
    }
    for (const auto& c : n.children) scan(c);
  };
  scan(graph.root);

  MessageAst ast;
  ast.graph = &graph;
  ast.root = random_node(ctx, graph.root, {}, {});
  return ast;
}

namespace {

ordered_json node_to_json(const FormatNode& g, const AstNode& n) {
  ordered_json j;
  j["node"] = g.name;
  switch (g.type) {
    case NodeType::Terminal:
      j["value"] = to_hex(n.value);
      break;
    case NodeType::Sequence: {
      ordered_json arr = ordered_json::array();
      for (std::size_t i = 0; i < g.children.size(); ++i)
        arr.push_back(node_to_json(g.children[i], n.children[i]));
      j["children"] = std::move(arr);
      break;
    }
    case NodeType::Optional:
      j["present"] = n.present;
      if (n.present) j["child"] = node_to_json(g.children[0], n.children[0]);
      break;
    case NodeType::Repetition:
    case NodeType::Tabular: {
      ordered_json arr = ordered_json::array();
      for (const auto& e : n.children) arr.push_back(node_to_json(g.children[0], e));
      j["elements"] = std::move(arr);
      break;
    }
  }
  return j;
}

AstNode node_from_json(const FormatNode& g, const NodePath& path, const ordered_json& j) {
  if (!j.contains("node") || j["node"].get<std::string>() != g.name)
    throw ProtoError("ast.json", "expected node " + g.name);
  AstNode n;
  n.graph_ref = path;
  switch (g.type) {
    case NodeType::Terminal:
      n.value = from_hex(j.value("value", std::string()));
      break;
    case NodeType::Sequence: {
      const auto& arr = j.at("children");
      if (arr.size() != g.children.size())
        throw ProtoError("ast.json", "wrong child count for " + g.name);
      NodePath child_path = path;
      for (std::size_t i = 0; i < g.children.size(); ++i) {
        child_path.push_back(i);
        n.children.push_back(node_from_json(g.children[i], child_path, arr[i]));
        child_path.pop_back();
      }
      break;
    }
    case NodeType::Optional: {
      n.present = j.value("present", false);
      if (n.present) {
        NodePath child_path = path;
        child_path.push_back(0);
        n.children.push_back(node_from_json(g.children[0], child_path, j.at("child")));
      }
      break;
    }
    case NodeType::Repetition:
    case NodeType::Tabular: {
      NodePath child_path = path;
      child_path.push_back(0);
      for (const auto& e : j.at("elements"))
        n.children.push_back(node_from_json(g.children[0], child_path, e));
      break;
    }
  }
  return n;
}

void node_to_script(const FormatNode& g, const AstNode& n, std::ostringstream& os) {
  switch (g.type) {
    case NodeType::Terminal:
      os << "V " << g.name << " " << (n.value.empty() ? "-" : to_hex(n.value)) << "\n";
      break;
    case NodeType::Sequence:
      for (std::size_t i = 0; i < g.children.size(); ++i)
        node_to_script(g.children[i], n.children[i], os);
      break;
    case NodeType::Optional:
      os << "P " << g.name << " " << (n.present ? 1 : 0) << "\n";
      if (n.present) node_to_script(g.children[0], n.children[0], os);
      break;
    case NodeType::Repetition:
    case NodeType::Tabular:
      os << "N " << g.name << " " << n.children.size() << "\n";
      for (const auto& e : n.children) node_to_script(g.children[0], e, os);
      break;
  }
}

struct ScriptCursor {
  std::vector<std::array<std::string, 3>> lines;
  std::size_t pos = 0;

  std::array<std::string, 3> take(const std::string& op, const std::string& name) {
    if (pos >= lines.size())
      throw ProtoError("ast.script", "script ended before " + op + " " + name);
    auto line = lines[pos++];
    if (line[0] != op || line[1] != name)
      throw ProtoError("ast.script", "expected '" + op + " " + name + "', got '" + line[0] +
                                         " " + line[1] + "'");
    return line;
  }
};

AstNode node_from_script(const FormatNode& g, const NodePath& path, ScriptCursor& cur) {
  AstNode n;
  n.graph_ref = path;
  switch (g.type) {
    case NodeType::Terminal: {
      auto line = cur.take("V", g.name);
      if (line[2] != "-") n.value = from_hex(line[2]);
      break;
    }
    case NodeType::Sequence: {
      NodePath child_path = path;
      for (std::size_t i = 0; i < g.children.size(); ++i) {
        child_path.push_back(i);
        n.children.push_back(node_from_script(g.children[i], child_path, cur));
        child_path.pop_back();
      }
      break;
    }
    case NodeType::Optional: {
      auto line = cur.take("P", g.name);
      n.present = line[2] == "1";
      if (n.present) {
        NodePath child_path = path;
        child_path.push_back(0);
        n.children.push_back(node_from_script(g.children[0], child_path, cur));
      }
      break;
    }
    case NodeType::Repetition:
    case NodeType::Tabular: {
      auto line = cur.take("N", g.name);
      std::size_t count = std::stoull(line[2]);
      NodePath child_path = path;
      child_path.push_back(0);
      for (std::size_t i = 0; i < count; ++i)
        n.children.push_back(node_from_script(g.children[0], child_path, cur));
      break;
    }
  }
  return n;
}

}  // namespace

std::string ast_to_json(const MessageAst& ast) {
  return node_to_json(ast.graph->root, ast.root).dump(2) + "\n";
}

MessageAst ast_from_json(const FormatGraph& graph, const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const std::exception& e) {
    throw ProtoError("ast.json", e.what());
  }
  MessageAst ast;
  ast.graph = &graph;
  ast.root = node_from_json(graph.root, {}, j);
  return ast;
}

std::string ast_to_script(const MessageAst& ast) {
  std::ostringstream os;
  node_to_script(ast.graph->root, ast.root, os);
  return os.str();
}

MessageAst ast_from_script(const FormatGraph& graph, const std::string& script) {
  ScriptCursor cur;
  std::istringstream is(script);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::array<std::string, 3> parts;
    ls >> parts[0] >> parts[1] >> parts[2];
    cur.lines.push_back(parts);
  }
  MessageAst ast;
  ast.graph = &graph;
  ast.root = node_from_script(graph.root, {}, cur);
  if (cur.pos != cur.lines.size())
    throw ProtoError("ast.script", "trailing script lines");
  return ast;
}

}  // namespace protoobf
