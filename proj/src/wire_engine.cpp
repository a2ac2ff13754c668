#include "protoobf/wire_engine.hpp"

#include <algorithm>
#include <map>

#include "protoobf/prng.hpp"

namespace protoobf {

namespace {

// Binding of a transformed-graph node to the original-graph AST subtree it
// stands for. `origin` is the original node name the AST subtree instantiates.
struct Bind {
  AstNode* node = nullptr;
  std::string origin;
};

bool is_prefix(const NodePath& p, const NodePath& q) {
  return q.size() >= p.size() && std::equal(p.begin(), p.end(), q.begin());
}

// Walk from the binding's original node down to the child's origin through
// the original graph, mirroring each step in the AST. Only Sequence and
// (present) Optional steps occur for resolvable children; element scopes are
// handled explicitly by the repetition/tabular logic.
Bind resolve_child(const FormatGraph& orig, const FormatNode& child, const Bind& b) {
  std::string oc = effective_origin(child, orig);
  if (oc.empty() || !b.node) return {};
  if (oc == b.origin) return b;  // wrapper introduced by a rewrite
  auto po = orig.index.find(b.origin);
  auto pc = orig.index.find(oc);
  if (po == orig.index.end() || pc == orig.index.end()) return {};
  const NodePath& p = po->second;
  const NodePath& q = pc->second;
  if (!is_prefix(p, q)) return {};
  AstNode* cur = b.node;
  const FormatNode* gn = &orig.at(p);
  for (std::size_t d = p.size(); d < q.size(); ++d) {
    std::size_t idx = q[d];
    switch (gn->type) {
      case NodeType::Sequence:
        if (idx >= cur->children.size()) return {};
        cur = &cur->children[idx];
        break;
      case NodeType::Optional:
        if (!cur->present || cur->children.empty()) return {};
        cur = &cur->children[0];
        break;
      default:
        return {};
    }
    gn = &gn->children[idx];
  }
  return {cur, oc};
}

AstNode make_skeleton(const FormatNode& g, const NodePath& path) {
  AstNode n;
  n.graph_ref = path;
  if (g.type == NodeType::Sequence) {
    NodePath cp = path;
    for (std::size_t i = 0; i < g.children.size(); ++i) {
      cp.push_back(i);
      n.children.push_back(make_skeleton(g.children[i], cp));
      cp.pop_back();
    }
  }
  return n;
}

std::size_t logical_width(const FormatNode& n) {
  if (n.type == NodeType::Terminal) return n.boundary.size;
  if (n.role == NodeRole::SplitGroup) {
    const FormatNode* p1 = nullptr;
    const FormatNode* p2 = nullptr;
    for (const auto& c : n.children) {
      if (c.part_index == 1) p1 = &c;
      if (c.part_index == 2) p2 = &c;
    }
    if (!p1 || !p2) throw ProtoError("wire.internal", "split group missing parts");
    return n.split_kind == SplitKind::Cat ? logical_width(*p1) + logical_width(*p2)
                                          : logical_width(*p1);
  }
  throw ProtoError("wire.internal", "logical width of a non-carrier");
}

// ---------------------------------------------------------------- serialize

struct SerCtx {
  const FormatGraph* orig;
  const FormatGraph* trans;
  std::uint64_t msg_seed;
  int pass;  // 1 measures, 2 emits with derived values filled in
  std::map<std::string, std::uint64_t> occ;
  std::map<std::pair<std::string, std::uint64_t>, std::size_t> region_size;
  std::map<std::pair<std::string, std::uint64_t>, std::uint64_t> elem_count;
  struct DerivedReq {
    std::string name;
    std::uint64_t occ;
    DerivationKind kind;
    std::string ref;
    std::size_t width;
  };
  std::vector<DerivedReq> requests;
  std::map<std::pair<std::string, std::uint64_t>, Bytes> derived_vals;
  std::map<std::string, Bytes> env;  // logical values by transformed node name

  void reset_pass() {
    occ.clear();
    region_size.clear();
    elem_count.clear();
    env.clear();
  }
};

bool ref_is_derived(const SerCtx& ctx, const std::string& ref) {
  const FormatNode* r = ctx.trans->find(ref);
  return r && r->derivation.kind != DerivationKind::None;
}

Bytes derived_value(SerCtx& ctx, const FormatNode& n, std::uint64_t my_occ,
                    std::size_t width) {
  if (ctx.pass == 1) {
    ctx.requests.push_back({n.name, my_occ, n.derivation.kind, n.derivation.ref, width});
    return Bytes(width, 0);
  }
  return ctx.derived_vals.at({n.name, my_occ});
}

void ser_node(SerCtx& ctx, const FormatNode& n, const Bind& b, Bytes& buf,
              const Bytes* imposed);

// Logical value of a carrier (Terminal or SplitGroup).
Bytes carrier_value(SerCtx& ctx, const FormatNode& n, const Bind& b,
                    std::uint64_t my_occ, const Bytes* imposed, std::size_t width) {
  if (imposed) return *imposed;
  if (n.derivation.kind != DerivationKind::None) return derived_value(ctx, n, my_occ, width);
  std::string oc = effective_origin(n, *ctx.orig);
  if (oc.empty())  // pad (or a pad replaced by a split group): fresh randomness
    return keyed_bytes(ctx.msg_seed, fnv1a(n.name), my_occ, width);
  if (!b.node)
    throw ProtoError("wire.missing_value", "no AST value bound for " + n.name);
  return b.node->value;
}

void ser_elements(SerCtx& ctx, const FormatNode& n, const Bind& b, Bytes& buf) {
  // b.node is the original Repetition/Tabular instance; children are elements.
  const FormatNode* orig_owner = ctx.orig->find(b.origin);
  if (!b.node || !orig_owner)
    throw ProtoError("wire.missing_value", "no elements bound for " + n.name);
  const std::string& elem_name = orig_owner->children[0].name;
  for (auto& elem : b.node->children) {
    Bind eb{const_cast<AstNode*>(&elem), elem_name};
    ser_node(ctx, n.children[0], resolve_child(*ctx.orig, n.children[0], eb), buf,
             nullptr);
  }
}

void ser_node(SerCtx& ctx, const FormatNode& n, const Bind& b, Bytes& buf,
              const Bytes* imposed) {
  std::uint64_t my_occ = ctx.occ[n.name]++;
  std::size_t start = buf.size();

  if (n.type == NodeType::Terminal || n.role == NodeRole::SplitGroup) {
    std::size_t width = logical_width(n);
    Bytes v = carrier_value(ctx, n, b, my_occ, imposed, width);
    ctx.env[n.name] = v;
    Bytes wire = apply_value_ops(n.value_ops, v);

    if (n.role == NodeRole::SplitGroup) {
      if (wire.size() != width)
        throw ProtoError("wire.value_width", n.name + " expects " +
                                                 std::to_string(width) + " bytes, got " +
                                                 std::to_string(wire.size()));
      Bytes r;
      if (n.split_kind != SplitKind::Cat)
        r = keyed_bytes(ctx.msg_seed, fnv1a(n.name + "#r"), my_occ, width);
      auto [v1, v2] = split_forward(n.split_kind, wire, r, n.cat_offset);
      for (const auto& c : n.children) {
        if (c.part_index == 1)
          ser_node(ctx, c, {}, buf, &v1);
        else if (c.part_index == 2)
          ser_node(ctx, c, {}, buf, &v2);
        else
          ser_node(ctx, c, {}, buf, nullptr);  // pads added inside the group
      }
    } else {
      switch (n.boundary.kind) {
        case BoundaryKind::Fixed:
          if (wire.size() != n.boundary.size)
            throw ProtoError("wire.value_width",
                             n.name + " expects " + std::to_string(n.boundary.size) +
                                 " bytes, got " + std::to_string(wire.size()));
          buf.insert(buf.end(), wire.begin(), wire.end());
          break;
        case BoundaryKind::Delimited:
          if (contains_subseq(wire, n.boundary.delim))
            throw ProtoError("wire.delim_collision",
                             n.name + " value contains its delimiter");
          buf.insert(buf.end(), wire.begin(), wire.end());
          buf.insert(buf.end(), n.boundary.delim.begin(), n.boundary.delim.end());
          break;
        case BoundaryKind::Length:
        case BoundaryKind::End:
          buf.insert(buf.end(), wire.begin(), wire.end());
          break;
        default:
          throw ProtoError("wire.internal", "terminal with boundary " +
                                                std::string(boundary_kind_name(n.boundary.kind)));
      }
    }
  } else if (n.type == NodeType::Sequence) {
    // Plain sequences, BoundaryChange groups, TabGroups and RepGroups all
    // reduce to child concatenation; parts pull their elements themselves.
    for (const auto& c : n.children)
      ser_node(ctx, c, resolve_child(*ctx.orig, c, b), buf, nullptr);
  } else if (n.type == NodeType::Optional) {
    if (!b.node)
      throw ProtoError("wire.missing_value", "no AST node bound for " + n.name);
    bool present = b.node->present;
    if (ctx.pass == 2 && n.presence) {
      auto it = ctx.env.find(n.presence->ref);
      bool should = it != ctx.env.end() && it->second == n.presence->expected;
      if (should != present)
        throw ProtoError("wire.presence",
                         n.name + " presence inconsistent with referent value");
    }
    if (present && !b.node->children.empty()) {
      Bind cb{&b.node->children[0], ctx.orig->find(b.origin)->children[0].name};
      const FormatNode& c = n.children[0];
      ser_node(ctx, c, resolve_child(*ctx.orig, c, cb), buf, nullptr);
    } else if (present) {
      throw ProtoError("wire.missing_value", n.name + " present without a child");
    }
  } else if (n.type == NodeType::Repetition && n.role == NodeRole::Plain) {
    if (!b.node)
      throw ProtoError("wire.missing_value", "no elements bound for " + n.name);
    if (n.boundary.kind == BoundaryKind::Delimited) {
      const FormatNode* orig_owner = ctx.orig->find(b.origin);
      const std::string& elem_name = orig_owner->children[0].name;
      for (auto& elem : b.node->children) {
        std::size_t estart = buf.size();
        Bind eb{&elem, elem_name};
        ser_node(ctx, n.children[0], resolve_child(*ctx.orig, n.children[0], eb), buf,
                 nullptr);
        if (buf.size() == estart)
          throw ProtoError("wire.empty_element", n.name + " element serialized to 0 bytes");
        const Bytes& d = n.boundary.delim;
        if (buf.size() - estart >= d.size() &&
            std::equal(d.begin(), d.end(), buf.begin() + static_cast<std::ptrdiff_t>(estart)))
          throw ProtoError("wire.sentinel",
                           n.name + " element starts with the terminating delimiter");
      }
      buf.insert(buf.end(), n.boundary.delim.begin(), n.boundary.delim.end());
    } else {
      ser_elements(ctx, n, b, buf);
    }
    ctx.elem_count[{n.name, my_occ}] = b.node->children.size();
  } else if (n.type == NodeType::Repetition && n.role == NodeRole::RepPart) {
    ser_elements(ctx, n, b, buf);
  } else if (n.type == NodeType::Tabular) {  // Plain or TabPart
    if (!b.node)
      throw ProtoError("wire.missing_value", "no elements bound for " + n.name);
    std::uint64_t count = b.node->children.size();
    if (ctx.pass == 2 && !ref_is_derived(ctx, n.boundary.ref)) {
      auto it = ctx.env.find(n.boundary.ref);
      if (it == ctx.env.end() || be_decode(it->second) != count)
        throw ProtoError("wire.counter_mismatch",
                         n.name + " element count disagrees with " + n.boundary.ref);
    }
    ser_elements(ctx, n, b, buf);
    ctx.elem_count[{n.name, my_occ}] = count;
  } else {
    throw ProtoError("wire.internal", "unhandled node shape at " + n.name);
  }

  std::size_t size = buf.size() - start;
  ctx.region_size[{n.name, my_occ}] = size;
  if (ctx.pass == 2 && n.boundary.kind == BoundaryKind::Length) {
    auto it = ctx.env.find(n.boundary.ref);
    if (it == ctx.env.end() || be_decode(it->second) != size)
      throw ProtoError("wire.length_mismatch",
                       n.name + " region size disagrees with " + n.boundary.ref);
  }
  if (n.mirror % 2 == 1)
    std::reverse(buf.begin() + static_cast<std::ptrdiff_t>(start), buf.end());
}

}  // namespace

WireMessage serialize(const MessageAst& ast, const ObfuscationPlan& plan,
                      std::uint64_t msg_seed) {
  if (!ast.graph) throw ProtoError("wire.ast", "AST has no graph");
  SerCtx ctx;
  ctx.orig = ast.graph;
  ctx.trans = &plan.final_graph;
  ctx.msg_seed = msg_seed;

  Bind root_bind{const_cast<AstNode*>(&ast.root),
                 effective_origin(plan.final_graph.root, *ast.graph)};
  if (root_bind.origin.empty()) root_bind.origin = ast.graph->root.name;

  for (int pass = 1; pass <= 2; ++pass) {
    ctx.pass = pass;
    ctx.reset_pass();
    Bytes buf;
    ser_node(ctx, plan.final_graph.root, root_bind, buf, nullptr);
    if (pass == 2) return buf;

    for (const auto& req : ctx.requests) {
      std::uint64_t metric;
      if (req.kind == DerivationKind::LengthOf) {
        auto it = ctx.region_size.find({req.ref, req.occ});
        if (it == ctx.region_size.end())
          throw ProtoError("wire.derivation", req.name + " referent " + req.ref +
                                                  " was never serialized");
        metric = it->second;
      } else {
        auto it = ctx.elem_count.find({req.ref, req.occ});
        if (it == ctx.elem_count.end())
          throw ProtoError("wire.derivation", req.name + " referent " + req.ref +
                                                  " was never serialized");
        metric = it->second;
      }
      if (req.width < 8 && metric >= (1ull << (8 * req.width)))
        throw ProtoError("wire.overflow", req.name + " cannot encode " +
                                              std::to_string(metric) + " in " +
                                              std::to_string(req.width) + " bytes");
      ctx.derived_vals[{req.name, req.occ}] = be_encode(metric, req.width);
    }
  }
  throw ProtoError("wire.internal", "unreachable");
}

// -------------------------------------------------------------------- parse

namespace {

struct Reader {
  const std::uint8_t* data;
  std::size_t pos;
  std::size_t end;
  std::size_t remaining() const { return end - pos; }
};

struct ParseCtx {
  const FormatGraph* orig;
  const FormatGraph* trans;
  std::map<std::string, Bytes> env;
  std::vector<std::uint64_t> rep_n;  // active RepGroup element counts
};

std::uint64_t env_number(const ParseCtx& ctx, const std::string& ref,
                         const std::string& user) {
  auto it = ctx.env.find(ref);
  if (it == ctx.env.end())
    throw ProtoError("wire.internal", user + " referent " + ref + " not yet parsed");
  return be_decode(it->second);
}

std::size_t node_extent(const ParseCtx& ctx, const FormatNode& n, std::size_t avail) {
  switch (n.boundary.kind) {
    case BoundaryKind::Fixed:
      return n.boundary.size;
    case BoundaryKind::Length:
      return static_cast<std::size_t>(env_number(ctx, n.boundary.ref, n.name));
    case BoundaryKind::End:
      return avail;
    case BoundaryKind::Counter: {
      auto w = static_size(n.children[0]);
      if (!w) throw ProtoError("wire.internal", n.name + " extent not static");
      return static_cast<std::size_t>(env_number(ctx, n.boundary.ref, n.name)) * *w;
    }
    case BoundaryKind::Delegated: {
      if (n.type == NodeType::Optional) {
        bool present = n.presence && ctx.env.count(n.presence->ref) &&
                       ctx.env.at(n.presence->ref) == n.presence->expected;
        return present ? node_extent(ctx, n.children[0], avail) : 0;
      }
      std::size_t sum = 0;
      for (const auto& c : n.children) sum += node_extent(ctx, c, avail - sum);
      return sum;
    }
    case BoundaryKind::Delimited:
      break;
  }
  throw ProtoError("wire.internal", n.name + " extent not determinable");
}

Bytes take(Reader& r, std::size_t count, const std::string& node) {
  if (r.remaining() < count)
    throw ProtoError("wire.truncated", "input ends inside " + node);
  Bytes out(r.data + r.pos, r.data + r.pos + count);
  r.pos += count;
  return out;
}

std::optional<Bytes> parse_node(ParseCtx& ctx, const FormatNode& n, Reader& r,
                                const Bind& out);

void parse_children(ParseCtx& ctx, const FormatNode& n, Reader& r, const Bind& out) {
  for (const auto& c : n.children)
    parse_node(ctx, c, r, resolve_child(*ctx.orig, c, out));
}

// Pushes skeleton elements onto an original Repetition/Tabular AST node and
// parses the transformed element subtree into element k.
void parse_element(ParseCtx& ctx, const FormatNode& n, Reader& r, const Bind& out,
                   std::size_t k) {
  AstNode* elem = nullptr;
  std::string elem_name;
  if (out.node) {
    const FormatGraph& orig = *ctx.orig;
    const FormatNode* owner = orig.find(out.origin);
    NodePath ep = orig.index.at(out.origin);
    ep.push_back(0);
    while (out.node->children.size() <= k)
      out.node->children.push_back(make_skeleton(owner->children[0], ep));
    elem = &out.node->children[k];
    elem_name = owner->children[0].name;
  }
  Bind eb{elem, elem_name};
  parse_node(ctx, n.children[0], r, elem ? resolve_child(*ctx.orig, n.children[0], eb)
                                         : Bind{});
}

void assign_value(ParseCtx& ctx, const FormatNode& n, const Bind& out, const Bytes& v) {
  ctx.env[n.name] = v;
  if (n.role == NodeRole::Pad || !out.node) return;
  const FormatNode* on = ctx.orig->find(out.origin);
  if (on && on->derivation.kind == DerivationKind::None) out.node->value = v;
}

std::optional<Bytes> parse_content(ParseCtx& ctx, const FormatNode& n, Reader& r,
                                   const Bind& out) {
  if (n.type == NodeType::Terminal) {
    Bytes wire;
    switch (n.boundary.kind) {
      case BoundaryKind::Fixed:
        wire = take(r, n.boundary.size, n.name);
        break;
      case BoundaryKind::Delimited: {
        const Bytes& d = n.boundary.delim;
        std::size_t hit = r.end;
        for (std::size_t i = r.pos; i + d.size() <= r.end; ++i)
          if (std::equal(d.begin(), d.end(), r.data + i)) {
            hit = i;
            break;
          }
        if (hit == r.end)
          throw ProtoError("wire.delimiter", "missing delimiter after " + n.name);
        wire.assign(r.data + r.pos, r.data + hit);
        r.pos = hit + d.size();
        break;
      }
      case BoundaryKind::Length:
        wire = take(r, static_cast<std::size_t>(env_number(ctx, n.boundary.ref, n.name)),
                    n.name);
        break;
      case BoundaryKind::End:
        wire = take(r, r.remaining(), n.name);
        break;
      default:
        throw ProtoError("wire.internal", "terminal boundary at " + n.name);
    }
    Bytes v = invert_value_ops(n.value_ops, wire);
    assign_value(ctx, n, out, v);
    return v;
  }

  if (n.role == NodeRole::SplitGroup) {
    Bytes v1, v2;
    for (const auto& c : n.children) {
      auto v = parse_node(ctx, c, r, Bind{});
      if (c.part_index == 1) v1 = v.value();
      if (c.part_index == 2) v2 = v.value();
    }
    Bytes v = invert_value_ops(n.value_ops, split_combine(n.split_kind, v1, v2));
    assign_value(ctx, n, out, v);
    return v;
  }

  if (n.type == NodeType::Sequence && n.role == NodeRole::RepGroup) {
    std::size_t region = n.boundary.kind == BoundaryKind::Length
                             ? static_cast<std::size_t>(
                                   env_number(ctx, n.boundary.ref, n.name))
                             : r.remaining();
    if (region > r.remaining())
      throw ProtoError("wire.truncated", "input ends inside " + n.name);
    std::size_t fixed_overhead = 0, per_element = 0;
    for (const auto& c : n.children) {
      auto w = static_size(c);
      if (c.role == NodeRole::RepPart) {
        auto ew = static_size(c.children[0]);
        if (!ew) throw ProtoError("wire.repsplit", c.name + " element size not static");
        per_element += *ew;
      } else if (w) {
        fixed_overhead += *w;
      } else {
        throw ProtoError("wire.repsplit", c.name + " size not static");
      }
    }
    if (per_element == 0 || region < fixed_overhead ||
        (region - fixed_overhead) % per_element != 0)
      throw ProtoError("wire.repsplit",
                       n.name + " region does not divide into part runs");
    ctx.rep_n.push_back((region - fixed_overhead) / per_element);
    Reader sub{r.data, r.pos, r.pos + region};
    r.pos += region;
    parse_children(ctx, n, sub, out);
    ctx.rep_n.pop_back();
    if (sub.remaining() != 0)
      throw ProtoError("wire.trailing", "unconsumed bytes inside " + n.name);
    return std::nullopt;
  }

  if (n.type == NodeType::Sequence) {  // Plain / TabGroup / BC group
    switch (n.boundary.kind) {
      case BoundaryKind::Delegated:
        parse_children(ctx, n, r, out);
        break;
      case BoundaryKind::Fixed:
      case BoundaryKind::Length:
      case BoundaryKind::End: {
        std::size_t region =
            n.boundary.kind == BoundaryKind::Fixed ? n.boundary.size
            : n.boundary.kind == BoundaryKind::Length
                ? static_cast<std::size_t>(env_number(ctx, n.boundary.ref, n.name))
                : r.remaining();
        if (region > r.remaining())
          throw ProtoError("wire.truncated", "input ends inside " + n.name);
        Reader sub{r.data, r.pos, r.pos + region};
        r.pos += region;
        parse_children(ctx, n, sub, out);
        if (sub.remaining() != 0)
          throw ProtoError("wire.trailing", "unconsumed bytes inside " + n.name);
        break;
      }
      default:
        throw ProtoError("wire.internal", "sequence boundary at " + n.name);
    }
    return std::nullopt;
  }

  if (n.type == NodeType::Optional) {
    bool present = n.presence && ctx.env.count(n.presence->ref) &&
                   ctx.env.at(n.presence->ref) == n.presence->expected;
    if (out.node) {
      out.node->present = present;
      out.node->children.clear();
    }
    if (present) {
      Bind cb{};
      if (out.node) {
        const FormatNode* on = ctx.orig->find(out.origin);
        NodePath cp = ctx.orig->index.at(out.origin);
        cp.push_back(0);
        out.node->children.push_back(make_skeleton(on->children[0], cp));
        Bind child_b{&out.node->children[0], on->children[0].name};
        cb = resolve_child(*ctx.orig, n.children[0], child_b);
      }
      parse_node(ctx, n.children[0], r, cb);
    }
    return std::nullopt;
  }

  if (n.type == NodeType::Repetition && n.role == NodeRole::RepPart) {
    if (ctx.rep_n.empty())
      throw ProtoError("wire.internal", n.name + " outside a RepGroup");
    std::uint64_t count = ctx.rep_n.back();
    for (std::uint64_t k = 0; k < count; ++k)
      parse_element(ctx, n, r, out, static_cast<std::size_t>(k));
    return std::nullopt;
  }

  if (n.type == NodeType::Repetition) {  // Plain
    switch (n.boundary.kind) {
      case BoundaryKind::Length:
      case BoundaryKind::End: {
        std::size_t region = n.boundary.kind == BoundaryKind::Length
                                 ? static_cast<std::size_t>(
                                       env_number(ctx, n.boundary.ref, n.name))
                                 : r.remaining();
        if (region > r.remaining())
          throw ProtoError("wire.truncated", "input ends inside " + n.name);
        Reader sub{r.data, r.pos, r.pos + region};
        r.pos += region;
        std::size_t k = 0;
        while (sub.remaining() > 0) {
          std::size_t before = sub.pos;
          parse_element(ctx, n, sub, out, k++);
          if (sub.pos == before)
            throw ProtoError("wire.empty_element", n.name + " element consumed 0 bytes");
        }
        break;
      }
      case BoundaryKind::Delimited: {
        const Bytes& d = n.boundary.delim;
        std::size_t k = 0;
        for (;;) {
          if (r.remaining() < d.size())
            throw ProtoError("wire.delimiter", "missing terminator for " + n.name);
          if (std::equal(d.begin(), d.end(), r.data + r.pos)) {
            r.pos += d.size();
            break;
          }
          std::size_t before = r.pos;
          parse_element(ctx, n, r, out, k++);
          if (r.pos == before)
            throw ProtoError("wire.empty_element", n.name + " element consumed 0 bytes");
        }
        break;
      }
      default:
        throw ProtoError("wire.internal", "repetition boundary at " + n.name);
    }
    return std::nullopt;
  }

  if (n.type == NodeType::Tabular) {  // Plain or TabPart
    std::uint64_t count = env_number(ctx, n.boundary.ref, n.name);
    for (std::uint64_t k = 0; k < count; ++k)
      parse_element(ctx, n, r, out, static_cast<std::size_t>(k));
    return std::nullopt;
  }

  throw ProtoError("wire.internal", "unhandled node shape at " + n.name);
}

std::optional<Bytes> parse_node(ParseCtx& ctx, const FormatNode& n, Reader& r,
                                const Bind& out) {
  if (n.mirror % 2 == 1) {
    std::size_t e = node_extent(ctx, n, r.remaining());
    if (e > r.remaining())
      throw ProtoError("wire.truncated", "input ends inside " + n.name);
    Bytes rev(r.data + r.pos, r.data + r.pos + e);
    std::reverse(rev.begin(), rev.end());
    r.pos += e;
    Reader rr{rev.data(), 0, rev.size()};
    auto v = parse_content(ctx, n, rr, out);
    if (rr.remaining() != 0)
      throw ProtoError("wire.trailing", "unconsumed bytes inside " + n.name);
    return v;
  }
  return parse_content(ctx, n, r, out);
}

}  // namespace

MessageAst parse(const WireMessage& wire, const ObfuscationPlan& plan,
                 const FormatGraph& graph) {
  ParseCtx ctx;
  ctx.orig = &graph;
  ctx.trans = &plan.final_graph;

  MessageAst out;
  out.graph = &graph;
  out.root = make_skeleton(graph.root, {});

  Bind root_bind{&out.root, effective_origin(plan.final_graph.root, graph)};
  if (root_bind.origin.empty()) root_bind.origin = graph.root.name;

  Reader r{wire.data(), 0, wire.size()};
  parse_node(ctx, plan.final_graph.root, r, root_bind);
  if (r.remaining() != 0)
    throw ProtoError("wire.trailing", "trailing bytes after the message");
  return out;
}

RoundtripReport roundtrip_check(const FormatGraph& graph, const ObfuscationPlan& plan,
                                std::size_t trials, std::uint64_t seed) {
  RoundtripReport report;
  report.trials = trials;
  for (std::size_t i = 0; i < trials; ++i) {
    MessageAst ast = random_ast(graph, mix_seed(seed, i));
    Bytes wire;
    try {
      wire = serialize(ast, plan, mix_seed(seed, i + 0x9e3779b9ull));
      MessageAst back = parse(wire, plan, graph);
      if (!ast_equal(ast, back)) {
        report.ok = false;
        report.failed_trial = i;
        report.detail = "round-trip mismatch\nwire: " + to_hex(wire) +
                        "\ninput:\n" + ast_to_json(ast) + "parsed:\n" +
                        ast_to_json(back);
        return report;
      }
    } catch (const ProtoError& e) {
      report.ok = false;
      report.failed_trial = i;
      report.detail = std::string("error: ") + e.what() + "\nwire: " + to_hex(wire) +
                      "\ninput:\n" + ast_to_json(ast);
      return report;
    }
  }
  return report;
}

}  // namespace protoobf
