#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "protoobf/spec_dsl.hpp"
#include "protoobf/transform_catalog.hpp"

using namespace protoobf;

namespace {

const char* kTwoFields = R"(
protocol two {
  node root { type: sequence boundary: end children: [a, b] }
  node a { type: terminal boundary: fixed(1) }
  node b { type: terminal boundary: fixed(2) }
  root: root
}
)";

TransformRecord rec(TransformKind k, const FormatGraph& g, const std::string& node,
                    TransformParams p = {}) {
  return TransformRecord{k, g.index.at(node), p, phase_of(k)};
}

}  // namespace

TEST_CASE("split arithmetic is exact over all one-byte pairs") {
  for (SplitKind k : {SplitKind::Add, SplitKind::Sub, SplitKind::Xor}) {
    for (int v = 0; v < 256; ++v) {
      for (int r = 0; r < 256; ++r) {
        Bytes vb{static_cast<std::uint8_t>(v)}, rb{static_cast<std::uint8_t>(r)};
        auto [p1, p2] = split_forward(k, vb, rb, 0);
        if (split_combine(k, p1, p2) != vb) {
          FAIL("split mismatch kind=" << static_cast<int>(k) << " v=" << v << " r=" << r);
        }
      }
    }
  }
  CHECK(true);  // reached without a single mismatch
}

TEST_CASE("split worked example") {
  // v = 0x05 with r = 0x03: additive split emits r then v - r
  auto [p1, p2] = split_forward(SplitKind::Add, Bytes{0x05}, Bytes{0x03}, 0);
  CHECK(p1 == Bytes{0x03});
  CHECK(p2 == Bytes{0x02});
}

TEST_CASE("concatenation split covers every offset") {
  for (std::size_t w : {std::size_t{2}, std::size_t{4}}) {
    Bytes v(w);
    for (std::size_t i = 0; i < w; ++i) v[i] = static_cast<std::uint8_t>(0xa0 + i);
    for (std::size_t off = 1; off < w; ++off) {
      auto [p1, p2] = split_forward(SplitKind::Cat, v, {}, off);
      CHECK(p1.size() == off);
      CHECK(split_combine(SplitKind::Cat, p1, p2) == v);
    }
  }
}

TEST_CASE("value ops invert over all one-byte values") {
  for (ConstOp op : {ConstOp::Add, ConstOp::Sub, ConstOp::Xor}) {
    std::vector<ValueOp> ops{{op, Bytes{0x5a}}};
    for (int v = 0; v < 256; ++v) {
      Bytes vb{static_cast<std::uint8_t>(v)};
      if (invert_value_ops(ops, apply_value_ops(ops, vb)) != vb)
        FAIL("const op mismatch op=" << static_cast<int>(op) << " v=" << v);
    }
  }
  // stacked ops invert as a pipeline
  std::vector<ValueOp> stack{{ConstOp::Add, Bytes{0x11}},
                             {ConstOp::Xor, Bytes{0xf0}},
                             {ConstOp::Sub, Bytes{0x07}}};
  CHECK(invert_value_ops(stack, apply_value_ops(stack, Bytes{0x2a})) == Bytes{0x2a});
  // constant width must match the value width
  CHECK_THROWS_AS(apply_value_ops({{ConstOp::Add, Bytes{0x01, 0x02}}}, Bytes{0x05}),
                  ProtoError);
}

TEST_CASE("split transform rewrites a terminal into a tagged group") {
  FormatGraph g = parse_spec(kTwoFields);
  FormatGraph h = apply_transform(g, rec(TransformKind::SplitAdd, g, "b"));
  CHECK(validate(h).ok());
  CHECK(h.find("b") == nullptr);  // replaced by a fresh-named group
  const FormatNode* group = nullptr;
  for (const auto& path : dfs_order(h))
    if (h.at(path).origin == "b" && h.at(path).role == NodeRole::SplitGroup)
      group = &h.at(path);
  REQUIRE(group != nullptr);
  CHECK(group->role == NodeRole::SplitGroup);
  CHECK(group->split_kind == SplitKind::Add);
  REQUIRE(group->children.size() == 2);
  CHECK(group->children[0].part_index == 1);
  CHECK(group->children[1].part_index == 2);
  CHECK(group->children[0].boundary.size == 2);  // additive parts keep the width

  // parts cannot be split again, and the group resists pad insertion: keeps
  // wire growth linear in the budget instead of exponential
  NodePath group_path;
  for (const auto& path : dfs_order(h))
    if (h.at(path).origin == "b" && h.at(path).role == NodeRole::SplitGroup)
      group_path = path;
  auto group_kinds = applicable(h, group_path);
  CHECK(group_kinds.count(TransformKind::PadInsert) == 0);
  for (std::size_t i = 0; i < 2; ++i) {
    NodePath part = group_path;
    part.push_back(i);
    auto kinds = applicable(h, part);
    CHECK(kinds.count(TransformKind::SplitAdd) == 0);
    CHECK(kinds.count(TransformKind::SplitCat) == 0);
    CHECK(kinds.count(TransformKind::ConstXor) == 1);  // value ops still fine
    TransformRecord again{TransformKind::SplitXor, part, {}, Phase::Down};
    CHECK_THROWS_AS(apply_transform(h, again), ProtoError);
  }
}

TEST_CASE("const transform stacks value ops") {
  FormatGraph g = parse_spec(kTwoFields);
  TransformParams p;
  p.constant = Bytes{0x10};
  FormatGraph h = apply_transform(g, rec(TransformKind::ConstXor, g, "a", p));
  REQUIRE(h.find("a")->value_ops.size() == 1);
  CHECK(h.find("a")->value_ops[0].op == ConstOp::Xor);
  // wrong-width constant is rejected
  p.constant = Bytes{0x10, 0x20};
  CHECK_THROWS_AS(apply_transform(g, rec(TransformKind::ConstXor, g, "a", p)), ProtoError);
}

TEST_CASE("read-from-end toggles mirror parity") {
  FormatGraph g = parse_spec(kTwoFields);
  FormatGraph h = apply_transform(g, rec(TransformKind::ReadFromEnd, g, "b"));
  CHECK(h.find("b")->mirror == 1);
  FormatGraph h2 = apply_transform(h, rec(TransformKind::ReadFromEnd, h, "b"));
  CHECK(h2.find("b")->mirror == 2);
  // double mirror is byte-order identity on the wire
  for (std::size_t len = 0; len <= 64; ++len) {
    Bytes region(len);
    for (std::size_t i = 0; i < len; ++i) region[i] = static_cast<std::uint8_t>(i * 7);
    Bytes twice = region;
    std::reverse(twice.begin(), twice.end());
    std::reverse(twice.begin(), twice.end());
    CHECK(twice == region);
  }
}

TEST_CASE("pad insertion respects the end-consumer limit") {
  FormatGraph g = parse_spec(R"(
protocol p {
  node root { type: sequence boundary: end children: [a, rest] }
  node a { type: terminal boundary: fixed(1) }
  node rest { type: terminal boundary: end }
  root: root
}
)");
  // `rest` consumes the remainder, so a pad may go at index 0 or 1, not 2
  CHECK(pad_index_limit(g.root) == 1);
  TransformParams p;
  p.index = 2;
  p.width = 1;
  CHECK_THROWS_AS(apply_transform(g, rec(TransformKind::PadInsert, g, "root", p)),
                  ProtoError);
  p.index = 1;
  FormatGraph h = apply_transform(g, rec(TransformKind::PadInsert, g, "root", p));
  CHECK(validate(h).ok());
  CHECK(h.root.children.size() == 3);
  CHECK(h.root.children[1].role == NodeRole::Pad);
}

TEST_CASE("width-growing transforms are barred under narrow length carriers") {
  FormatGraph g = parse_spec(R"(
protocol p {
  node root { type: sequence boundary: end children: [bc, data] }
  node bc { type: terminal boundary: fixed(1) derives: length_of(data) }
  node data { type: sequence boundary: length(bc) children: [x] }
  node x { type: terminal boundary: fixed(2) }
  root: root
}
)");
  auto inside = applicable(g, g.index.at("x"));
  // a 1-byte derived length saturates once pads/splits widen the region
  CHECK(!inside.count(TransformKind::SplitAdd));
  CHECK(!inside.count(TransformKind::PadInsert));
  // width-stable rewrites remain available
  CHECK(inside.count(TransformKind::SplitCat));
  CHECK(inside.count(TransformKind::ConstXor));
}

TEST_CASE("applicable kinds really apply") {
  FormatGraph g = parse_spec(kTwoFields);
  for (const auto& path : dfs_order(g)) {
    for (TransformKind k : applicable(g, path)) {
      TransformParams p;
      switch (k) {
        case TransformKind::SplitCat: p.offset = 1; break;
        case TransformKind::ConstAdd:
        case TransformKind::ConstSub:
        case TransformKind::ConstXor:
          p.constant = Bytes(g.at(path).boundary.size, 0x3c);
          break;
        case TransformKind::BoundaryChange: p.width = 2; break;
        case TransformKind::PadInsert: p.width = 1; break;
        case TransformKind::ChildMove: {
          auto swaps = valid_child_swaps(g, path);
          if (swaps.empty()) continue;
          p.child_i = swaps[0].first;
          p.child_j = swaps[0].second;
          break;
        }
        default: break;
      }
      FormatGraph h = apply_transform(g, TransformRecord{k, path, p, phase_of(k)});
      CHECK(validate(h).ok());
    }
  }
}

TEST_CASE("child moves are restricted to order-insensitive pairs") {
  FormatGraph g = parse_spec(R"(
protocol p {
  node root { type: sequence boundary: end children: [a, b, c] }
  node a { type: terminal boundary: fixed(1) }
  node b { type: terminal boundary: fixed(2) }
  node c { type: terminal boundary: end }
  root: root
}
)");
  auto swaps = valid_child_swaps(g, g.index.at("root"));
  for (auto [i, j] : swaps) {
    CHECK(i < j);
    CHECK(j < 2);  // nothing may move past the end-consuming child
    TransformParams p;
    p.child_i = i;
    p.child_j = j;
    FormatGraph h = apply_transform(g, rec(TransformKind::ChildMove, g, "root", p));
    CHECK(validate(h).ok());
  }
}

TEST_CASE("tab split reorders columns behind one counter") {
  FormatGraph g = parse_spec(R"(
protocol p {
  node root { type: sequence boundary: end children: [n, tab] }
  node n { type: terminal boundary: fixed(1) derives: count_of(tab) }
  node tab { type: tabular boundary: counter(n) child: row }
  node row { type: sequence boundary: delegated children: [k, v] }
  node k { type: terminal boundary: fixed(1) }
  node v { type: terminal boundary: fixed(1) }
  root: root
}
)");
  FormatGraph h = apply_transform(g, rec(TransformKind::TabSplit, g, "tab"));
  CHECK(validate(h).ok());
  const FormatNode* group = nullptr;
  for (const auto& path : dfs_order(h))
    if (h.at(path).origin == "tab" && h.at(path).role == NodeRole::TabGroup)
      group = &h.at(path);
  REQUIRE(group != nullptr);
  CHECK(group->role == NodeRole::TabGroup);
  REQUIRE(group->children.size() == 2);
  for (const auto& part : group->children) {
    CHECK(part.type == NodeType::Tabular);
    CHECK(part.role == NodeRole::TabPart);
  }
}

TEST_CASE("every kind reports constraints text") {
  for (int k = 0; k <= static_cast<int>(TransformKind::ChildMove); ++k) {
    auto kind = static_cast<TransformKind>(k);
    CHECK(!constraints(kind).empty());
    CHECK(transform_kind_from_name(transform_kind_name(kind)) == kind);
  }
}
