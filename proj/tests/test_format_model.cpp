#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "protoobf/format_model.hpp"

using namespace protoobf;

namespace {

FormatNode term(std::string name, Boundary b) {
  FormatNode n;
  n.name = std::move(name);
  n.type = NodeType::Terminal;
  n.boundary = std::move(b);
  return n;
}

FormatNode seq(std::string name, Boundary b, std::vector<FormatNode> kids) {
  FormatNode n;
  n.name = std::move(name);
  n.type = NodeType::Sequence;
  n.boundary = std::move(b);
  n.children = std::move(kids);
  return n;
}

FormatGraph make(FormatNode root) {
  FormatGraph g;
  g.name = "t";
  g.root = std::move(root);
  g.rebuild_index();
  return g;
}

FormatGraph simple() {
  return make(seq("root", Boundary::end(),
                  {term("a", Boundary::fixed(2)), term("b", Boundary::fixed(1))}));
}

}  // namespace

TEST_CASE("index, find, at, parent_of") {
  FormatGraph g = simple();
  REQUIRE(g.find("b") != nullptr);
  CHECK(g.find("b")->boundary.size == 1);
  CHECK(g.find("nope") == nullptr);
  NodePath pb = g.index.at("b");
  CHECK(g.at(pb).name == "b");
  auto parent = g.parent_of(pb);
  REQUIRE(parent.has_value());
  CHECK(g.at(*parent).name == "root");
  CHECK(!g.parent_of(g.index.at("root")).has_value());
}

TEST_CASE("dfs order is pre-order") {
  FormatGraph g = make(seq("root", Boundary::end(),
                           {seq("s", Boundary::delegated(),
                                {term("x", Boundary::fixed(1))}),
                            term("y", Boundary::fixed(1))}));
  auto order = dfs_order(g);
  REQUIRE(order.size() == 4);
  CHECK(g.at(order[0]).name == "root");
  CHECK(g.at(order[1]).name == "s");
  CHECK(g.at(order[2]).name == "x");
  CHECK(g.at(order[3]).name == "y");
  CHECK(dfs_precedes(order[1], order[3]));
  CHECK(dfs_precedes(order[1], order[2]));  // parent precedes child
  CHECK(!dfs_precedes(order[3], order[1]));
}

TEST_CASE("type/boundary consistency matrix") {
  CHECK(validate(simple()).ok());

  // terminal with a counter boundary is never valid
  FormatGraph g = make(seq("root", Boundary::end(),
                           {term("a", Boundary::counter("b")), term("b", Boundary::fixed(1))}));
  CHECK(!validate(g).ok());

  // optional must delegate
  FormatNode opt;
  opt.name = "o";
  opt.type = NodeType::Optional;
  opt.boundary = Boundary::fixed(1);
  opt.presence = PresenceCondition{"a", Bytes{0x01}};
  opt.children.push_back(term("c", Boundary::fixed(1)));
  g = make(seq("root", Boundary::end(), {term("a", Boundary::fixed(1)), opt}));
  CHECK(!validate(g).ok());
  g.root.children[1].boundary = Boundary::delegated();
  g.rebuild_index();
  CHECK(validate(g).ok());

  // tabular requires a counter boundary
  FormatNode tab;
  tab.name = "t";
  tab.type = NodeType::Tabular;
  tab.boundary = Boundary::end();
  tab.children.push_back(term("e", Boundary::fixed(1)));
  g = make(seq("root", Boundary::end(), {term("n", Boundary::fixed(1)), tab}));
  CHECK(!validate(g).ok());
  g.root.children[1].boundary = Boundary::counter("n");
  g.rebuild_index();
  CHECK(validate(g).ok());
}

TEST_CASE("reference checks") {
  // length boundary must reference an existing earlier value carrier
  FormatGraph g = make(seq("root", Boundary::end(),
                           {term("len", Boundary::fixed(1)),
                            term("body", Boundary::length("ghost"))}));
  CHECK(!validate(g).ok());
  g.root.children[1].boundary = Boundary::length("len");
  g.rebuild_index();
  CHECK(validate(g).ok());

  // a presence referent must precede the optional in DFS order
  FormatNode opt;
  opt.name = "o";
  opt.type = NodeType::Optional;
  opt.boundary = Boundary::delegated();
  opt.presence = PresenceCondition{"late", Bytes{0x01}};
  opt.children.push_back(term("c", Boundary::fixed(1)));
  g = make(seq("root", Boundary::end(), {opt, term("late", Boundary::fixed(1))}));
  CHECK(!validate(g).ok());
}

TEST_CASE("derivation checks") {
  FormatGraph g = simple();
  g.root.children[0].derivation = {DerivationKind::LengthOf, "b"};
  g.rebuild_index();
  CHECK(validate(g).ok());
  g.root.children[0].derivation.ref = "ghost";
  CHECK(!validate(g).ok());
  // count_of must point at a repetition or tabular
  g.root.children[0].derivation = {DerivationKind::CountOf, "b"};
  CHECK(!validate(g).ok());
}

TEST_CASE("static size") {
  FormatGraph g = simple();
  CHECK(static_size(g.root.children[0]) == 2);
  FormatNode s = seq("s", Boundary::delegated(),
                     {term("a", Boundary::fixed(2)), term("b", Boundary::fixed(1))});
  CHECK(static_size(s) == 3);
  FormatNode d = term("d", Boundary::delimited(Bytes{0x00}));
  CHECK(!static_size(d).has_value());
}

TEST_CASE("structural equality") {
  FormatGraph a = simple(), b = simple();
  CHECK(graph_equal(a, b));
  b.root.children[1].boundary.size = 9;
  CHECK(!graph_equal(a, b));
  b = simple();
  b.root.children[0].value_ops.push_back({ConstOp::Xor, Bytes{0x01, 0x02}});
  CHECK(!graph_equal(a, b));  // annotations count
}

TEST_CASE("validation report carries node and rule") {
  FormatGraph g = make(seq("root", Boundary::end(),
                           {term("a", Boundary::counter("a"))}));
  ValidationReport r = validate(g);
  REQUIRE(!r.ok());
  bool found = false;
  for (const auto& e : r.entries)
    if (e.node == "a" && !e.rule.empty()) found = true;
  CHECK(found);
  CHECK(!r.summary().empty());
}
