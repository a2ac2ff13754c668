#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "protoobf/protocols.hpp"
#include "protoobf/spec_dsl.hpp"

using namespace protoobf;

namespace {

const char* kTiny = R"(
protocol tiny {
  node root { type: sequence boundary: end children: [len, body, tail] }
  node len  { type: terminal boundary: fixed(1) derives: length_of(body) }
  node body { type: sequence boundary: length(len) children: [word] }
  node word { type: terminal boundary: fixed(2) }
  node tail { type: optional boundary: delegated present_if: word == 0xbeef child: extra }
  node extra { type: terminal boundary: delimited(0x00) }
  root: root
}
)";

bool throws_rule(const std::string& text, const std::string& rule) {
  try {
    parse_spec(text);
  } catch (const ProtoError& e) {
    return std::string(e.what()).rfind(rule, 0) == 0;
  }
  return false;
}

}  // namespace

TEST_CASE("parse builds the expected structure") {
  FormatGraph g = parse_spec(kTiny);
  CHECK(g.name == "tiny");
  CHECK(g.root.name == "root");
  REQUIRE(g.find("len") != nullptr);
  CHECK(g.find("len")->derivation.kind == DerivationKind::LengthOf);
  CHECK(g.find("len")->derivation.ref == "body");
  CHECK(g.find("body")->boundary.kind == BoundaryKind::Length);
  CHECK(g.find("body")->boundary.ref == "len");
  REQUIRE(g.find("tail")->presence.has_value());
  CHECK(g.find("tail")->presence->ref == "word");
  CHECK(g.find("tail")->presence->expected == Bytes{0xbe, 0xef});
  CHECK(g.find("extra")->boundary.delim == Bytes{0x00});
  CHECK(validate(g).ok());
}

TEST_CASE("print_spec round-trips") {
  FormatGraph g = parse_spec(kTiny);
  std::string canon = print_spec(g);
  FormatGraph h = parse_spec(canon);
  CHECK(graph_equal(g, h));
  CHECK(print_spec(h) == canon);  // canonical form is a fixed point
}

TEST_CASE("spec_hash is a stable function of structure") {
  FormatGraph g = parse_spec(kTiny);
  CHECK(spec_hash(g).size() == 32);
  CHECK(to_hex(spec_hash(g)) == to_hex(spec_hash(parse_spec(print_spec(g)))));
  // comments and whitespace do not affect the hash
  std::string spaced = std::string("# lead comment\n") + kTiny;
  CHECK(to_hex(spec_hash(parse_spec(spaced))) == to_hex(spec_hash(g)));
}

TEST_CASE("syntax errors name the location") {
  try {
    parse_spec("protocol p {\n  node r { type: sequence boundary oops }\n root: r\n}");
    FAIL("expected a syntax error");
  } catch (const ProtoError& e) {
    std::string w = e.what();
    CHECK(w.rfind("dsl.syntax", 0) == 0);
    CHECK(w.find("2:") != std::string::npos);  // line number of the bad token
  }
}

TEST_CASE("semantic errors") {
  // duplicate node name
  CHECK(throws_rule(R"(protocol p {
    node r { type: sequence boundary: end children: [a] }
    node a { type: terminal boundary: fixed(1) }
    node a { type: terminal boundary: fixed(1) }
    root: r })",
                    "dsl.semantic"));
  // node referenced twice in the tree
  CHECK(throws_rule(R"(protocol p {
    node r { type: sequence boundary: end children: [a, a] }
    node a { type: terminal boundary: fixed(1) }
    root: r })",
                    "dsl.semantic"));
  // defined but unreachable node
  CHECK(throws_rule(R"(protocol p {
    node r { type: sequence boundary: end children: [a] }
    node a { type: terminal boundary: fixed(1) }
    node ghost { type: terminal boundary: fixed(1) }
    root: r })",
                    "dsl.semantic"));
  // odd hex digit count in a byte literal
  CHECK(throws_rule(R"(protocol p {
    node r { type: terminal boundary: delimited(0x0) }
    root: r })",
                    "dsl.syntax"));
}

TEST_CASE("validation failures surface as dsl.validate") {
  CHECK(throws_rule(R"(protocol p {
    node r { type: sequence boundary: end children: [body] }
    node body { type: terminal boundary: length(ghost) }
    root: r })",
                    "dsl."));
}

TEST_CASE("bundled specs survive canonicalization") {
  for (const ProtocolBundle* b : all_bundles()) {
    FormatGraph g = parse_spec(b->spec);
    CHECK(validate(g).ok());
    CHECK(graph_equal(g, parse_spec(print_spec(g))));
  }
}
