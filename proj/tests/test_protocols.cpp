#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "protoobf/protocols.hpp"
#include "protoobf/spec_dsl.hpp"
#include "protoobf/transform_catalog.hpp"
#include "protoobf/wire_engine.hpp"

using namespace protoobf;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("bundle registry") {
  CHECK(all_bundles().size() == 2);
  CHECK(find_bundle("modbus") == &modbus_bundle());
  CHECK(find_bundle("http") == &http_bundle());
  CHECK(find_bundle("gopher") == nullptr);
  for (const ProtocolBundle* b : all_bundles()) {
    CHECK(!b->notes.empty());
    CHECK(!b->samples.empty());
  }
}

TEST_CASE("embedded specs match the shipped spec files") {
  const char* src = std::getenv("POBF_SOURCE_DIR");
  REQUIRE(src != nullptr);
  for (const ProtocolBundle* b : all_bundles())
    CHECK(slurp(std::string(src) + "/specs/" + b->name + ".pobf") == b->spec);
}

TEST_CASE("specs validate") {
  for (const ProtocolBundle* b : all_bundles()) {
    FormatGraph g = b->graph();
    CHECK(validate(g).ok());
    CHECK(g.name == b->name);
  }
}

TEST_CASE("samples serialize to their golden bytes and round-trip") {
  for (const ProtocolBundle* b : all_bundles()) {
    FormatGraph g = b->graph();
    ObfuscationPlan plain = obfuscate(g, 0, 0);
    for (const auto& s : b->samples) {
      INFO(b->name << "/" << s.name);
      MessageAst ast = ast_from_script(g, s.script);
      Bytes wire = serialize(ast, plain, 0);
      CHECK(to_hex(wire) == to_hex(s.golden));
      MessageAst back = parse(s.golden, plain, g);
      CHECK(ast_equal(ast, back));
      CHECK(ast_to_script(back) == s.script);
    }
  }
}

TEST_CASE("samples survive obfuscated round-trips") {
  for (const ProtocolBundle* b : all_bundles()) {
    FormatGraph g = b->graph();
    for (int budget : {1, 3}) {
      ObfuscationPlan plan = obfuscate(g, budget, 0xabcd);
      for (const auto& s : b->samples) {
        INFO(b->name << "/" << s.name << " budget " << budget);
        MessageAst ast = ast_from_script(g, s.script);
        Bytes wire = serialize(ast, plan, 42);
        CHECK(ast_equal(parse(wire, plan, g), ast));
      }
    }
  }
}

TEST_CASE("most nodes admit at least one transform") {
  for (const ProtocolBundle* b : all_bundles()) {
    FormatGraph g = b->graph();
    std::size_t total = 0, transformable = 0;
    for (const auto& path : dfs_order(g)) {
      ++total;
      if (!applicable(g, path).empty()) ++transformable;
    }
    INFO(b->name << ": " << transformable << "/" << total);
    CHECK(transformable * 10 >= total * 8);  // >= 80%
  }
}

TEST_CASE("modbus covers requests and responses for all listed functions") {
  FormatGraph g = modbus_bundle().graph();
  // one optional branch per function code, requests 01-06/0f/10 + responses
  std::size_t optionals = 0;
  for (const auto& path : dfs_order(g))
    if (g.at(path).type == NodeType::Optional) ++optionals;
  CHECK(optionals == 16);
  // the unknown-function sample keeps every optional absent yet serializes
  const ProtocolSample* unknown = nullptr;
  for (const auto& s : modbus_bundle().samples)
    if (s.name == "unknown_fn") unknown = &s;
  REQUIRE(unknown != nullptr);
  CHECK(unknown->golden.size() == 8);  // bare MBAP + unit + fc
}

TEST_CASE("http samples are plain-text request shapes") {
  for (const auto& s : http_bundle().samples) {
    std::string text(s.golden.begin(), s.golden.end());
    CHECK(text.find(" HTTP/1.") != std::string::npos);
    CHECK(text.find("X-Mark:") != std::string::npos);
  }
}

TEST_CASE("delimited fields in samples never contain their delimiters") {
  FormatGraph g = http_bundle().graph();
  ObfuscationPlan plain = obfuscate(g, 0, 0);
  for (const auto& s : http_bundle().samples) {
    MessageAst ast = ast_from_script(g, s.script);
    // serialization enforces the collision rule; a throw here means a bad sample
    CHECK_NOTHROW(serialize(ast, plain, 0));
  }
}
