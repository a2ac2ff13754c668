#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "protoobf/obfuscator.hpp"
#include "protoobf/protocols.hpp"
#include "protoobf/spec_dsl.hpp"

using namespace protoobf;

TEST_CASE("budget zero is a no-op plan") {
  FormatGraph g = http_bundle().graph();
  ObfuscationPlan plan = obfuscate(g, 0, 123);
  CHECK(plan.records.empty());
  CHECK(graph_equal(plan.final_graph, g));
  CHECK(plan.spec_hash == to_hex(spec_hash(g)));
}

TEST_CASE("plans are deterministic and seed-sensitive") {
  FormatGraph g = modbus_bundle().graph();
  ObfuscationPlan a = obfuscate(g, 2, 77);
  ObfuscationPlan b = obfuscate(g, 2, 77);
  CHECK(save_plan(a) == save_plan(b));
  CHECK(graph_equal(a.final_graph, b.final_graph));
  ObfuscationPlan c = obfuscate(g, 2, 78);
  CHECK(save_plan(a) != save_plan(c));
}

TEST_CASE("budget scales applied transform count") {
  FormatGraph g = modbus_bundle().graph();
  std::size_t prev = 0;
  for (int budget = 1; budget <= 4; ++budget) {
    ObfuscationPlan plan = obfuscate(g, budget, 5);
    CHECK(plan.records.size() > prev);
    CHECK(validate(plan.final_graph).ok());
    prev = plan.records.size();
  }
}

TEST_CASE("save/load round-trips and replays") {
  FormatGraph g = http_bundle().graph();
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    ObfuscationPlan plan = obfuscate(g, 3, seed);
    std::string text = save_plan(plan);
    ObfuscationPlan back = load_plan(text, g);
    CHECK(graph_equal(back.final_graph, plan.final_graph));
    CHECK(save_plan(back) == text);
  }
}

TEST_CASE("plan json has the documented key order") {
  FormatGraph g = http_bundle().graph();
  std::string text = save_plan(obfuscate(g, 1, 9));
  std::size_t v = text.find("\"version\"");
  std::size_t p = text.find("\"protocol\"");
  std::size_t h = text.find("\"spec_hash\"");
  std::size_t s = text.find("\"seed\"");
  std::size_t b = text.find("\"per_node_budget\"");
  std::size_t r = text.find("\"records\"");
  REQUIRE(r != std::string::npos);
  CHECK(v < p);
  CHECK(p < h);
  CHECK(h < s);
  CHECK(s < b);
  CHECK(b < r);
}

TEST_CASE("load rejects a foreign spec") {
  FormatGraph g = http_bundle().graph();
  std::string text = save_plan(obfuscate(g, 2, 4));
  FormatGraph other = modbus_bundle().graph();
  try {
    load_plan(text, other);
    FAIL("expected a hash mismatch");
  } catch (const ProtoError& e) {
    CHECK(std::string(e.what()).find("plan does not match spec") != std::string::npos);
  }
}

TEST_CASE("load reports corrupt records by index") {
  FormatGraph g = http_bundle().graph();
  ObfuscationPlan plan = obfuscate(g, 2, 4);
  REQUIRE(plan.records.size() >= 2);
  std::string text = save_plan(plan);
  // flip a record's phase so kind and phase disagree
  std::size_t at = text.find("\"phase\"");
  REQUIRE(at != std::string::npos);
  std::size_t q = text.find(':', at) + 2;
  text.replace(q, text.find_first_of(",}", q) - q,
               text.compare(q, 7, "\"down\"") >= 0 && text[q + 1] == 'd' ? "\"up\"" : "\"down\"");
  CHECK_THROWS_AS(load_plan(text, g), ProtoError);
}

TEST_CASE("every record in a drawn plan is individually applicable") {
  FormatGraph g = modbus_bundle().graph();
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    ObfuscationPlan plan = obfuscate(g, 2, seed);
    FormatGraph cur = g;
    for (const auto& r : plan.records) {
      CHECK(applicable(cur, r.target).count(r.kind) == 1);
      cur = apply_transform(cur, r);
    }
    CHECK(graph_equal(cur, plan.final_graph));
  }
}
