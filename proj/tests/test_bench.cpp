#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <nlohmann/json.hpp>

#include <sstream>

#include "protoobf/bench.hpp"

using namespace protoobf;

namespace {

BenchConfig tiny_config() {
  BenchConfig cfg;
  cfg.bundle = &http_bundle();
  cfg.levels = {0, 2};
  cfg.trials = 20;
  cfg.plans_per_level = 2;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("run_bench validates its config") {
  BenchConfig cfg = tiny_config();
  cfg.trials = 0;
  CHECK_THROWS_AS(run_bench(cfg), ProtoError);
  cfg = tiny_config();
  cfg.levels.clear();
  CHECK_THROWS_AS(run_bench(cfg), ProtoError);
  cfg = tiny_config();
  cfg.bundle = nullptr;
  CHECK_THROWS_AS(run_bench(cfg), ProtoError);
}

TEST_CASE("level zero normalizes to exactly 1.0") {
  PotencyCostReport rep = run_bench(tiny_config());
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].level == 0);
  CHECK(rep.rows[0].norm_lines == 1.0);
  CHECK(rep.rows[0].norm_types == 1.0);
  CHECK(rep.rows[0].norm_callgraph == 1.0);
  CHECK(rep.rows[0].norm_depth == 1.0);
  // the obfuscated level does real work
  CHECK(rep.rows[1].applied.avg > 0);
  CHECK(rep.rows[1].norm_lines > 1.0);
  CHECK(rep.rows[1].buf_bytes.max >= rep.rows[1].buf_bytes.min);
  CHECK(rep.rows[1].ser_ms.avg > 0);
}

TEST_CASE("message content is deterministic per seed") {
  PotencyCostReport a = run_bench(tiny_config());
  PotencyCostReport b = run_bench(tiny_config());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].applied.avg == b.rows[i].applied.avg);
    CHECK(a.rows[i].buf_bytes.avg == b.rows[i].buf_bytes.avg);  // same wires
    CHECK(a.rows[i].norm_lines == b.rows[i].norm_lines);
  }
}

TEST_CASE("table render carries the metric rows") {
  PotencyCostReport rep = run_bench(tiny_config());
  std::string t = report_render(rep, ReportFormat::Table);
  for (const char* label :
       {"Nb. transf. applied", "Nb. lines (norm.)", "Nb. type defs (norm.)",
        "Call graph size (norm.)", "Generation time (ms)", "Serialize time (ms)",
        "Parse time (ms)", "Buffer size (bytes)"})
    CHECK(t.find(label) != std::string::npos);
  CHECK(t.find("slope") != std::string::npos);
}

TEST_CASE("csv renders one record per metric and parses back") {
  PotencyCostReport rep = run_bench(tiny_config());
  std::string csv = report_render(rep, ReportFormat::Csv);
  std::istringstream is(csv);
  std::string line;
  REQUIRE(std::getline(is, line));
  CHECK(line.find("protocol,level,metric,avg,min,max") == 0);
  std::size_t records = 0;
  double buf_avg = -1;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    ++records;
    std::istringstream ls(line);
    std::string proto, level, metric, avg, mn, mx;
    std::getline(ls, proto, ',');
    std::getline(ls, level, ',');
    std::getline(ls, metric, ',');
    std::getline(ls, avg, ',');
    std::getline(ls, mn, ',');
    std::getline(ls, mx, ',');
    CHECK(proto == "http");
    if (metric == "Buffer size (bytes)" && level == "0") buf_avg = std::stod(avg);
  }
  CHECK(records == 2 * 9);  // 2 levels x 9 metrics
  CHECK(buf_avg == doctest::Approx(rep.rows[0].buf_bytes.avg).epsilon(1e-6));
}

TEST_CASE("json render round-trips through a parser") {
  PotencyCostReport rep = run_bench(tiny_config());
  std::string text = report_render(rep, ReportFormat::Json);
  auto j = nlohmann::json::parse(text);
  CHECK(j.at("protocol") == "http");
  CHECK(j.at("levels").size() == 2);
  CHECK(j.at("levels")[0].at("normalized_potency").at("lines") == 1.0);
  CHECK(j.at("levels")[1].at("applied").at("avg").get<double>() > 0);
  CHECK(j.at("fit").contains("serialize"));
  CHECK(nlohmann::json::parse(report_render(rep, ReportFormat::Json)) == j);
}
