#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "protoobf/protocols.hpp"

namespace protoobf {

enum class ReportFormat { Table, Csv, Json };

struct BenchConfig {
  const ProtocolBundle* bundle = nullptr;
  std::vector<int> levels = {0, 1, 2, 3, 4};
  std::size_t trials = 1000;       // per level
  std::size_t plans_per_level = 5; // distinct plan seeds; potency averages over these
  std::uint64_t seed = 0;
  ReportFormat format = ReportFormat::Table;
};

struct Stat {
  double avg = 0, min = 0, max = 0;
};

struct BenchRow {
  int level = 0;
  Stat applied;  // transform records per plan
  // potency, normalized against this run's level-0 means (level 0 row = 1.0)
  double norm_lines = 1, norm_types = 1, norm_callgraph = 1, norm_depth = 1;
  Stat gen_ms;   // source-bundle generation time per plan
  Stat ser_ms;   // per-message serialize time
  Stat par_ms;   // per-message parse time
  Stat buf_bytes;
};

struct PotencyCostReport {
  std::string protocol;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  std::vector<BenchRow> rows;
  // least-squares fit of per-message time vs the plan's applied-transform count
  double ser_slope = 0, ser_r2 = 0;
  double par_slope = 0, par_r2 = 0;
  std::string note;
};

// Sweeps the configured budget levels. Per level: plans_per_level plans with
// seeds derived from (seed, level, plan index), code generation + potency
// measurement per plan, then `trials` random messages round-tripped with
// serialize/parse wall-clock timings (milliseconds, microsecond resolution).
// Message content is deterministic for a fixed seed; a round-trip failure
// aborts with the counterexample (a bench run doubles as a large fuzz run).
PotencyCostReport run_bench(const BenchConfig& config);

// table: metric rows x level columns, cost cells as avg[min;max].
// csv / json: long-format records; schemas in docs/bench.md.
std::string report_render(const PotencyCostReport& report, ReportFormat format);

}  // namespace protoobf
