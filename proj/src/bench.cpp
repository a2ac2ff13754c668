#include "protoobf/bench.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "protoobf/codegen.hpp"
#include "protoobf/prng.hpp"
#include "protoobf/wire_engine.hpp"

namespace protoobf {

namespace {

using ordered_json = nlohmann::ordered_json;
using clk = std::chrono::steady_clock;

double ms_since(clk::time_point t0) {
  return std::chrono::duration<double, std::milli>(clk::now() - t0).count();
}

Stat make_stat(const std::vector<double>& xs) {
  Stat s;
  if (xs.empty()) return s;
  s.min = s.max = xs[0];
  double sum = 0;
  for (double x : xs) {
    sum += x;
    if (x < s.min) s.min = x;
    if (x > s.max) s.max = x;
  }
  s.avg = sum / static_cast<double>(xs.size());
  return s;
}

void fit(const std::vector<std::pair<double, double>>& pts, double& slope, double& r2) {
  slope = 0;
  r2 = 0;
  if (pts.size() < 2) return;
  double n = static_cast<double>(pts.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double den = n * sxx - sx * sx;
  if (den == 0) return;  // all plans applied the same transform count
  slope = (n * sxy - sx * sy) / den;
  double icept = (sy - slope * sx) / n, my = sy / n, ss_res = 0, ss_tot = 0;
  for (auto [x, y] : pts) {
    double e = y - (icept + slope * x);
    ss_res += e * e;
    ss_tot += (y - my) * (y - my);
  }
  r2 = ss_tot == 0 ? 1.0 : 1.0 - ss_res / ss_tot;
}

std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

std::string cell(const Stat& s, int prec = 3) {
  return fmt(s.avg, prec) + "[" + fmt(s.min, prec) + ";" + fmt(s.max, prec) + "]";
}

}  // namespace

PotencyCostReport run_bench(const BenchConfig& config) {
  if (!config.bundle) throw ProtoError("bench.config", "no protocol bundle selected");
  if (config.trials < 1) throw ProtoError("bench.config", "trials must be >= 1");
  if (config.levels.empty()) throw ProtoError("bench.config", "levels must be nonempty");
  if (config.plans_per_level < 1)
    throw ProtoError("bench.config", "plans_per_level must be >= 1");

  FormatGraph graph = config.bundle->graph();
  PotencyCostReport rep;
  rep.protocol = config.bundle->name;
  rep.seed = config.seed;
  rep.trials = config.trials;
  rep.note =
      "potency is normalized against this run's level-0 means; comparisons "
      "to previously published Modbus/HTTP figures are trend-level only "
      "(spec graphs differ)";

  // baseline potency from the level-0 plan (transform-free, seed-independent)
  ObfuscationPlan base = obfuscate(graph, 0, config.seed);
  PotencyMetrics pm0 = measure(generate(base, graph));

  std::vector<std::pair<double, double>> ser_pts, par_pts;
  for (int level : config.levels) {
    BenchRow row;
    row.level = level;

    struct PlanSlot {
      ObfuscationPlan plan;
      double applied;
    };
    std::vector<PlanSlot> slots;
    std::vector<double> applied, gen_ms, lines, types, cgraph, cdepth;
    for (std::size_t p = 0; p < config.plans_per_level; ++p) {
      std::uint64_t ps = mix_seed(config.seed, (static_cast<std::uint64_t>(level) << 32) | p);
      ObfuscationPlan plan = obfuscate(graph, level, ps);
      auto t0 = clk::now();
      SourceBundle sb = generate(plan, graph);
      gen_ms.push_back(ms_since(t0));
      PotencyMetrics pm = measure(sb);
      applied.push_back(static_cast<double>(plan.records.size()));
      lines.push_back(static_cast<double>(pm.lines));
      types.push_back(static_cast<double>(pm.type_definitions));
      cgraph.push_back(static_cast<double>(pm.call_graph_size));
      cdepth.push_back(static_cast<double>(pm.call_graph_depth));
      slots.push_back({std::move(plan), static_cast<double>(applied.back())});
    }
    row.applied = make_stat(applied);
    row.gen_ms = make_stat(gen_ms);
    if (level == 0) {
      row.norm_lines = row.norm_types = row.norm_callgraph = row.norm_depth = 1.0;
    } else {
      row.norm_lines = make_stat(lines).avg / static_cast<double>(pm0.lines);
      row.norm_types = make_stat(types).avg / static_cast<double>(pm0.type_definitions);
      row.norm_callgraph = make_stat(cgraph).avg / static_cast<double>(pm0.call_graph_size);
      row.norm_depth = make_stat(cdepth).avg / static_cast<double>(pm0.call_graph_depth);
    }

    std::vector<double> ser_ms, par_ms, buf;
    for (std::size_t t = 0; t < config.trials; ++t) {
      const PlanSlot& slot = slots[t % slots.size()];
      std::uint64_t ts = mix_seed(config.seed, (static_cast<std::uint64_t>(level) << 40) | t);
      MessageAst ast = random_ast(graph, ts);
      std::uint64_t msg_seed = mix_seed(ts, 0x9e3779b9ull);

      auto t0 = clk::now();
      Bytes wire = serialize(ast, slot.plan, msg_seed);
      double sm = ms_since(t0);
      t0 = clk::now();
      MessageAst back = parse(wire, slot.plan, graph);
      double pm_ms = ms_since(t0);
      if (!ast_equal(ast, back))
        throw ProtoError("bench.roundtrip",
                         rep.protocol + " level " + std::to_string(level) + " trial " +
                             std::to_string(t) + " round-trip mismatch\nwire: " +
                             to_hex(wire) + "\ninput:\n" + ast_to_json(ast) +
                             "parsed:\n" + ast_to_json(back));
      ser_ms.push_back(sm);
      par_ms.push_back(pm_ms);
      buf.push_back(static_cast<double>(wire.size()));
      ser_pts.emplace_back(slot.applied, sm);
      par_pts.emplace_back(slot.applied, pm_ms);
    }
    row.ser_ms = make_stat(ser_ms);
    row.par_ms = make_stat(par_ms);
    row.buf_bytes = make_stat(buf);
    rep.rows.push_back(row);
  }

  fit(ser_pts, rep.ser_slope, rep.ser_r2);
  fit(par_pts, rep.par_slope, rep.par_r2);
  return rep;
}

namespace {

// metric label, plus a per-row cell printer (shared by table and csv)
struct MetricRow {
  const char* label;
  Stat (*stat)(const BenchRow&);
  double (*norm)(const BenchRow&);  // nullptr -> stat metric
};

const MetricRow kMetrics[] = {
    {"Nb. transf. applied", [](const BenchRow& r) { return r.applied; }, nullptr},
    {"Nb. lines (norm.)", nullptr, [](const BenchRow& r) { return r.norm_lines; }},
    {"Nb. type defs (norm.)", nullptr, [](const BenchRow& r) { return r.norm_types; }},
    {"Call graph size (norm.)", nullptr, [](const BenchRow& r) { return r.norm_callgraph; }},
    {"Call graph depth (norm.)", nullptr, [](const BenchRow& r) { return r.norm_depth; }},
    {"Generation time (ms)", [](const BenchRow& r) { return r.gen_ms; }, nullptr},
    {"Serialize time (ms)", [](const BenchRow& r) { return r.ser_ms; }, nullptr},
    {"Parse time (ms)", [](const BenchRow& r) { return r.par_ms; }, nullptr},
    {"Buffer size (bytes)", [](const BenchRow& r) { return r.buf_bytes; }, nullptr},
};

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

std::string render_table(const PotencyCostReport& rep) {
  std::ostringstream os;
  os << "protocol: " << rep.protocol << "  seed: " << rep.seed
     << "  trials/level: " << rep.trials << "\n";
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> head{"Metric"};
  for (const auto& r : rep.rows) head.push_back("level " + std::to_string(r.level));
  grid.push_back(head);
  for (const auto& m : kMetrics) {
    std::vector<std::string> line{m.label};
    for (const auto& r : rep.rows)
      line.push_back(m.norm ? fmt(m.norm(r)) : cell(m.stat(r)));
    grid.push_back(line);
  }
  std::vector<std::size_t> w(grid[0].size(), 0);
  for (const auto& line : grid)
    for (std::size_t i = 0; i < line.size(); ++i) w[i] = std::max(w[i], line[i].size());
  for (const auto& line : grid) {
    for (std::size_t i = 0; i < line.size(); ++i)
      os << std::left << std::setw(static_cast<int>(w[i]) + 2) << line[i];
    os << "\n";
  }
  os << "serialize time vs applied count: slope " << fmt(rep.ser_slope, 6) << " ms/transform"
     << " (R^2 " << fmt(rep.ser_r2) << ")\n";
  os << "parse time vs applied count: slope " << fmt(rep.par_slope, 6) << " ms/transform"
     << " (R^2 " << fmt(rep.par_r2) << ")\n";
  os << "note: " << rep.note << "\n";
  return os.str();
}

std::string render_csv(const PotencyCostReport& rep) {
  std::ostringstream os;
  os << "protocol,level,metric,avg,min,max\r\n";
  for (const auto& r : rep.rows) {
    for (const auto& m : kMetrics) {
      Stat s;
      if (m.norm) {
        s.avg = s.min = s.max = m.norm(r);
      } else {
        s = m.stat(r);
      }
      os << csv_field(rep.protocol) << "," << r.level << "," << csv_field(m.label) << ","
         << fmt(s.avg, 6) << "," << fmt(s.min, 6) << "," << fmt(s.max, 6) << "\r\n";
    }
  }
  return os.str();
}

std::string render_json(const PotencyCostReport& rep) {
  ordered_json j;
  j["protocol"] = rep.protocol;
  j["seed"] = std::to_string(rep.seed);
  j["trials_per_level"] = rep.trials;
  ordered_json levels = ordered_json::array();
  auto stat = [](const Stat& s) {
    return ordered_json{{"avg", s.avg}, {"min", s.min}, {"max", s.max}};
  };
  for (const auto& r : rep.rows) {
    ordered_json row;
    row["level"] = r.level;
    row["applied"] = stat(r.applied);
    row["normalized_potency"] = {{"lines", r.norm_lines},
                                 {"type_definitions", r.norm_types},
                                 {"call_graph_size", r.norm_callgraph},
                                 {"call_graph_depth", r.norm_depth}};
    row["generation_ms"] = stat(r.gen_ms);
    row["serialize_ms"] = stat(r.ser_ms);
    row["parse_ms"] = stat(r.par_ms);
    row["buffer_bytes"] = stat(r.buf_bytes);
    levels.push_back(row);
  }
  j["levels"] = levels;
  j["fit"] = {{"serialize", {{"slope_ms_per_transform", rep.ser_slope}, {"r2", rep.ser_r2}}},
              {"parse", {{"slope_ms_per_transform", rep.par_slope}, {"r2", rep.par_r2}}}};
  j["note"] = rep.note;
  return j.dump(2) + "\n";
}

}  // namespace

std::string report_render(const PotencyCostReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Table: return render_table(report);
    case ReportFormat::Csv: return render_csv(report);
    case ReportFormat::Json: return render_json(report);
  }
  throw ProtoError("bench.format", "unknown report format");
}

}  // namespace protoobf
