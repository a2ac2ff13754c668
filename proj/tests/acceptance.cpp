// Acceptance gate: one pass/fail line per criterion, exit 0 only if all pass.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

#include "protoobf/bench.hpp"
#include "protoobf/codegen.hpp"
#include "protoobf/prng.hpp"
#include "protoobf/spec_dsl.hpp"
#include "protoobf/transform_catalog.hpp"
#include "protoobf/wire_engine.hpp"

using namespace protoobf;
namespace fs = std::filesystem;
using clk = std::chrono::steady_clock;

namespace {

std::string run_cmd(const std::string& cmd, int& rc) {
  FILE* p = popen((cmd + " 2>&1").c_str(), "r");
  if (!p) {
    rc = -1;
    return "popen failed";
  }
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  rc = pclose(p);
  return out;
}

std::string chomp(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

// ---------------------------------------------------------------- criterion 1

bool roundtrip_identity(std::string& detail) {
  auto t0 = clk::now();
  for (const ProtocolBundle* b : all_bundles()) {
    FormatGraph g = b->graph();
    for (int budget = 0; budget <= 4; ++budget) {
      ObfuscationPlan plan = obfuscate(g, budget, 0xace0 + budget);
      RoundtripReport rep = roundtrip_check(g, plan, 1000, 0x5eed);
      if (!rep.ok) {
        detail = b->name + " budget " + std::to_string(budget) + " trial " +
                 std::to_string(rep.failed_trial) + ":\n" + rep.detail;
        return false;
      }
    }
  }
  double secs = std::chrono::duration<double>(clk::now() - t0).count();
  detail = "10000 round-trips in " + std::to_string(secs) + " s";
  return secs < 120.0;
}

// ---------------------------------------------------------------- criterion 2

bool transform_oracles(std::string& detail) {
  for (SplitKind k : {SplitKind::Add, SplitKind::Sub, SplitKind::Xor}) {
    for (int v = 0; v < 256; ++v)
      for (int r = 0; r < 256; ++r) {
        Bytes vb{static_cast<std::uint8_t>(v)}, rb{static_cast<std::uint8_t>(r)};
        auto [p1, p2] = split_forward(k, vb, rb, 0);
        if (split_combine(k, p1, p2) != vb) {
          detail = "split kind " + std::to_string(static_cast<int>(k)) + " v=" +
                   std::to_string(v) + " r=" + std::to_string(r);
          return false;
        }
      }
  }
  for (ConstOp op : {ConstOp::Add, ConstOp::Sub, ConstOp::Xor}) {
    for (int c = 0; c < 256; ++c)
      for (int v = 0; v < 256; ++v) {
        std::vector<ValueOp> ops{{op, Bytes{static_cast<std::uint8_t>(c)}}};
        Bytes vb{static_cast<std::uint8_t>(v)};
        if (invert_value_ops(ops, apply_value_ops(ops, vb)) != vb) {
          detail = "const op failed v=" + std::to_string(v) + " c=" + std::to_string(c);
          return false;
        }
      }
  }
  for (std::size_t w : {std::size_t{2}, std::size_t{4}}) {
    Bytes v(w);
    for (std::size_t i = 0; i < w; ++i) v[i] = static_cast<std::uint8_t>(0x40 + i);
    for (std::size_t off = 1; off < w; ++off) {
      auto [p1, p2] = split_forward(SplitKind::Cat, v, {}, off);
      if (p1.size() != off || split_combine(SplitKind::Cat, p1, p2) != v) {
        detail = "cat split width " + std::to_string(w) + " offset " + std::to_string(off);
        return false;
      }
    }
  }
  for (std::size_t len = 0; len <= 64; ++len) {
    Bytes region(len);
    for (std::size_t i = 0; i < len; ++i) region[i] = static_cast<std::uint8_t>(i * 31 + 5);
    Bytes twice = region;
    std::reverse(twice.begin(), twice.end());
    std::reverse(twice.begin(), twice.end());
    if (twice != region) {
      detail = "double mirror length " + std::to_string(len);
      return false;
    }
  }
  detail = "196608 split pairs, 196608 const pairs, cat offsets, mirror 0-64";
  return true;
}

// ---------------------------------------------------------------- criterion 3

bool nonregular_witness(std::string& detail) {
  FormatGraph g = parse_spec(R"(
protocol witness {
  node root { type: sequence boundary: end children: [cnt, tab] }
  node cnt { type: terminal boundary: fixed(1) derives: count_of(tab) }
  node tab { type: tabular boundary: counter(cnt) child: row }
  node row { type: sequence boundary: delegated children: [colA, colB] }
  node colA { type: terminal boundary: fixed(1) }
  node colB { type: terminal boundary: fixed(1) }
  root: root
}
)");
  TransformRecord r{TransformKind::TabSplit, g.index.at("tab"), {}, phase_of(TransformKind::TabSplit)};
  ObfuscationPlan plan = obfuscate(g, 0, 0);
  plan.records.push_back(r);
  plan.final_graph = apply_transform(g, r);

  for (std::size_t n = 0; n <= 8; ++n) {
    std::ostringstream script;
    script << "V cnt -\nN tab " << n << "\n";
    Bytes expected{static_cast<std::uint8_t>(n)};
    for (std::size_t i = 0; i < n; ++i)
      script << "V colA " << to_hex(Bytes{static_cast<std::uint8_t>(0xa0 + i)}) << "\nV colB "
             << to_hex(Bytes{static_cast<std::uint8_t>(0xb0 + i)}) << "\n";
    for (std::size_t i = 0; i < n; ++i) expected.push_back(static_cast<std::uint8_t>(0xa0 + i));
    for (std::size_t i = 0; i < n; ++i) expected.push_back(static_cast<std::uint8_t>(0xb0 + i));

    MessageAst ast = ast_from_script(g, script.str());
    Bytes wire = serialize(ast, plan, 0);
    if (wire != expected) {
      detail = "n=" + std::to_string(n) + " wire " + to_hex(wire) + " != " + to_hex(expected);
      return false;
    }
    if (!ast_equal(parse(wire, plan, g), ast)) {
      detail = "n=" + std::to_string(n) + " parse mismatch";
      return false;
    }
  }
  detail = "A^n B^n layout exact for n=0..8";
  return true;
}

// ---------------------------------------------------------------- criterion 4

bool cross_engine(std::string& detail) {
  fs::path root = fs::temp_directory_path() / "pobf_acceptance";
  fs::create_directories(root);
  std::size_t pairs = 0;
  for (const ProtocolBundle* b : all_bundles()) {
    FormatGraph g = b->graph();
    for (int p = 0; p < 10; ++p) {
      int budget = p / 2;  // two plans each at budgets 0..4
      ObfuscationPlan plan = obfuscate(g, budget, 0xc40 + p);
      SourceBundle sb = generate(plan, g);
      std::string dir = write_bundle(sb, root.string());
      int rc = 0;
      std::string out = run_cmd("c++ -std=c++20 -O0 -o " + dir + "/drv " + dir +
                                    "/protocol.cpp " + dir + "/main.cpp",
                                rc);
      if (rc != 0) {
        detail = b->name + " plan " + std::to_string(p) + " failed to compile:\n" + out;
        return false;
      }
      for (int m = 0; m < 10; ++m) {
        MessageAst ast = random_ast(g, mix_seed(0x4a, p * 100 + m));
        std::uint64_t msg_seed = mix_seed(0x4b, p * 100 + m);
        Bytes ref = serialize(ast, plan, msg_seed);
        std::ofstream(dir + "/s.txt") << ast_to_script(ast);
        std::string hex =
            chomp(run_cmd(dir + "/drv ser " + dir + "/s.txt " + std::to_string(msg_seed), rc));
        if (rc != 0 || hex != to_hex(ref)) {
          detail = b->name + " plan " + std::to_string(p) + " msg " + std::to_string(m) +
                   " wire mismatch:\n interp " + to_hex(ref) + "\n gen    " + hex;
          return false;
        }
        // generated engine parses the interpretive wire (same bytes), and the
        // interpretive engine parses the generated wire; scripts must agree
        std::ofstream(dir + "/h.txt") << hex << "\n";
        std::string script = run_cmd(dir + "/drv par " + dir + "/h.txt", rc);
        MessageAst interp_back = parse(ref, plan, g);
        if (rc != 0 || script != ast_to_script(interp_back)) {
          detail = b->name + " plan " + std::to_string(p) + " msg " + std::to_string(m) +
                   " parse disagreement:\n" + script;
          return false;
        }
        ++pairs;
      }
    }
  }
  detail = std::to_string(pairs) + " (plan, message) pairs, zero mismatches";
  return true;
}

// ---------------------------------------------------------------- criterion 5

bool potency_trend(std::string& detail) {
  for (const ProtocolBundle* b : all_bundles()) {
    FormatGraph g = b->graph();
    PotencyMetrics base = measure(generate(obfuscate(g, 0, 1), g));
    double prev_lines = 1, prev_types = 1, prev_graph = 1;
    for (int budget = 1; budget <= 4; ++budget) {
      double lines = 0, types = 0, graph_sz = 0;
      const int kSeeds = 20;
      for (int s = 0; s < kSeeds; ++s) {
        PotencyMetrics m =
            measure(generate(obfuscate(g, budget, mix_seed(0x90, budget * 100 + s)), g));
        lines += static_cast<double>(m.lines) / static_cast<double>(base.lines);
        types += static_cast<double>(m.type_definitions) /
                 static_cast<double>(base.type_definitions);
        graph_sz += static_cast<double>(m.call_graph_size) /
                    static_cast<double>(base.call_graph_size);
      }
      lines /= kSeeds;
      types /= kSeeds;
      graph_sz /= kSeeds;
      if (!(lines > prev_lines && types > prev_types && graph_sz > prev_graph)) {
        detail = b->name + " budget " + std::to_string(budget) + " not increasing (lines " +
                 std::to_string(lines) + ", types " + std::to_string(types) + ", graph " +
                 std::to_string(graph_sz) + ")";
        return false;
      }
      prev_lines = lines;
      prev_types = types;
      prev_graph = graph_sz;
    }
  }
  detail = "normalized lines/types/call-graph strictly increase, budgets 1-4, 20 seeds";
  return true;
}

// ------------------------------------------------------- criteria 6 and 7

bool cost_and_overhead(std::string& detail6, std::string& detail7, bool& ok7) {
  bool ok6 = true;
  ok7 = true;
  detail6.clear();
  detail7.clear();
  for (const ProtocolBundle* b : all_bundles()) {
    BenchConfig cfg;
    cfg.bundle = b;
    cfg.levels = {0, 1, 2, 3, 4};
    cfg.trials = 400;
    cfg.plans_per_level = 4;
    cfg.seed = 0xbe;
    PotencyCostReport rep = run_bench(cfg);
    const BenchRow& r0 = rep.rows.front();
    const BenchRow& r4 = rep.rows.back();
    if (r4.ser_ms.avg >= 10.0 || r4.par_ms.avg >= 10.0 || rep.ser_slope < 0 ||
        rep.par_slope < 0)
      ok6 = false;
    detail6 += b->name + " budget-4 ser " + std::to_string(r4.ser_ms.avg) + " ms, par " +
               std::to_string(r4.par_ms.avg) + " ms, slopes " +
               std::to_string(rep.ser_slope) + "/" + std::to_string(rep.par_slope) + "; ";
    if (r4.buf_bytes.avg > 3.0 * r0.buf_bytes.avg) ok7 = false;
    detail7 += b->name + " mean wire " + std::to_string(r0.buf_bytes.avg) + " -> " +
               std::to_string(r4.buf_bytes.avg) + " bytes; ";
  }
  return ok6;
}

// ---------------------------------------------------------------- criterion 8

bool interface_stability(std::string& detail) {
  for (const ProtocolBundle* b : all_bundles()) {
    FormatGraph g = b->graph();
    std::string baseline;
    std::vector<ObfuscationPlan> plans;
    for (int p = 0; p < 10; ++p) {
      plans.push_back(obfuscate(g, p % 5, 0x1f0 + p));
      SourceBundle sb = generate(plans.back(), g);
      for (const auto& [name, text] : sb.files) {
        if (name != "accessors.hpp") continue;
        if (baseline.empty())
          baseline = text;
        else if (text != baseline) {
          detail = b->name + " plan " + std::to_string(p) + " accessor header differs";
          return false;
        }
      }
    }
    // the same construction code must run unmodified against every plan
    for (const auto& s : b->samples) {
      MessageAst ast = ast_from_script(g, s.script);  // plan-independent construction
      for (const auto& plan : plans) {
        Bytes wire = serialize(ast, plan, 3);
        if (!ast_equal(parse(wire, plan, g), ast)) {
          detail = b->name + "/" + s.name + " failed under a plan";
          return false;
        }
      }
    }
  }
  detail = "accessor headers identical across 10 plans; samples run against all plans";
  return true;
}

// ---------------------------------------------------------------- criterion 9

bool determinism(std::string& detail) {
  for (const ProtocolBundle* b : all_bundles()) {
    FormatGraph g = b->graph();
    for (int budget : {0, 2, 4}) {
      std::string p1 = save_plan(obfuscate(g, budget, 0xd5));
      std::string p2 = save_plan(obfuscate(g, budget, 0xd5));
      if (p1 != p2) {
        detail = b->name + " plan files differ at budget " + std::to_string(budget);
        return false;
      }
      ObfuscationPlan plan = load_plan(p1, g);
      for (int m = 0; m < 20; ++m) {
        MessageAst ast = random_ast(g, 0xd100 + m);
        if (serialize(ast, plan, 0xd200 + m) != serialize(ast, plan, 0xd200 + m)) {
          detail = b->name + " wire bytes differ at budget " + std::to_string(budget);
          return false;
        }
      }
    }
  }
  detail = "byte-identical plan files and wires across repeated runs";
  return true;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int idx, const char* label, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS" : "FAIL") << "  criterion " << idx << ": " << label;
    if (!detail.empty()) std::cout << " — " << detail;
    std::cout << "\n";
    if (!ok) ++failures;
  };
  auto guard = [&](int idx, const char* label, const std::function<bool(std::string&)>& fn) {
    std::string detail;
    bool ok = false;
    try {
      ok = fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    report(idx, label, ok, detail);
  };

  guard(1, "round-trip identity (1000 ASTs x budgets 0-4 x 2 protocols)", roundtrip_identity);
  guard(2, "per-transform brute-force oracles", transform_oracles);
  guard(3, "non-regularity witness (A^n B^n)", nonregular_witness);
  guard(4, "cross-engine equivalence (generated vs interpretive)", cross_engine);
  guard(5, "potency trend over 20 seeds per level", potency_trend);
  {
    std::string d6, d7;
    bool ok7 = false, ok6 = false;
    try {
      ok6 = cost_and_overhead(d6, d7, ok7);
    } catch (const std::exception& e) {
      d6 = d7 = std::string("exception: ") + e.what();
      ok6 = ok7 = false;
    }
    report(6, "cost sanity (budget-4 means < 10 ms, nonnegative slope)", ok6, d6);
    report(7, "buffer overhead (budget-4 mean <= 3x baseline)", ok7, d7);
  }
  guard(8, "interface stability across plans", interface_stability);
  guard(9, "determinism of plan files and wire bytes", determinism);

  if (failures) std::cout << failures << " criteria failed\n";
  else std::cout << "all 9 criteria passed\n";
  return failures == 0 ? 0 : 1;
}
