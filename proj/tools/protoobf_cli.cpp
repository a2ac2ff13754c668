#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "protoobf/bench.hpp"
#include "protoobf/codegen.hpp"
#include "protoobf/spec_dsl.hpp"
#include "protoobf/wire_engine.hpp"

namespace {

using namespace protoobf;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const char* kHelp = R"(protoobf — specification-driven protocol obfuscation toolkit

usage: protoobf <subcommand> [args]

subcommands:
  validate <spec>
      Parse and validate a spec file; print a summary report.
  obfuscate <spec> --budget N --seed S -o plan.json
      Draw a random obfuscation plan (N transforms per node per pass) and
      save it as replayable JSON. Deterministic for a fixed seed.
  serialize <spec> --plan plan.json --ast ast.json --msg-seed S -o msg.bin
      Serialize a JSON message AST through a plan's transformed format.
  parse <spec> --plan plan.json --in msg.bin -o ast.json
      Parse an obfuscated wire message back into a JSON AST.
  fuzz <spec> --plan plan.json --trials N --seed S
      Round-trip N random messages; exit 1 with a counterexample on failure.
  codegen <spec> --plan plan.json -o gen/
      Emit standalone serializer/parser/accessor sources for the plan.
  bench <spec> --levels 0..4 --trials N --seed S --format table|csv|json
      Sweep obfuscation budgets and report potency and cost metrics.

common flags:
  --budget N          transforms per node per pass (obfuscate)
  --seed S            RNG seed, decimal or 0x-hex
  --msg-seed S        per-message randomness seed, decimal or 0x-hex
  --plan FILE         plan JSON produced by `obfuscate`
  --ast FILE          message AST in JSON form
  --in FILE           input wire message (binary)
  -o / --out PATH     output file or directory ("-" = stdout where sensible)
  --trials N          iteration count (fuzz: default 1000; bench: per level)
  --levels A..B|list  bench budget levels, e.g. 0..4 or 0,2,4 (default 0..4)
  --format FMT        bench output: table (default), csv, or json
  -h / --help         this text

exit codes: 0 success, 1 domain error, 2 usage error.
)";

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ProtoError("cli.io", "cannot open " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void spew(const std::string& path, const std::string& data) {
  if (path == "-") {
    std::cout << data;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ProtoError("cli.io", "cannot write " + path);
  f << data;
}

std::uint64_t parse_seed(const std::string& s) {
  try {
    std::size_t used = 0;
    std::uint64_t v = std::stoull(s, &used, 0);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("cli.usage: bad seed '" + s + "' (decimal or 0x-hex)");
  }
}

std::size_t parse_count(const std::string& s, const char* flag) {
  try {
    std::size_t used = 0;
    unsigned long long v = std::stoull(s, &used, 10);
    if (used != s.size()) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw UsageError(std::string("cli.usage: bad value for ") + flag + ": '" + s + "'");
  }
}

std::vector<int> parse_levels(const std::string& s) {
  std::vector<int> out;
  auto push = [&](const std::string& tok) {
    std::size_t dots = tok.find("..");
    if (dots != std::string::npos) {
      int a = static_cast<int>(parse_count(tok.substr(0, dots), "--levels"));
      int b = static_cast<int>(parse_count(tok.substr(dots + 2), "--levels"));
      if (b < a) throw UsageError("cli.usage: bad level range '" + tok + "'");
      for (int l = a; l <= b; ++l) out.push_back(l);
    } else {
      out.push_back(static_cast<int>(parse_count(tok, "--levels")));
    }
  };
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t comma = s.find(',', start);
    push(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw UsageError("cli.usage: --levels is empty");
  return out;
}

struct Args {
  std::string spec_path;
  std::map<std::string, std::string> flags;

  const std::string& need(const char* flag) const {
    auto it = flags.find(flag);
    if (it == flags.end())
      throw UsageError(std::string("cli.usage: missing required flag ") + flag);
    return it->second;
  }
  std::string get(const char* flag, const std::string& dflt) const {
    auto it = flags.find(flag);
    return it == flags.end() ? dflt : it->second;
  }
};

Args collect(int argc, char** argv, int from) {
  Args a;
  for (int i = from; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "-h" || arg == "--help") {
      std::cout << kHelp;
      std::exit(0);
    }
    if (!arg.empty() && arg[0] == '-' && arg != "-") {
      std::string key = arg == "-o" ? "--out" : arg;
      if (i + 1 >= argc) throw UsageError("cli.usage: flag " + arg + " needs a value");
      a.flags[key] = argv[++i];
    } else if (a.spec_path.empty()) {
      a.spec_path = arg;
    } else {
      throw UsageError("cli.usage: unexpected argument '" + arg + "'");
    }
  }
  if (a.spec_path.empty()) throw UsageError("cli.usage: missing <spec> argument");
  return a;
}

FormatGraph load_graph(const Args& a) { return parse_spec(slurp(a.spec_path)); }

ObfuscationPlan load_plan_file(const Args& a, const FormatGraph& g) {
  return load_plan(slurp(a.need("--plan")), g);
}

int cmd_validate(const Args& a) {
  FormatGraph g = load_graph(a);
  std::size_t nodes = 0, terminals = 0;
  for (const auto& path : dfs_order(g)) {
    ++nodes;
    if (g.at(path).type == NodeType::Terminal) ++terminals;
  }
  std::cout << "spec ok: protocol '" << g.name << "', " << nodes << " nodes ("
            << terminals << " terminals), root '" << g.root.name << "'\n";
  std::cout << "spec-hash: " << to_hex(spec_hash(g)) << "\n";
  return 0;
}

int cmd_obfuscate(const Args& a) {
  FormatGraph g = load_graph(a);
  int budget = static_cast<int>(parse_count(a.need("--budget"), "--budget"));
  std::uint64_t seed = parse_seed(a.need("--seed"));
  ObfuscationPlan plan = obfuscate(g, budget, seed);
  spew(a.need("--out"), save_plan(plan));
  std::cerr << "plan: " << plan.records.size() << " transforms, digest "
            << plan_digest(plan).substr(0, 8) << "\n";
  return 0;
}

int cmd_serialize(const Args& a) {
  FormatGraph g = load_graph(a);
  ObfuscationPlan plan = load_plan_file(a, g);
  MessageAst ast = ast_from_json(g, slurp(a.need("--ast")));
  Bytes wire = serialize(ast, plan, parse_seed(a.need("--msg-seed")));
  spew(a.need("--out"), std::string(wire.begin(), wire.end()));
  return 0;
}

int cmd_parse(const Args& a) {
  FormatGraph g = load_graph(a);
  ObfuscationPlan plan = load_plan_file(a, g);
  std::string raw = slurp(a.need("--in"));
  MessageAst ast = parse(Bytes(raw.begin(), raw.end()), plan, g);
  spew(a.need("--out"), ast_to_json(ast));
  return 0;
}

int cmd_fuzz(const Args& a) {
  FormatGraph g = load_graph(a);
  ObfuscationPlan plan = load_plan_file(a, g);
  std::size_t trials = parse_count(a.get("--trials", "1000"), "--trials");
  std::uint64_t seed = parse_seed(a.get("--seed", "0"));
  RoundtripReport rep = roundtrip_check(g, plan, trials, seed);
  if (!rep.ok) {
    std::cerr << "error: fuzz.roundtrip: trial " << rep.failed_trial << " failed\n"
              << rep.detail << "\n";
    return 1;
  }
  std::cout << "fuzz ok: " << rep.trials << " round-trips\n";
  return 0;
}

int cmd_codegen(const Args& a) {
  FormatGraph g = load_graph(a);
  ObfuscationPlan plan = load_plan_file(a, g);
  SourceBundle bundle = generate(plan, g);
  std::string dir = write_bundle(bundle, a.need("--out"));
  PotencyMetrics pm = measure(bundle);
  std::cout << dir << "\n";
  std::cerr << "potency: " << pm.lines << " lines, " << pm.type_definitions << " types, "
            << pm.call_graph_size << " functions, depth " << pm.call_graph_depth << "\n";
  return 0;
}

int cmd_bench(const Args& a) {
  // the bench harness works off a bundle; wrap ad-hoc spec files in one
  static ProtocolBundle local;
  local.spec = slurp(a.spec_path);
  local.name = parse_spec(local.spec).name;

  BenchConfig cfg;
  cfg.bundle = &local;
  cfg.levels = parse_levels(a.get("--levels", "0..4"));
  cfg.trials = parse_count(a.get("--trials", "1000"), "--trials");
  cfg.seed = parse_seed(a.get("--seed", "0"));
  std::string f = a.get("--format", "table");
  if (f == "table") cfg.format = ReportFormat::Table;
  else if (f == "csv") cfg.format = ReportFormat::Csv;
  else if (f == "json") cfg.format = ReportFormat::Json;
  else throw UsageError("cli.usage: unknown --format '" + f + "'");
  if (cfg.trials < 1) throw UsageError("cli.usage: --trials must be >= 1");

  PotencyCostReport rep = run_bench(cfg);
  std::cout << report_render(rep, cfg.format);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::string cmd = argc > 1 ? argv[1] : "";
  if (cmd.empty() || cmd == "-h" || cmd == "--help" || cmd == "help") {
    std::cout << kHelp;
    return cmd.empty() ? 2 : 0;
  }
  try {
    Args a = collect(argc, argv, 2);
    if (cmd == "validate") return cmd_validate(a);
    if (cmd == "obfuscate") return cmd_obfuscate(a);
    if (cmd == "serialize") return cmd_serialize(a);
    if (cmd == "parse") return cmd_parse(a);
    if (cmd == "fuzz") return cmd_fuzz(a);
    if (cmd == "codegen") return cmd_codegen(a);
    if (cmd == "bench") return cmd_bench(a);
    throw UsageError("cli.usage: unknown subcommand '" + cmd + "'");
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
