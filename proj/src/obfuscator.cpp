#include "protoobf/obfuscator.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "protoobf/prng.hpp"
#include "protoobf/spec_dsl.hpp"

namespace protoobf {

namespace {

using ordered_json = nlohmann::ordered_json;

TransformParams draw_params(TransformKind kind, const FormatGraph& g,
                            const NodePath& path, Prng& rng) {
  TransformParams p;
  const FormatNode& t = g.at(path);
  switch (kind) {
    case TransformKind::SplitCat:
      p.offset = 1 + rng.below(t.boundary.size - 1);
      break;
    case TransformKind::ConstAdd:
    case TransformKind::ConstSub:
    case TransformKind::ConstXor:
      p.constant = rng.bytes(t.boundary.size);
      break;
    case TransformKind::PadInsert:
      p.index = rng.below(pad_index_limit(t) + 1);
      // Mostly 1 byte: pads add up across budget rounds.
      p.width = 1 + (rng.below(4) == 0 ? 1 : 0);
      break;
    case TransformKind::BoundaryChange:
      p.width = 2 + rng.below(2);  // 1-byte prefixes overflow too easily
      break;
    case TransformKind::ChildMove: {
      auto pairs = valid_child_swaps(g, path);
      auto pick = pairs[rng.below(pairs.size())];
      p.child_i = pick.first;
      p.child_j = pick.second;
      break;
    }
    default:
      break;
  }
  return p;
}

ordered_json params_to_json(const TransformRecord& r) {
  ordered_json p = ordered_json::object();
  switch (r.kind) {
    case TransformKind::SplitCat: p["offset"] = r.params.offset; break;
    case TransformKind::ConstAdd:
    case TransformKind::ConstSub:
    case TransformKind::ConstXor: p["constant"] = to_hex(r.params.constant); break;
    case TransformKind::PadInsert:
      p["index"] = r.params.index;
      p["width"] = r.params.width;
      break;
    case TransformKind::BoundaryChange: p["width"] = r.params.width; break;
    case TransformKind::ChildMove:
      p["i"] = r.params.child_i;
      p["j"] = r.params.child_j;
      break;
    default: break;
  }
  return p;
}

TransformParams params_from_json(TransformKind kind, const ordered_json& p) {
  TransformParams out;
  switch (kind) {
    case TransformKind::SplitCat: out.offset = p.at("offset").get<std::size_t>(); break;
    case TransformKind::ConstAdd:
    case TransformKind::ConstSub:
    case TransformKind::ConstXor:
      out.constant = from_hex(p.at("constant").get<std::string>());
      break;
    case TransformKind::PadInsert:
      out.index = p.at("index").get<std::size_t>();
      out.width = p.at("width").get<std::size_t>();
      break;
    case TransformKind::BoundaryChange: out.width = p.at("width").get<std::size_t>(); break;
    case TransformKind::ChildMove:
      out.child_i = p.at("i").get<std::size_t>();
      out.child_j = p.at("j").get<std::size_t>();
      break;
    default: break;
  }
  return out;
}

}  // namespace

ObfuscationPlan obfuscate(const FormatGraph& graph, int per_node_budget,
                          std::uint64_t seed) {
  auto report = validate(graph);
  if (!report.ok())
    throw ProtoError("obfuscate.graph", "invalid graph:\n" + report.summary());

  ObfuscationPlan plan;
  plan.protocol = graph.name;
  plan.spec_hash = to_hex(spec_hash(graph));
  plan.seed = seed;
  plan.per_node_budget = per_node_budget;
  plan.final_graph = graph;
  plan.final_graph.rebuild_index();

  Prng rng(seed);
  for (int pass = 0; pass < per_node_budget; ++pass) {
    // Snapshot: nodes made during this pass become eligible next pass; nodes
    // replaced mid-pass simply drop out of the index.
    std::vector<std::string> names;
    for (const auto& path : dfs_order(plan.final_graph))
      names.push_back(plan.final_graph.at(path).name);

    for (const auto& name : names) {
      auto it = plan.final_graph.index.find(name);
      if (it == plan.final_graph.index.end()) continue;
      NodePath path = it->second;
      auto kinds = applicable(plan.final_graph, path);
      if (kinds.empty()) continue;
      auto pick = kinds.begin();
      std::advance(pick, static_cast<long>(rng.below(kinds.size())));
      TransformRecord record{*pick, path,
                             draw_params(*pick, plan.final_graph, path, rng),
                             phase_of(*pick)};
      plan.final_graph = apply_transform(plan.final_graph, record);
      plan.records.push_back(std::move(record));
    }
  }
  return plan;
}

std::string save_plan(const ObfuscationPlan& plan) {
  ordered_json j;
  j["version"] = plan.version;
  j["protocol"] = plan.protocol;
  j["spec_hash"] = plan.spec_hash;
  j["seed"] = std::to_string(plan.seed);
  j["per_node_budget"] = plan.per_node_budget;
  j["records"] = ordered_json::array();
  for (const auto& r : plan.records) {
    ordered_json rec;
    rec["kind"] = transform_kind_name(r.kind);
    rec["target"] = r.target;
    rec["phase"] = r.phase == Phase::Down ? "down" : "up";
    rec["params"] = params_to_json(r);
    j["records"].push_back(std::move(rec));
  }
  return j.dump(2) + "\n";
}

ObfuscationPlan load_plan(const std::string& text, const FormatGraph& graph) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ProtoError("plan.parse", e.what());
  }
  ObfuscationPlan plan;
  try {
    plan.version = j.at("version").get<int>();
    if (plan.version != 1)
      throw ProtoError("plan.version",
                       "unknown plan version " + std::to_string(plan.version));
    plan.protocol = j.at("protocol").get<std::string>();
    plan.spec_hash = j.at("spec_hash").get<std::string>();
    plan.seed = std::stoull(j.at("seed").get<std::string>());
    plan.per_node_budget = j.at("per_node_budget").get<int>();
    for (const auto& rec : j.at("records")) {
      TransformRecord r;
      r.kind = transform_kind_from_name(rec.at("kind").get<std::string>());
      r.target = rec.at("target").get<NodePath>();
      std::string ph = rec.at("phase").get<std::string>();
      if (ph != "down" && ph != "up") throw ProtoError("plan.parse", "bad phase " + ph);
      r.phase = ph == "down" ? Phase::Down : Phase::Up;
      if (r.phase != phase_of(r.kind))
        throw ProtoError("plan.parse", "phase does not match kind " + std::string(transform_kind_name(r.kind)));
      r.params = params_from_json(r.kind, rec.at("params"));
      plan.records.push_back(std::move(r));
    }
  } catch (const ProtoError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProtoError("plan.parse", e.what());
  }

  if (plan.spec_hash != to_hex(spec_hash(graph)))
    throw ProtoError("plan.hash", "plan does not match spec");

  plan.final_graph = graph;
  plan.final_graph.rebuild_index();
  for (std::size_t i = 0; i < plan.records.size(); ++i) {
    try {
      plan.final_graph = apply_transform(plan.final_graph, plan.records[i]);
    } catch (const ProtoError& e) {
      throw ProtoError("plan.replay",
                       "record " + std::to_string(i) + ": " + e.what());
    }
  }
  return plan;
}

std::string plan_digest(const ObfuscationPlan& plan) {
  std::string text = save_plan(plan);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr);
  return to_hex(Bytes(md, md + len));
}

}  // namespace protoobf
