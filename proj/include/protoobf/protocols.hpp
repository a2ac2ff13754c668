#pragma once

#include <string>
#include <vector>

#include "protoobf/message_ast.hpp"

namespace protoobf {

// A canned message for a bundled protocol: a construction script (see
// ast_from_script) plus the exact level-0 wire it must serialize to.
struct ProtocolSample {
  std::string name;
  std::string script;
  Bytes golden;
};

struct ProtocolBundle {
  std::string name;
  std::string spec;   // DSL source; identical to specs/<name>.pobf
  std::string notes;  // modeling simplifications vs. the real protocol
  std::vector<ProtocolSample> samples;

  FormatGraph graph() const;  // parse_spec(spec)
};

const ProtocolBundle& modbus_bundle();
const ProtocolBundle& http_bundle();

std::vector<const ProtocolBundle*> all_bundles();
const ProtocolBundle* find_bundle(const std::string& name);  // nullptr if unknown

}  // namespace protoobf
