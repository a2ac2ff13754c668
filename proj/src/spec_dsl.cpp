#include "protoobf/spec_dsl.hpp"

#include <openssl/evp.h>

#include <cctype>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace protoobf {

namespace {

struct Token {
  enum class Kind { Ident, Int, Bytes, Punct, Eof };
  Kind kind;
  std::string text;  // punct: one of { } [ ] ( ) : , ==
  std::uint64_t number = 0;
  Bytes bytes;
  int line = 0, col = 0;
};

class Lexer {
public:
  explicit Lexer(const std::string& src) : src_(src) {}

  Token next() {
    skip_ws();
    Token t;
    t.line = line_;
    t.col = col_;
    if (pos_ >= src_.size()) {
      t.kind = Token::Kind::Eof;
      return t;
    }
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string word;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        word.push_back(advance());
      t.kind = Token::Kind::Ident;
      t.text = word;
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      // 0x... is a byte-string literal; bare digits are an integer.
      if (c == '0' && pos_ + 1 < src_.size() && src_[pos_ + 1] == 'x') {
        advance();
        advance();
        std::string hex;
        while (pos_ < src_.size() &&
               std::isxdigit(static_cast<unsigned char>(src_[pos_])))
          hex.push_back(advance());
        if (hex.empty() || hex.size() % 2 != 0)
          fail(t, "byte literal needs an even number of hex digits");
        t.kind = Token::Kind::Bytes;
        t.bytes = from_hex(hex);
        return t;
      }
      std::uint64_t v = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
        v = v * 10 + static_cast<std::uint64_t>(advance() - '0');
      t.kind = Token::Kind::Int;
      t.number = v;
      return t;
    }
    if (c == '=' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') {
      advance();
      advance();
      t.kind = Token::Kind::Punct;
      t.text = "==";
      return t;
    }
    if (std::string("{}[]():,").find(c) != std::string::npos) {
      t.kind = Token::Kind::Punct;
      t.text = std::string(1, advance());
      return t;
    }
    fail(t, std::string("unexpected character '") + c + "'");
    return t;  // unreachable
  }

private:
  char advance() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_ws() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  [[noreturn]] void fail(const Token& t, const std::string& msg) {
    throw ProtoError("dsl.syntax", std::to_string(t.line) + ":" + std::to_string(t.col) +
                                       ": " + msg);
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
};

struct NodeDecl {
  FormatNode node;                    // children left empty
  std::vector<std::string> child_names;
  int line = 0, col = 0;
};

class Parser {
public:
  explicit Parser(const std::string& src) : lexer_(src) { shift(); }

  FormatGraph parse() {
    expect_ident("protocol");
    FormatGraph graph;
    graph.name = expect_name();
    expect_punct("{");
    std::string root_name;
    while (true) {
      if (cur_.kind == Token::Kind::Ident && cur_.text == "node") {
        parse_node_decl();
      } else if (cur_.kind == Token::Kind::Ident && cur_.text == "root") {
        shift();
        expect_punct(":");
        root_name = expect_name();
        break;
      } else {
        fail("expected 'node' or 'root'");
      }
    }
    expect_punct("}");
    if (cur_.kind != Token::Kind::Eof) fail("trailing input after protocol block");
    graph.root = build_tree(root_name);
    for (const auto& [name, decl] : decls_)
      if (!used_.count(name) && name != root_name)
        throw ProtoError("dsl.semantic", "node " + name + " declared but never used");
    graph.rebuild_index();
    auto report = validate(graph);
    if (!report.ok()) throw ProtoError("dsl.validate", "\n" + report.summary());
    return graph;
  }

private:
  void parse_node_decl() {
    NodeDecl decl;
    decl.line = cur_.line;
    decl.col = cur_.col;
    shift();  // 'node'
    decl.node.name = expect_name();
    if (decls_.count(decl.node.name))
      throw ProtoError("dsl.semantic", "duplicate node name " + decl.node.name);
    expect_punct("{");
    bool have_type = false, have_boundary = false;
    while (!(cur_.kind == Token::Kind::Punct && cur_.text == "}")) {
      std::string attr = expect_name();
      expect_punct(":");
      if (attr == "type") {
        decl.node.type = parse_type();
        have_type = true;
      } else if (attr == "boundary") {
        decl.node.boundary = parse_boundary();
        have_boundary = true;
      } else if (attr == "children") {
        expect_punct("[");
        decl.child_names.push_back(expect_name());
        while (cur_.kind == Token::Kind::Punct && cur_.text == ",") {
          shift();
          decl.child_names.push_back(expect_name());
        }
        expect_punct("]");
      } else if (attr == "child") {
        decl.child_names.push_back(expect_name());
      } else if (attr == "present_if") {
        PresenceCondition pc;
        pc.ref = expect_name();
        expect_punct("==");
        pc.expected = expect_bytes();
        decl.node.presence = pc;
      } else if (attr == "derives") {
        std::string kind = expect_name();
        if (kind == "length_of")
          decl.node.derivation.kind = DerivationKind::LengthOf;
        else if (kind == "count_of")
          decl.node.derivation.kind = DerivationKind::CountOf;
        else
          fail("expected length_of or count_of");
        expect_punct("(");
        decl.node.derivation.ref = expect_name();
        expect_punct(")");
      } else {
        fail("unknown attribute " + attr);
      }
    }
    shift();  // '}'
    if (!have_type) fail("node " + decl.node.name + " is missing a type");
    if (!have_boundary) fail("node " + decl.node.name + " is missing a boundary");
    decls_.emplace(decl.node.name, std::move(decl));
  }

  NodeType parse_type() {
    std::string w = expect_name();
    if (w == "terminal") return NodeType::Terminal;
    if (w == "sequence") return NodeType::Sequence;
    if (w == "optional") return NodeType::Optional;
    if (w == "repetition") return NodeType::Repetition;
    if (w == "tabular") return NodeType::Tabular;
    fail("unknown node type " + w);
  }

  Boundary parse_boundary() {
    std::string w = expect_name();
    if (w == "end") return Boundary::end();
    if (w == "delegated") return Boundary::delegated();
    expect_punct("(");
    Boundary b;
    if (w == "fixed") {
      if (cur_.kind != Token::Kind::Int) fail("fixed() needs an integer size");
      b = Boundary::fixed(static_cast<std::size_t>(cur_.number));
      shift();
    } else if (w == "delimited") {
      b = Boundary::delimited(expect_bytes());
    } else if (w == "length") {
      b = Boundary::length(expect_name());
    } else if (w == "counter") {
      b = Boundary::counter(expect_name());
    } else {
      fail("unknown boundary " + w);
    }
    expect_punct(")");
    return b;
  }

  FormatNode build_tree(const std::string& name) {
    auto it = decls_.find(name);
    if (it == decls_.end()) throw ProtoError("dsl.semantic", "unknown node " + name);
    if (used_.count(name))
      throw ProtoError("dsl.semantic", "node " + name + " used as a child more than once");
    used_.insert(name);
    FormatNode node = it->second.node;
    for (const auto& child : it->second.child_names)
      node.children.push_back(build_tree(child));
    return node;
  }

  void shift() { cur_ = lexer_.next(); }

  std::string expect_name() {
    if (cur_.kind != Token::Kind::Ident) fail("expected identifier");
    std::string s = cur_.text;
    shift();
    return s;
  }

  Bytes expect_bytes() {
    if (cur_.kind != Token::Kind::Bytes) fail("expected byte literal (0x..)");
    Bytes b = cur_.bytes;
    shift();
    return b;
  }

  void expect_ident(const std::string& word) {
    if (cur_.kind != Token::Kind::Ident || cur_.text != word) fail("expected '" + word + "'");
    shift();
  }

  void expect_punct(const std::string& p) {
    if (cur_.kind != Token::Kind::Punct || cur_.text != p) fail("expected '" + p + "'");
    shift();
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw ProtoError("dsl.syntax", std::to_string(cur_.line) + ":" + std::to_string(cur_.col) +
                                       ": " + msg);
  }

  Lexer lexer_;
  Token cur_;
  std::map<std::string, NodeDecl> decls_;
  std::set<std::string> used_;
};

void print_boundary(std::ostringstream& os, const Boundary& b) {
  switch (b.kind) {
    case BoundaryKind::Fixed: os << "fixed(" << b.size << ")"; break;
    case BoundaryKind::Delimited: os << "delimited(0x" << to_hex(b.delim) << ")"; break;
    case BoundaryKind::Length: os << "length(" << b.ref << ")"; break;
    case BoundaryKind::Counter: os << "counter(" << b.ref << ")"; break;
    case BoundaryKind::End: os << "end"; break;
    case BoundaryKind::Delegated: os << "delegated"; break;
  }
}

}  // namespace

FormatGraph parse_spec(const std::string& text) { return Parser(text).parse(); }

std::string print_spec(const FormatGraph& graph) {
  std::ostringstream os;
  os << "protocol " << graph.name << " {\n";
  std::function<void(const FormatNode&)> emit = [&](const FormatNode& n) {
    if (n.role != NodeRole::Plain)
      throw ProtoError("dsl.print", "cannot print transformed graphs");
    os << "  node " << n.name << " {\n";
    os << "    type: " << node_type_name(n.type) << "\n";
    os << "    boundary: ";
    print_boundary(os, n.boundary);
    os << "\n";
    if (!n.children.empty()) {
      if (n.children.size() == 1 && n.type != NodeType::Sequence) {
        os << "    child: " << n.children[0].name << "\n";
      } else {
        os << "    children: [";
        for (std::size_t i = 0; i < n.children.size(); ++i)
          os << (i ? ", " : "") << n.children[i].name;
        os << "]\n";
      }
    }
    if (n.presence)
      os << "    present_if: " << n.presence->ref << " == 0x" << to_hex(n.presence->expected)
         << "\n";
    if (n.derivation.kind != DerivationKind::None)
      os << "    derives: "
         << (n.derivation.kind == DerivationKind::LengthOf ? "length_of" : "count_of") << "("
         << n.derivation.ref << ")\n";
    os << "  }\n";
    for (const auto& c : n.children) emit(c);
  };
  emit(graph.root);
  os << "  root: " << graph.root.name << "\n";
  os << "}\n";
  return os.str();
}

Bytes spec_hash(const FormatGraph& graph) {
  std::string canon = print_spec(graph);
  Bytes digest(EVP_MAX_MD_SIZE);
  unsigned int len = 0;
  if (!EVP_Digest(canon.data(), canon.size(), digest.data(), &len, EVP_sha256(), nullptr))
    throw ProtoError("dsl.hash", "sha256 failed");
  digest.resize(len);
  return digest;
}

}  // namespace protoobf
