#include "reflectix/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <variant>

#include "reflectix/builtins.hpp"
#include "reflectix/demo.hpp"
#include "reflectix/desc.hpp"
#include "reflectix/expr.hpp"
#include "reflectix/generics.hpp"
#include "reflectix/safeser.hpp"
#include "reflectix/uniplate.hpp"

namespace reflectix::cli {

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MalformedBytes: return kMalformedBytes;
    case ErrorKind::Incompatible: return kIncompatible;
    case ErrorKind::UnknownType: return kUnknownType;
    case ErrorKind::ParseError: return kParseError;
    case ErrorKind::RepresentationRejected: return kRepresentationRejected;
    case ErrorKind::UnknownConstructor: return kUnknownConstructor;
    case ErrorKind::NoDescriptor: return kNoDescriptor;
    case ErrorKind::FuelExhausted: return kFuelExhausted;
    case ErrorKind::CyclicValue: return kCyclicValue;
    case ErrorKind::DepthExceeded: return kDepthExceeded;
    default: return kOtherError;
  }
}

namespace {

struct Failure {
  int code;
  std::string message;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kIoError, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Failure{kIoError, "error while reading " + path};
  return ss.str();
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (unsigned char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += static_cast<char>(c);
    } else if (c >= 0x20 && c < 0x7f) {
      out += static_cast<char>(c);
    } else {
      char buf[8];
      std::snprintf(buf, sizeof buf, "\\x%02x", c);
      out += buf;
    }
  }
  return out + "\"";
}

std::string edges(const std::vector<NodeRef>& fields) {
  std::string out = " ->";
  for (NodeRef f : fields) out += " " + std::to_string(f);
  return out;
}

void inspect(const std::string& path, std::ostream& out) {
  const ValueGraph g = decode_graph(read_file(path));
  out << "root " << g.root << "\n";
  out << "nodes " << g.nodes.size() << "\n";
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const ValueNode& n = g.nodes[i];
    out << i << " ";
    switch (n.kind) {
      case NodeKind::Imm: out << "Imm " << n.imm; break;
      case NodeKind::Block: out << "Block tag=" << n.tag << edges(n.fields); break;
      case NodeKind::Bytes: out << "Bytes " << quote(n.bytes); break;
      case NodeKind::Float: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", n.real);
        out << "Float " << buf;
        break;
      }
      case NodeKind::ExtCon: out << "ExtCon " << n.bytes << edges(n.fields); break;
      default: break;  // never decoded
    }
    out << "\n";
  }
}

Type parse_type_arg(const std::string& text) {
  demo::ensure_registered();
  return parse_type(text);
}

void validate(const std::string& path, const std::string& type_text, std::ostream& out) {
  const Type t = parse_type_arg(type_text);
  const std::string bytes = read_file(path);
  try {
    check_compat(t, decode_graph(bytes));
  } catch (const Incompatible& e) {
    out << "incompatible at " << e.path() << ": expected " << e.expected() << ", found " << e.found()
        << "\n";
    throw Failure{kIncompatible, ""};
  }
  out << "compatible\n";
}

std::uint64_t fuel_from_env() {
  const char* s = std::getenv("REFLECTIX_FUEL");
  if (s == nullptr || *s == '\0') return kDefaultFuel;
  std::uint64_t fuel = 0;
  const char* end = s + std::char_traits<char>::length(s);
  auto [p, ec] = std::from_chars(s, end, fuel);
  if (ec != std::errc() || p != end) {
    throw Failure{kUsage, "REFLECTIX_FUEL must be a non-negative integer, got '" + std::string(s) + "'"};
  }
  return fuel;
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::ostringstream ss;
  for (std::size_t i = 0; i < xs.size(); ++i) ss << (i ? " " : "") << xs[i];
  return ss.str();
}

void demo_expr(const std::string& path, const std::string& pass, std::ostream& out) {
  const Value e = expr::parse(read_file(path));
  if (pass == "simplify") {
    out << expr::print(expr::simplify(e)) << "\n";
  } else if (pass == "const-fold") {
    out << expr::print(expr::const_fold(e)) << "\n";
  } else if (pass == "simplify-more") {
    out << expr::print(expr::simplify_more(e, fuel_from_env())) << "\n";
  } else if (pass == "abstract") {
    auto [renamed, counter] = expr::abstract(e);
    out << expr::print(renamed) << "\n" << counter << "\n";
  } else if (pass == "free-vars") {
    out << join(expr::free_vars(e)) << "\n";
  } else if (pass == "constants") {
    out << join(expr::constants(e)) << "\n";
  } else if (pass == "height") {
    out << expr::height(e) << "\n";
  }
}

// The public structural type behind synonyms and representations.
struct Literal {
  Type written;  // the type the literal is read and serialized at
  bool is_expr = false;
};

Literal literal_type(const Type& t) {
  Type cur = t;
  for (int guard = 0; guard < 64; ++guard) {
    if (cur == demo::expr()) return Literal{cur, true};
    if (scalar_kind(cur) == ScalarKind::Int) return Literal{cur, false};
    const DescRef d = view_desc(cur);
    if (const auto* syn = std::get_if<SynonymDesc>(d.get())) {
      cur = syn->target;
    } else if (auto r = find_repr(cur)) {
      cur = r->repr_ty;
    } else {
      break;
    }
  }
  throw Failure{kUsage, "roundtrip reads Expr or integer literals; " + t.to_string() +
                            " is neither"};
}

Value parse_int_literal(std::string_view text) {
  const auto b = text.find_first_not_of(" \t\r\n");
  const auto e = text.find_last_not_of(" \t\r\n");
  const std::string_view s = b == std::string_view::npos ? "" : text.substr(b, e - b + 1);
  std::int64_t k = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), k);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
    throw ParseError(1, static_cast<int>(b == std::string_view::npos ? 1 : b + 1), "expected an integer");
  }
  return Value::imm(k);
}

// Breaks the blob without breaking the format: the root becomes a Float.
std::string corrupt(const std::string& blob) {
  ValueGraph g = decode_graph(blob);
  g.nodes[g.root] = ValueNode::make_float(0.5);
  return encode_graph(g);
}

void roundtrip(const std::string& path, const std::string& type_text, bool corrupt_blob,
               std::ostream& out) {
  const Type t = parse_type_arg(type_text);
  const Literal lit = literal_type(t);
  const std::string text = read_file(path);
  const Value v = lit.is_expr ? expr::parse(text) : parse_int_literal(text);

  std::string blob = serialize(lit.written, v);
  if (corrupt_blob) blob = corrupt(blob);
  const Value back = deserialize(t, blob);

  // Compare in the type the literal was written at.
  Value seen = back;
  Type cur = t;
  while (!(cur == lit.written)) {
    const DescRef d = view_desc(cur);
    if (const auto* syn = std::get_if<SynonymDesc>(d.get())) {
      cur = syn->target;
      continue;
    }
    const Representation r = repr(cur);
    seen = r.to_repr(seen);
    cur = r.repr_ty;
  }
  if (!equal(lit.written, seen, v)) {
    out << "different\n";
    throw Failure{kRoundtripMismatch, ""};
  }
  out << "equal (" << blob.size() << " bytes)\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Inspect, validate and round-trip GVG1 serialized values", "reflectix"};
  app.require_subcommand(1);

  std::string file, type_text, pass;
  bool corrupt_blob = false;

  auto* inspect_cmd = app.add_subcommand("inspect", "List the nodes of a serialized graph");
  inspect_cmd->add_option("FILE", file, "GVG1 file")->required();

  auto* validate_cmd = app.add_subcommand("validate", "Check a serialized graph against a type");
  validate_cmd->add_option("--type", type_text, "Type, e.g. List(Int)")->required();
  validate_cmd->add_option("FILE", file, "GVG1 file")->required();

  auto* demo_cmd = app.add_subcommand("demo-expr", "Run an expression pass on a source file");
  demo_cmd->add_option("--pass", pass, "Pass to run")
      ->required()
      ->check(CLI::IsMember({"simplify", "const-fold", "simplify-more", "abstract", "free-vars",
                             "constants", "height"}));
  demo_cmd->add_option("FILE", file, "Expression source")->required();

  auto* roundtrip_cmd =
      app.add_subcommand("roundtrip", "Serialize a literal, read it back and compare");
  roundtrip_cmd->add_option("--type", type_text, "Type to read the blob back at")->required();
  roundtrip_cmd->add_option("FILE", file, "Expression or integer literal")->required();
  roundtrip_cmd->add_flag("--corrupt", corrupt_blob, "Damage the intermediate blob (testing)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (inspect_cmd->parsed()) inspect(file, out);
    if (validate_cmd->parsed()) validate(file, type_text, out);
    if (demo_cmd->parsed()) demo_expr(file, pass, out);
    if (roundtrip_cmd->parsed()) roundtrip(file, type_text, corrupt_blob, out);
  } catch (const Failure& f) {
    if (!f.message.empty()) err << "error: " << f.message << "\n";
    return f.code;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kOtherError;
  }
  return kOk;
}

}  // namespace reflectix::cli
