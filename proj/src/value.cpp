#include "reflectix/value.hpp"

#include <variant>

#include "reflectix/error.hpp"

namespace reflectix {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NotSupported: return "NotSupported";
    case ErrorKind::DuplicateDescriptor: return "DuplicateDescriptor";
    case ErrorKind::ArityMismatch: return "ArityMismatch";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::MalformedValue: return "MalformedValue";
    case ErrorKind::UnknownConstructor: return "UnknownConstructor";
    case ErrorKind::DuplicateConstructor: return "DuplicateConstructor";
    case ErrorKind::NoRepresentation: return "NoRepresentation";
    case ErrorKind::NoView: return "NoView";
    case ErrorKind::NoMatchingConstructor: return "NoMatchingConstructor";
    case ErrorKind::BrandMismatch: return "BrandMismatch";
    case ErrorKind::FuelExhausted: return "FuelExhausted";
    case ErrorKind::MalformedBytes: return "MalformedBytes";
    case ErrorKind::Incompatible: return "Incompatible";
    case ErrorKind::RepresentationRejected: return "RepresentationRejected";
    case ErrorKind::NoDescriptor: return "NoDescriptor";
    case ErrorKind::CyclicValue: return "CyclicValue";
    case ErrorKind::DepthExceeded: return "DepthExceeded";
    case ErrorKind::UnknownType: return "UnknownType";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

std::string_view to_string(ValueKind kind) noexcept {
  switch (kind) {
    case ValueKind::Imm: return "Imm";
    case ValueKind::Block: return "Block";
    case ValueKind::Bytes: return "Bytes";
    case ValueKind::Float: return "Float";
    case ValueKind::ExtCon: return "ExtCon";
    case ValueKind::Custom: return "Custom";
    case ValueKind::Closure: return "Closure";
  }
  return "Unknown";
}

namespace {

struct BlockRep {
  std::uint32_t tag;
  std::vector<Value> fields;
};

struct ExtRep {
  const Constructor* identity;
  std::string name;
  std::vector<Value> fields;
};

struct CustomRep {
  std::string identifier;
  std::any payload;
};

}  // namespace

struct Value::Node {
  std::variant<std::int64_t, BlockRep, std::string, double, ExtRep, CustomRep, Function> data;

  // Long chains (lists) would otherwise be freed by one nested destructor
  // call per link.
  ~Node() {
    std::vector<std::shared_ptr<const Node>> doomed;
    release_fields(doomed);
    while (!doomed.empty()) {
      std::shared_ptr<const Node> n = std::move(doomed.back());
      doomed.pop_back();
      if (n.use_count() == 1) const_cast<Node&>(*n).release_fields(doomed);
    }
  }

  void release_fields(std::vector<std::shared_ptr<const Node>>& out) {
    std::vector<Value>* fields = nullptr;
    if (auto* b = std::get_if<BlockRep>(&data)) fields = &b->fields;
    if (auto* e = std::get_if<ExtRep>(&data)) fields = &e->fields;
    if (fields == nullptr) return;
    for (auto& f : *fields) {
      if (f.node_ && f.node_.use_count() == 1) out.push_back(std::move(f.node_));
    }
  }
};

namespace {

[[noreturn]] void wrong_kind(ValueKind want, ValueKind got) {
  throw Error(ErrorKind::MalformedValue, "expected a " + std::string(to_string(want)) +
                                             " value, found " + std::string(to_string(got)));
}

}  // namespace

Value::Value() : Value(imm(0)) {}

Value Value::imm(std::int64_t i) { return Value(std::make_shared<const Node>(Node{i})); }

Value Value::block(std::uint32_t tag, std::vector<Value> fields) {
  return Value(std::make_shared<const Node>(Node{BlockRep{tag, std::move(fields)}}));
}

Value Value::bytes(std::string data) {
  return Value(std::make_shared<const Node>(Node{std::move(data)}));
}

Value Value::real(double d) { return Value(std::make_shared<const Node>(Node{d})); }

Value Value::ext_con(const Constructor* identity, std::string name, std::vector<Value> fields) {
  return Value(std::make_shared<const Node>(
      Node{ExtRep{identity, std::move(name), std::move(fields)}}));
}

Value Value::custom(std::string identifier, std::any payload) {
  return Value(std::make_shared<const Node>(
      Node{CustomRep{std::move(identifier), std::move(payload)}}));
}

Value Value::closure(Function f) { return Value(std::make_shared<const Node>(Node{std::move(f)})); }

ValueKind Value::kind() const noexcept { return static_cast<ValueKind>(node().data.index()); }

std::int64_t Value::as_imm() const {
  if (auto* p = std::get_if<std::int64_t>(&node().data)) return *p;
  wrong_kind(ValueKind::Imm, kind());
}

std::uint32_t Value::tag() const {
  if (auto* p = std::get_if<BlockRep>(&node().data)) return p->tag;
  wrong_kind(ValueKind::Block, kind());
}

std::span<const Value> Value::fields() const {
  if (auto* p = std::get_if<BlockRep>(&node().data)) return p->fields;
  if (auto* p = std::get_if<ExtRep>(&node().data)) return p->fields;
  wrong_kind(ValueKind::Block, kind());
}

const Value& Value::field(std::size_t i) const {
  auto fs = fields();
  if (i >= fs.size()) {
    throw Error(ErrorKind::IndexOutOfRange,
                "field " + std::to_string(i) + " of a block of size " + std::to_string(fs.size()));
  }
  return fs[i];
}

std::string_view Value::as_bytes() const {
  if (auto* p = std::get_if<std::string>(&node().data)) return *p;
  wrong_kind(ValueKind::Bytes, kind());
}

double Value::as_float() const {
  if (auto* p = std::get_if<double>(&node().data)) return *p;
  wrong_kind(ValueKind::Float, kind());
}

std::string_view Value::ext_name() const {
  if (auto* p = std::get_if<ExtRep>(&node().data)) return p->name;
  wrong_kind(ValueKind::ExtCon, kind());
}

const Constructor* Value::ext_identity() const {
  if (auto* p = std::get_if<ExtRep>(&node().data)) return p->identity;
  wrong_kind(ValueKind::ExtCon, kind());
}

std::string_view Value::custom_identifier() const {
  if (auto* p = std::get_if<CustomRep>(&node().data)) return p->identifier;
  wrong_kind(ValueKind::Custom, kind());
}

const std::any& Value::custom_payload() const {
  if (auto* p = std::get_if<CustomRep>(&node().data)) return p->payload;
  wrong_kind(ValueKind::Custom, kind());
}

Value Value::call(const Value& arg) const {
  if (auto* p = std::get_if<Function>(&node().data)) return (*p)(arg);
  wrong_kind(ValueKind::Closure, kind());
}

}  // namespace reflectix
