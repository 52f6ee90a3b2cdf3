#pragma once

#include <any>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace reflectix {

class Constructor;

// Runtime layout of a library value. It mirrors a tagged-word runtime:
// immediates for ints, chars and constant constructors; tagged blocks for
// tuples, records, arrays and non-constant constructors.
enum class ValueKind : std::uint8_t {
  Imm,
  Block,
  Bytes,
  Float,
  ExtCon,   // constructor of an extensible variant
  Custom,   // opaque host payload, identified by a string
  Closure,  // host function
};

std::string_view to_string(ValueKind kind) noexcept;

/// Immutable, cheaply copyable handle to a library value.
///
/// Copies share the underlying node, so physical identity (`same`) is
/// observable and the serializer preserves it.
class Value {
 public:
  using Function = std::function<Value(const Value&)>;

  Value();  // Imm 0, the unit value

  static Value imm(std::int64_t i);
  static Value block(std::uint32_t tag, std::vector<Value> fields);
  static Value bytes(std::string data);
  static Value real(double d);
  // `identity` is the registered constructor object; null marks a value
  // whose constructor has not been reinstated yet.
  static Value ext_con(const Constructor* identity, std::string name, std::vector<Value> fields);
  static Value custom(std::string identifier, std::any payload);
  static Value closure(Function f);

  ValueKind kind() const noexcept;
  bool is(ValueKind k) const noexcept { return kind() == k; }

  // Accessors throw Error(MalformedValue) on a kind mismatch.
  std::int64_t as_imm() const;
  std::uint32_t tag() const;
  std::span<const Value> fields() const;  // Block and ExtCon
  const Value& field(std::size_t i) const;
  std::string_view as_bytes() const;
  double as_float() const;
  std::string_view ext_name() const;
  const Constructor* ext_identity() const;
  std::string_view custom_identifier() const;
  const std::any& custom_payload() const;
  Value call(const Value& arg) const;

  // Physical identity, not structural equality.
  bool same(const Value& other) const noexcept { return node_ == other.node_; }
  const void* address() const noexcept { return node_.get(); }

 private:
  struct Node;
  explicit Value(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  const Node& node() const noexcept { return *node_; }

  std::shared_ptr<const Node> node_;
};

}  // namespace reflectix
