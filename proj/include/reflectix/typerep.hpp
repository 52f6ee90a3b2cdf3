#pragma once

#include <compare>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reflectix/value.hpp"

namespace reflectix {

/// A nominal type constructor: module path, name and arity.
///
/// Entries live in a process-wide append-only table and are never freed,
/// so `const TypeCon*` is a stable identity.
class TypeCon {
 public:
  const std::string& name() const noexcept { return name_; }
  const std::vector<std::string>& module_path() const noexcept { return module_path_; }
  std::size_t arity() const noexcept { return arity_; }
  // "Stdlib.List" style; used for disambiguation only.
  std::string qualified_name() const;

 private:
  friend const TypeCon* declare_type_con(std::string, std::vector<std::string>, std::size_t);
  TypeCon(std::string name, std::vector<std::string> module_path, std::size_t arity)
      : name_(std::move(name)), module_path_(std::move(module_path)), arity_(arity) {}

  std::string name_;
  std::vector<std::string> module_path_;
  std::size_t arity_;
};

using TypeConRef = const TypeCon*;

// Declaring an existing (module path, name) with the same arity returns the
// existing entry; a different arity throws ArityMismatch.
TypeConRef declare_type_con(std::string name, std::vector<std::string> module_path,
                            std::size_t arity);

// Accepts either the bare name or the qualified name. Bare names that are
// ambiguous resolve to nothing.
std::optional<TypeConRef> find_type_con(std::string_view name);

/// A type term: a constructor applied to arguments, or the wildcard `Any`.
///
/// The same class serves as type representation (ground, no `Any`) and as
/// type pattern. Operations documented as taking a TypeRep require
/// `is_ground()`.
class Type {
 public:
  Type() = default;  // Any
  static Type any();
  static Type apply(TypeConRef head, std::vector<Type> args = {});

  bool is_any() const noexcept { return node_ == nullptr; }
  // Precondition: !is_any().
  TypeConRef head() const noexcept;
  std::span<const Type> args() const noexcept;
  const Type& arg(std::size_t i) const;

  bool is_ground() const noexcept;
  std::size_t hash() const noexcept;
  // Number of non-wildcard nodes.
  std::size_t concrete_size() const noexcept;

  friend bool operator==(const Type& a, const Type& b) noexcept;

  // `Head(arg1, arg2)`, wildcard rendered `_`.
  std::string to_string() const;

 private:
  struct Node;
  explicit Type(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

using TypeRep = Type;
using TypePattern = Type;

struct TypeHash {
  std::size_t operator()(const Type& t) const noexcept { return t.hash(); }
};

/// Parses the textual rendering produced by Type::to_string.
/// Throws ParseError on bad syntax and Error(UnknownType) on an unknown
/// head or wrong argument count.
Type parse_type(std::string_view text);

/// Evidence that two type representations denote the same type.
class EqualityWitness {
 public:
  const Type& left() const noexcept { return left_; }
  const Type& right() const noexcept { return right_; }
  EqualityWitness symmetric() const { return EqualityWitness(right_, left_); }

 private:
  EqualityWitness(Type l, Type r) : left_(std::move(l)), right_(std::move(r)) {}
  friend std::optional<EqualityWitness> ty_equal(const Type&, const Type&);
  friend EqualityWitness synonym_witness(const Type&, const Type&);

  Type left_;
  Type right_;
};

std::optional<EqualityWitness> ty_equal(const Type& a, const Type& b);

/// A value tagged with its own type representation.
struct Dyn {
  Type rep;
  Value value;
};

/// Returns `v` retagged at `to` iff `from` and `to` are equal types.
std::optional<Value> coerce(const Type& from, const Type& to, const Value& v);
std::optional<Dyn> coerce(const Dyn& d, const Type& to);

bool matches(const Type& pattern, const Type& t);

enum class Specificity { MoreSpecific, MoreGeneral, Equal, Incomparable };

Specificity compare_specificity(const Type& p, const Type& q);

// Total order used to sort dispatch buckets: agrees with
// compare_specificity whenever that is not Incomparable, and breaks
// Incomparable ties by constructor name (then module path).
std::strong_ordering dispatch_order(const Type& p, const Type& q);

// Least general pattern that generalizes both arguments.
Type anti_unify(const Type& a, const Type& b);

// Built-in witnesses.
namespace ty {

TypeConRef int_con();
TypeConRef char_con();
TypeConRef float_con();
TypeConRef string_con();
TypeConRef bytes_con();
TypeConRef bool_con();
TypeConRef unit_con();
TypeConRef list_con();
TypeConRef option_con();
TypeConRef pair_con();
TypeConRef triple_con();
TypeConRef array_con();
TypeConRef fun_con();

Type int_t();
Type char_t();
Type float_t();
Type string_t();
Type bytes_t();
Type bool_t();
Type unit_t();
Type list(Type elem);
Type option(Type elem);
Type pair(Type a, Type b);
Type triple(Type a, Type b, Type c);
Type array(Type elem);
Type fun(Type a, Type b);

}  // namespace ty

}  // namespace reflectix
