#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "reflectix/desc.hpp"

namespace reflectix {

// ---------------------------------------------------------------------------
// Sum of products
//
// Values seen through the view: Sum injections are Block(0, [x]) (left) and
// Block(1, [x]) (right), Prod is Block(0, [a, b]), Unit is Imm 0. Iso maps a
// value of the viewed type to and from that encoding (fwd: to the view).

struct SumProd;
using SumProdRef = std::shared_ptr<const SumProd>;

struct SumProd {
  enum class Kind { Empty, Sum, Unit, Prod, Iso, Con, FieldTag, Base, Delay };

  Kind kind;
  SumProdRef left;   // Sum, Prod; the body of Iso, Con and FieldTag
  SumProdRef right;  // Sum, Prod
  std::string name;  // Con, FieldTag
  Type ty;           // Base, Delay
  reflectix::Iso iso;

  std::string to_string() const;
};

// Throws Error(NoView) when `t` has no descriptor and is not a scalar.
SumProdRef sumprod(const Type& t);

Value inject_left(Value x);
Value inject_right(Value x);

// ---------------------------------------------------------------------------
// Spine

struct ConMeta {
  std::string con_name;
  std::string type_name;
  std::vector<std::string> module_path;
  std::size_t arity = 0;
  std::uint32_t tag = 0;
  ConKind kind = ConKind::Tuple;

  friend bool operator==(const ConMeta&, const ConMeta&) = default;
};

struct Spine;
using SpineRef = std::shared_ptr<const Spine>;

struct Spine {
  enum class Kind { Con, App };

  Kind kind;
  // Con: builds the value from all of its arguments.
  std::function<Value(std::span<const Value>)> build;
  ConMeta meta;
  // App
  SpineRef fn;
  Type arg_ty;
  Value arg;
};

// Throws Error(NoView) unless `t` is a variant, record or product (possibly
// behind synonyms).
SpineRef spine(const Type& t, const Value& v);
Value rebuild(const SpineRef& s);

// ---------------------------------------------------------------------------
// List of constructors

// Variants give their constructors, records and products a single synthetic
// constructor, every other category nothing. The list for a type is built
// once, so constructor identity is stable across calls.
const std::vector<ConstructorRef>& conlist(const Type& t);

// Linear scan over `proj`. Throws Error(NoMatchingConstructor).
ConApp conlist_conap(std::span<const ConstructorRef> cs, const Value& v);

// Follows synonyms to the first non-synonym type.
Type resolve_synonyms(const Type& t);

}  // namespace reflectix
