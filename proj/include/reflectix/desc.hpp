#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "reflectix/typerep.hpp"
#include "reflectix/value.hpp"

namespace reflectix {

// ---------------------------------------------------------------------------
// Fields and products

struct Field {
  std::string name;  // empty for positional constructor arguments
  Type ty;
  // Replaces the field inside the record held by the handle. Empty when the
  // field is immutable.
  std::function<void(Value& record, const Value& v)> set;
};

using FieldList = std::vector<Field>;

// Component types of a product, in order.
using ProductShape = std::vector<Type>;

ProductShape shape_of(const FieldList& fields);

// n-tuple <-> right-nested binary products ending in unit:
// (a, b, c) <-> (a, (b, (c, ()))).
Value nest_product(std::span<const Value> items);
std::vector<Value> unnest_product(const Value& nested);

struct Iso {
  std::function<Value(const Value&)> fwd;
  std::function<Value(const Value&)> bck;
};

// ---------------------------------------------------------------------------
// Constructors

enum class ConKind : std::uint8_t {
  Constant,     // Imm(tag)
  NonConstant,  // Block(tag, args)
  Extensible,   // ExtCon(identity, name, args)
  Tuple,        // Block(0, args): the single constructor of a record or product
};

class Constructor {
 public:
  using Embed = std::function<Value(std::span<const Value>)>;
  using Proj = std::function<std::optional<std::vector<Value>>(const Value&)>;

  Constructor(std::string name, FieldList args, ConKind kind, std::uint32_t tag);
  // Overrides the encoding implied by `kind`.
  Constructor(std::string name, FieldList args, Embed embed, Proj proj);

  const std::string& name() const noexcept { return name_; }
  const FieldList& args() const noexcept { return args_; }
  std::size_t arity() const noexcept { return args_.size(); }
  ProductShape shape() const { return shape_of(args_); }
  ConKind kind() const noexcept { return kind_; }
  std::uint32_t tag() const noexcept { return tag_; }

  // Applies the constructor. Throws ArityMismatch on a wrong argument count.
  Value embed(std::span<const Value> args) const;
  // Arguments iff `v` was built by this constructor.
  std::optional<std::vector<Value>> proj(const Value& v) const;

 private:
  std::string name_;
  FieldList args_;
  ConKind kind_;
  std::uint32_t tag_ = 0;
  Embed embed_;
  Proj proj_;
};

using ConstructorRef = std::shared_ptr<const Constructor>;

struct ConApp {
  ConstructorRef con;
  std::vector<Value> args;
};

struct ConSpec {
  std::string name;
  FieldList args;
};

// Constructors of a variant; constant and non-constant ones are indexed
// separately, each by a dense tag assigned in declaration order.
class ConstructorSet {
 public:
  ConstructorSet() = default;
  explicit ConstructorSet(const std::vector<ConSpec>& specs);

  std::size_t cst_len() const noexcept { return cst_.size(); }
  std::size_t ncst_len() const noexcept { return ncst_.size(); }
  const ConstructorRef& cst_get(std::size_t i) const;
  const ConstructorRef& ncst_get(std::size_t i) const;
  const std::vector<ConstructorRef>& cst() const noexcept { return cst_; }
  const std::vector<ConstructorRef>& ncst() const noexcept { return ncst_; }
  const std::vector<ConstructorRef>& con_list() const noexcept { return all_; }

 private:
  std::vector<ConstructorRef> all_;
  std::vector<ConstructorRef> cst_;
  std::vector<ConstructorRef> ncst_;
};

// ---------------------------------------------------------------------------
// Descriptor categories

struct VariantDesc {
  std::string name;
  std::vector<std::string> module_path;
  ConstructorSet cons;
};

struct RecordDesc {
  std::string name;
  std::vector<std::string> module_path;
  FieldList fields;
  Iso iso;  // record <-> nested product
};

struct ProductDesc {
  ProductShape shape;
  Iso iso;  // tuple <-> nested product
};

struct ArrayOps {
  std::function<std::size_t(const Value&)> length;
  std::function<Value(const Value&, std::size_t)> get;
  std::function<void(Value&, std::size_t, const Value&)> set;
  std::function<Value(std::size_t, const std::function<Value(std::size_t)>&)> init;
  std::size_t max_length = 0;
};

struct ArrayDesc {
  Type elem;
  ArrayOps ops;
  bool byte_storage = false;  // stored as a Bytes value rather than a Block
};

/// Descriptor of an extensible variant; new constructors may be added at any
/// time. Constructor names are fully qualified and unique.
class ExtensibleDesc {
 public:
  ExtensibleDesc(std::string name, std::vector<std::string> module_path, Type ty);

  const std::string& name() const noexcept { return name_; }
  const std::vector<std::string>& module_path() const noexcept { return module_path_; }
  const Type& ty() const noexcept { return ty_; }

  // Throws DuplicateConstructor if the name is taken.
  ConstructorRef add_con(std::string qualified_name, FieldList args);
  std::vector<ConstructorRef> con_list() const;
  std::optional<ConstructorRef> find(std::string_view qualified_name) const;
  // Throws UnknownConstructor unless `x` carries a constructor identity
  // registered here.
  ConApp conap(const Value& x) const;
  // Replaces the constructor identity of `x` by the registered one with the
  // same name. Throws UnknownConstructor for unknown names.
  Value reinstate(const Value& x) const;

 private:
  std::string name_;
  std::vector<std::string> module_path_;
  Type ty_;
  mutable std::shared_mutex mu_;
  std::vector<ConstructorRef> cons_;
  std::map<std::string, ConstructorRef, std::less<>> by_name_;
};

std::shared_ptr<ExtensibleDesc> ext_create(std::string name, std::vector<std::string> module_path,
                                           Type ty);
inline std::vector<ConstructorRef> ext_con_list(const ExtensibleDesc& e) { return e.con_list(); }
inline ConApp ext_conap(const ExtensibleDesc& e, const Value& x) { return e.conap(x); }
inline Value reinstate(const ExtensibleDesc& e, const Value& x) { return e.reinstate(x); }

struct SynonymDesc {
  std::string name;
  std::vector<std::string> module_path;
  Type target;
  EqualityWitness eq;  // relates the synonym rep (left) and target (right)
};

struct AbstractDesc {
  std::string name;
  std::vector<std::string> module_path;
};

struct OpaqueDesc {
  std::string name;
  std::vector<std::string> module_path;
  std::string identifier;
};

struct NoDesc {};

using Desc = std::variant<NoDesc, VariantDesc, RecordDesc, ProductDesc, ArrayDesc,
                          std::shared_ptr<ExtensibleDesc>, SynonymDesc, AbstractDesc, OpaqueDesc>;
using DescRef = std::shared_ptr<const Desc>;

// Variant accessors.
inline std::size_t cst_len(const VariantDesc& v) { return v.cons.cst_len(); }
inline std::size_t ncst_len(const VariantDesc& v) { return v.cons.ncst_len(); }
inline const ConstructorRef& cst_get(const VariantDesc& v, std::size_t i) { return v.cons.cst_get(i); }
inline const ConstructorRef& ncst_get(const VariantDesc& v, std::size_t i) {
  return v.cons.ncst_get(i);
}
inline const std::vector<ConstructorRef>& cst(const VariantDesc& v) { return v.cons.cst(); }
inline const std::vector<ConstructorRef>& ncst(const VariantDesc& v) { return v.cons.ncst(); }
inline const std::vector<ConstructorRef>& con_list(const VariantDesc& v) {
  return v.cons.con_list();
}

// Constant-time deconstruction through the tag stored in the value.
// Throws MalformedValue when the tag lies outside both tables.
ConApp conap(const VariantDesc& v, const Value& x);

// ---------------------------------------------------------------------------
// Abstract types

struct Representation {
  Type repr_ty;
  std::function<Value(const Value&)> to_repr;
  std::function<std::optional<Value>(const Value&)> from_repr;
};

using ReprBuilder = std::function<Representation(std::span<const Type> args)>;

// Throws Error(NoRepresentation).
Representation repr(const Type& t);
std::optional<Representation> find_repr(const Type& t);

// ---------------------------------------------------------------------------
// Registry

enum class ScalarKind { Int, Char, Float };

// Int, Char and Float have no structural descriptor; they are the base
// cases of every generic function.
std::optional<ScalarKind> scalar_kind(const Type& t);

// Registered descriptor of `t`; NoDesc for functions, scalars and
// unregistered types. `t` may be a pattern.
DescRef view_desc(const Type& t);

struct FieldDecl {
  std::string name;
  Type ty;
  bool is_mutable = false;
};

using DescBuilder = std::function<Desc(std::span<const Type> args)>;

// All registration functions throw DuplicateDescriptor if `head` already has
// a descriptor. Parametric builders receive the argument types.
void register_desc(TypeConRef head, DescBuilder builder);
void register_variant(TypeConRef head, std::string name, std::vector<std::string> module_path,
                      std::function<std::vector<ConSpec>(std::span<const Type>)> cons);
void register_record(TypeConRef head, std::string name, std::vector<std::string> module_path,
                     std::function<std::vector<FieldDecl>(std::span<const Type>)> fields);
void register_product(TypeConRef head);
void register_synonym(TypeConRef head, std::string name, std::vector<std::string> module_path,
                      std::function<Type(std::span<const Type>)> target);
void register_abstract(TypeConRef head, std::string name, std::vector<std::string> module_path,
                       std::optional<ReprBuilder> representation = std::nullopt);
void register_opaque(TypeConRef head, std::string name, std::vector<std::string> module_path,
                     std::string identifier,
                     std::optional<ReprBuilder> representation = std::nullopt);
// Extensible variants are monomorphic: `head` must have arity 0.
std::shared_ptr<ExtensibleDesc> register_extensible(TypeConRef head, std::string name,
                                                    std::vector<std::string> module_path);

// Record and product values are Block(0, fields).
Iso tuple_iso(std::size_t n);
FieldList make_record_fields(const std::vector<FieldDecl>& decls);

}  // namespace reflectix
