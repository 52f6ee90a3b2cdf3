#include "reflectix/desc.hpp"

#include <atomic>
#include <limits>
#include <mutex>
#include <unordered_map>
#include <unordered_set>

#include "internal.hpp"
#include "reflectix/builtins.hpp"
#include "reflectix/error.hpp"
#include "reflectix/extfun.hpp"

namespace reflectix {

EqualityWitness synonym_witness(const Type& synonym, const Type& target) {
  return EqualityWitness(synonym, target);
}

ProductShape shape_of(const FieldList& fields) {
  ProductShape shape;
  shape.reserve(fields.size());
  for (const auto& f : fields) shape.push_back(f.ty);
  return shape;
}

Value nest_product(std::span<const Value> items) {
  Value acc = Value::imm(0);
  for (auto it = items.rbegin(); it != items.rend(); ++it) acc = Value::block(0, {*it, acc});
  return acc;
}

std::vector<Value> unnest_product(const Value& nested) {
  std::vector<Value> out;
  Value cur = nested;
  while (cur.is(ValueKind::Block)) {
    if (cur.fields().size() != 2) {
      throw Error(ErrorKind::MalformedValue, "nested product cell must have two fields");
    }
    out.push_back(cur.field(0));
    cur = cur.field(1);
  }
  if (!cur.is(ValueKind::Imm) || cur.as_imm() != 0) {
    throw Error(ErrorKind::MalformedValue, "nested product must end in unit");
  }
  return out;
}

Iso tuple_iso(std::size_t n) {
  return Iso{
      [n](const Value& v) {
        if (v.fields().size() != n) throw Error(ErrorKind::ArityMismatch, "tuple width");
        return nest_product(v.fields());
      },
      [n](const Value& nested) {
        auto items = unnest_product(nested);
        if (items.size() != n) throw Error(ErrorKind::ArityMismatch, "tuple width");
        return Value::block(0, std::move(items));
      }};
}

FieldList make_record_fields(const std::vector<FieldDecl>& decls) {
  FieldList out;
  out.reserve(decls.size());
  for (std::size_t i = 0; i < decls.size(); ++i) {
    Field f{decls[i].name, decls[i].ty, {}};
    if (decls[i].is_mutable) {
      f.set = [i](Value& record, const Value& v) {
        std::vector<Value> fs(record.fields().begin(), record.fields().end());
        fs.at(i) = v;
        record = Value::block(record.tag(), std::move(fs));
      };
    }
    out.push_back(std::move(f));
  }
  return out;
}

// ---------------------------------------------------------------------------

Constructor::Constructor(std::string name, FieldList args, ConKind kind, std::uint32_t tag)
    : name_(std::move(name)), args_(std::move(args)), kind_(kind), tag_(tag) {}

Constructor::Constructor(std::string name, FieldList args, Embed embed, Proj proj)
    : name_(std::move(name)),
      args_(std::move(args)),
      kind_(ConKind::Tuple),
      embed_(std::move(embed)),
      proj_(std::move(proj)) {}

Value Constructor::embed(std::span<const Value> args) const {
  if (args.size() != arity()) {
    throw Error(ErrorKind::ArityMismatch, name_ + " expects " + std::to_string(arity()) +
                                              " argument(s), got " + std::to_string(args.size()));
  }
  if (embed_) return embed_(args);
  std::vector<Value> fs(args.begin(), args.end());
  switch (kind_) {
    case ConKind::Constant: return Value::imm(tag_);
    case ConKind::NonConstant: return Value::block(tag_, std::move(fs));
    case ConKind::Tuple: return Value::block(0, std::move(fs));
    case ConKind::Extensible: return Value::ext_con(this, name_, std::move(fs));
  }
  throw Error(ErrorKind::MalformedValue, "bad constructor kind");
}

std::optional<std::vector<Value>> Constructor::proj(const Value& v) const {
  if (proj_) return proj_(v);
  auto take = [&]() -> std::optional<std::vector<Value>> {
    if (v.fields().size() != arity()) return std::nullopt;
    return std::vector<Value>(v.fields().begin(), v.fields().end());
  };
  switch (kind_) {
    case ConKind::Constant:
      if (v.is(ValueKind::Imm) && v.as_imm() == static_cast<std::int64_t>(tag_)) {
        return std::vector<Value>{};
      }
      return std::nullopt;
    case ConKind::NonConstant:
      if (v.is(ValueKind::Block) && v.tag() == tag_) return take();
      return std::nullopt;
    case ConKind::Tuple:
      if (v.is(ValueKind::Block) && v.tag() == 0) return take();
      return std::nullopt;
    case ConKind::Extensible:
      if (v.is(ValueKind::ExtCon) && v.ext_identity() == this) return take();
      return std::nullopt;
  }
  return std::nullopt;
}

ConstructorSet::ConstructorSet(const std::vector<ConSpec>& specs) {
  for (const auto& spec : specs) {
    ConstructorRef c;
    if (spec.args.empty()) {
      c = std::make_shared<Constructor>(spec.name, FieldList{}, ConKind::Constant,
                                        static_cast<std::uint32_t>(cst_.size()));
      cst_.push_back(c);
    } else {
      c = std::make_shared<Constructor>(spec.name, spec.args, ConKind::NonConstant,
                                        static_cast<std::uint32_t>(ncst_.size()));
      ncst_.push_back(c);
    }
    all_.push_back(std::move(c));
  }
}

const ConstructorRef& ConstructorSet::cst_get(std::size_t i) const {
  if (i >= cst_.size()) {
    throw Error(ErrorKind::IndexOutOfRange, "constant constructor " + std::to_string(i));
  }
  return cst_[i];
}

const ConstructorRef& ConstructorSet::ncst_get(std::size_t i) const {
  if (i >= ncst_.size()) {
    throw Error(ErrorKind::IndexOutOfRange, "non-constant constructor " + std::to_string(i));
  }
  return ncst_[i];
}

ConApp conap(const VariantDesc& v, const Value& x) {
  if (x.is(ValueKind::Imm)) {
    const std::int64_t i = x.as_imm();
    if (i >= 0 && static_cast<std::size_t>(i) < v.cons.cst_len()) {
      return ConApp{v.cons.cst()[static_cast<std::size_t>(i)], {}};
    }
  } else if (x.is(ValueKind::Block)) {
    const std::uint32_t tag = x.tag();
    if (tag < v.cons.ncst_len() && v.cons.ncst()[tag]->arity() == x.fields().size()) {
      return ConApp{v.cons.ncst()[tag], {x.fields().begin(), x.fields().end()}};
    }
  }
  throw Error(ErrorKind::MalformedValue, "value is not a " + v.name);
}

// ---------------------------------------------------------------------------

ExtensibleDesc::ExtensibleDesc(std::string name, std::vector<std::string> module_path, Type ty)
    : name_(std::move(name)), module_path_(std::move(module_path)), ty_(std::move(ty)) {}

std::shared_ptr<ExtensibleDesc> ext_create(std::string name, std::vector<std::string> module_path,
                                           Type ty) {
  return std::make_shared<ExtensibleDesc>(std::move(name), std::move(module_path), std::move(ty));
}

ConstructorRef ExtensibleDesc::add_con(std::string qualified_name, FieldList args) {
  std::unique_lock lock(mu_);
  if (by_name_.contains(qualified_name)) {
    throw Error(ErrorKind::DuplicateConstructor, qualified_name + " in " + name_);
  }
  auto c = std::make_shared<const Constructor>(qualified_name, std::move(args),
                                               ConKind::Extensible, 0);
  cons_.push_back(c);
  by_name_.emplace(std::move(qualified_name), c);
  return c;
}

std::vector<ConstructorRef> ExtensibleDesc::con_list() const {
  std::shared_lock lock(mu_);
  return cons_;
}

std::optional<ConstructorRef> ExtensibleDesc::find(std::string_view qualified_name) const {
  std::shared_lock lock(mu_);
  if (auto it = by_name_.find(qualified_name); it != by_name_.end()) return it->second;
  return std::nullopt;
}

ConApp ExtensibleDesc::conap(const Value& x) const {
  if (!x.is(ValueKind::ExtCon)) {
    throw Error(ErrorKind::MalformedValue, "value is not a constructor of " + name_);
  }
  auto c = find(x.ext_name());
  if (!c || c->get() != x.ext_identity()) {
    throw Error(ErrorKind::UnknownConstructor, std::string(x.ext_name()) + " in " + name_);
  }
  return ConApp{*c, {x.fields().begin(), x.fields().end()}};
}

Value ExtensibleDesc::reinstate(const Value& x) const {
  if (!x.is(ValueKind::ExtCon)) {
    throw Error(ErrorKind::MalformedValue, "value is not a constructor of " + name_);
  }
  auto c = find(x.ext_name());
  if (!c) throw Error(ErrorKind::UnknownConstructor, std::string(x.ext_name()) + " in " + name_);
  return (*c)->embed(x.fields());
}

// ---------------------------------------------------------------------------
// Registry

namespace {

class Registry {
 public:
  Registry() : descs_("view_desc"), reprs_("repr") {}

  void add(TypeConRef head, DescBuilder builder, std::optional<ReprBuilder> representation) {
    {
      std::unique_lock lock(mu_);
      if (!heads_.insert(head).second) {
        throw Error(ErrorKind::DuplicateDescriptor, head->qualified_name());
      }
    }
    const Type pattern = wildcard_pattern(head);
    descs_.extend(pattern, [b = std::move(builder)](const Type& t) {
      return std::make_shared<const Desc>(b(t.args()));
    });
    if (representation) {
      reprs_.extend(pattern, [r = std::move(*representation)](const Type& t) { return r(t.args()); });
    }
    std::unique_lock lock(mu_);
    cache_.clear();
    generation_.fetch_add(1);
  }

  DescRef view(const Type& t) {
    {
      std::shared_lock lock(mu_);
      if (auto it = cache_.find(t); it != cache_.end()) return it->second;
    }
    DescRef d = descs_.supports(t) ? descs_(t) : no_desc();
    std::unique_lock lock(mu_);
    return cache_.emplace(t, std::move(d)).first->second;
  }

  std::uint64_t generation() const { return generation_.load(); }

  std::optional<Representation> repr(const Type& t) const {
    if (!reprs_.supports(t)) return std::nullopt;
    return reprs_(t);
  }

 private:
  static Type wildcard_pattern(TypeConRef head) {
    return Type::apply(head, std::vector<Type>(head->arity(), Type::any()));
  }

  static DescRef no_desc() {
    static const DescRef d = std::make_shared<const Desc>(NoDesc{});
    return d;
  }

  std::shared_mutex mu_;
  std::atomic<std::uint64_t> generation_{0};
  std::unordered_set<TypeConRef> heads_;
  std::unordered_map<Type, DescRef, TypeHash> cache_;
  ExtFun<DescRef()> descs_;
  ExtFun<Representation()> reprs_;
};

Registry& registry() {
  static Registry r;
  return r;
}

FieldList positional(std::initializer_list<Type> tys) {
  FieldList out;
  for (const auto& t : tys) out.push_back(Field{"", t, {}});
  return out;
}

ArrayOps byte_array_ops() {
  ArrayOps ops;
  ops.length = [](const Value& v) { return v.as_bytes().size(); };
  ops.get = [](const Value& v, std::size_t i) {
    const auto s = v.as_bytes();
    if (i >= s.size()) throw Error(ErrorKind::IndexOutOfRange, "byte " + std::to_string(i));
    return Value::imm(static_cast<unsigned char>(s[i]));
  };
  ops.set = [](Value& v, std::size_t i, const Value& c) {
    std::string s(v.as_bytes());
    if (i >= s.size()) throw Error(ErrorKind::IndexOutOfRange, "byte " + std::to_string(i));
    s[i] = static_cast<char>(c.as_imm());
    v = Value::bytes(std::move(s));
  };
  ops.init = [](std::size_t n, const std::function<Value(std::size_t)>& f) {
    std::string s(n, '\0');
    for (std::size_t i = 0; i < n; ++i) s[i] = static_cast<char>(f(i).as_imm());
    return Value::bytes(std::move(s));
  };
  ops.max_length = std::numeric_limits<std::uint32_t>::max();
  return ops;
}

ArrayOps block_array_ops() {
  ArrayOps ops;
  ops.length = [](const Value& v) { return v.fields().size(); };
  ops.get = [](const Value& v, std::size_t i) { return v.field(i); };
  ops.set = [](Value& v, std::size_t i, const Value& x) {
    std::vector<Value> fs(v.fields().begin(), v.fields().end());
    if (i >= fs.size()) throw Error(ErrorKind::IndexOutOfRange, "element " + std::to_string(i));
    fs[i] = x;
    v = Value::block(0, std::move(fs));
  };
  ops.init = [](std::size_t n, const std::function<Value(std::size_t)>& f) {
    std::vector<Value> fs;
    fs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) fs.push_back(f(i));
    return Value::block(0, std::move(fs));
  };
  ops.max_length = std::numeric_limits<std::uint32_t>::max();
  return ops;
}

const std::vector<std::string> kStdlib{"Stdlib"};

void add_variant(TypeConRef head, std::string name, std::vector<std::string> path,
                 std::function<std::vector<ConSpec>(std::span<const Type>)> cons) {
  registry().add(
      head,
      [name = std::move(name), path = std::move(path), cons = std::move(cons)](
          std::span<const Type> args) -> Desc {
        return VariantDesc{name, path, ConstructorSet(cons(args))};
      },
      std::nullopt);
}

void add_product(TypeConRef head) {
  registry().add(
      head,
      [](std::span<const Type> args) -> Desc {
        return ProductDesc{ProductShape(args.begin(), args.end()), tuple_iso(args.size())};
      },
      std::nullopt);
}

void register_builtins() {
  add_variant(ty::bool_con(), "bool", kStdlib, [](std::span<const Type>) {
    return std::vector<ConSpec>{{"false", {}}, {"true", {}}};
  });
  add_variant(ty::unit_con(), "unit", kStdlib,
              [](std::span<const Type>) { return std::vector<ConSpec>{{"()", {}}}; });
  add_variant(ty::list_con(), "list", kStdlib, [](std::span<const Type> a) {
    return std::vector<ConSpec>{{"[]", {}}, {"::", positional({a[0], ty::list(a[0])})}};
  });
  add_variant(ty::option_con(), "option", kStdlib, [](std::span<const Type> a) {
    return std::vector<ConSpec>{{"None", {}}, {"Some", positional({a[0]})}};
  });
  add_product(ty::pair_con());
  add_product(ty::triple_con());
  for (TypeConRef head : {ty::string_con(), ty::bytes_con()}) {
    registry().add(
        head,
        [](std::span<const Type>) -> Desc { return ArrayDesc{ty::char_t(), byte_array_ops(), true}; },
        std::nullopt);
  }
  registry().add(
      ty::array_con(),
      [](std::span<const Type> a) -> Desc { return ArrayDesc{a[0], block_array_ops(), false}; },
      std::nullopt);
}

void ensure_builtins() {
  static std::once_flag once;
  std::call_once(once, register_builtins);
}

}  // namespace

std::uint64_t desc_generation() {
  ensure_builtins();
  return registry().generation();
}

std::optional<ScalarKind> scalar_kind(const Type& t) {
  if (t.is_any()) return std::nullopt;
  if (t.head() == ty::int_con()) return ScalarKind::Int;
  if (t.head() == ty::char_con()) return ScalarKind::Char;
  if (t.head() == ty::float_con()) return ScalarKind::Float;
  return std::nullopt;
}

DescRef view_desc(const Type& t) {
  ensure_builtins();
  return registry().view(t);
}

std::optional<Representation> find_repr(const Type& t) {
  ensure_builtins();
  return registry().repr(t);
}

Representation repr(const Type& t) {
  if (auto r = find_repr(t)) return *r;
  throw Error(ErrorKind::NoRepresentation, t.to_string());
}

void register_desc(TypeConRef head, DescBuilder builder) {
  ensure_builtins();
  registry().add(head, std::move(builder), std::nullopt);
}

void register_variant(TypeConRef head, std::string name, std::vector<std::string> module_path,
                      std::function<std::vector<ConSpec>(std::span<const Type>)> cons) {
  ensure_builtins();
  add_variant(head, std::move(name), std::move(module_path), std::move(cons));
}

void register_record(TypeConRef head, std::string name, std::vector<std::string> module_path,
                     std::function<std::vector<FieldDecl>(std::span<const Type>)> fields) {
  register_desc(head, [name = std::move(name), path = std::move(module_path),
                       fields = std::move(fields)](std::span<const Type> args) -> Desc {
    FieldList fs = make_record_fields(fields(args));
    const std::size_t n = fs.size();
    return RecordDesc{name, path, std::move(fs), tuple_iso(n)};
  });
}

void register_product(TypeConRef head) {
  ensure_builtins();
  add_product(head);
}

void register_synonym(TypeConRef head, std::string name, std::vector<std::string> module_path,
                      std::function<Type(std::span<const Type>)> target) {
  register_desc(head, [head, name = std::move(name), path = std::move(module_path),
                       target = std::move(target)](std::span<const Type> args) -> Desc {
    Type self = Type::apply(head, std::vector<Type>(args.begin(), args.end()));
    Type to = target(args);
    return SynonymDesc{name, path, to, synonym_witness(self, to)};
  });
}

void register_abstract(TypeConRef head, std::string name, std::vector<std::string> module_path,
                       std::optional<ReprBuilder> representation) {
  ensure_builtins();
  registry().add(
      head,
      [name = std::move(name), path = std::move(module_path)](std::span<const Type>) -> Desc {
        return AbstractDesc{name, path};
      },
      std::move(representation));
}

void register_opaque(TypeConRef head, std::string name, std::vector<std::string> module_path,
                     std::string identifier, std::optional<ReprBuilder> representation) {
  ensure_builtins();
  registry().add(head,
                 [name = std::move(name), path = std::move(module_path),
                  id = std::move(identifier)](std::span<const Type>) -> Desc {
                   return OpaqueDesc{name, path, id};
                 },
                 std::move(representation));
}

std::shared_ptr<ExtensibleDesc> register_extensible(TypeConRef head, std::string name,
                                                    std::vector<std::string> module_path) {
  if (head->arity() != 0) {
    throw Error(ErrorKind::ArityMismatch, "extensible variant " + head->qualified_name() +
                                              " must have arity 0");
  }
  auto e = ext_create(std::move(name), std::move(module_path), Type::apply(head));
  register_desc(head, [e](std::span<const Type>) -> Desc { return e; });
  return e;
}

// ---------------------------------------------------------------------------
// Built-in values

namespace val {

Value of_int(std::int64_t i) { return Value::imm(i); }
Value of_char(char c) { return Value::imm(static_cast<unsigned char>(c)); }
Value of_float(double d) { return Value::real(d); }
Value of_string(std::string s) { return Value::bytes(std::move(s)); }
Value of_bool(bool b) { return Value::imm(b ? 1 : 0); }
Value unit() { return Value::imm(0); }
Value none() { return Value::imm(0); }
Value some(Value v) { return Value::block(0, {std::move(v)}); }
Value pair(Value a, Value b) { return Value::block(0, {std::move(a), std::move(b)}); }
Value triple(Value a, Value b, Value c) {
  return Value::block(0, {std::move(a), std::move(b), std::move(c)});
}

Value list(const std::vector<Value>& items) {
  Value acc = Value::imm(0);
  for (auto it = items.rbegin(); it != items.rend(); ++it) acc = Value::block(0, {*it, acc});
  return acc;
}

Value array(std::vector<Value> items) { return Value::block(0, std::move(items)); }

std::int64_t as_int(const Value& v) { return v.as_imm(); }
std::string as_string(const Value& v) { return std::string(v.as_bytes()); }

bool as_bool(const Value& v) {
  const auto i = v.as_imm();
  if (i != 0 && i != 1) throw Error(ErrorKind::MalformedValue, "not a bool");
  return i == 1;
}

std::vector<Value> as_list(const Value& v) {
  std::vector<Value> out;
  Value cur = v;
  while (cur.is(ValueKind::Block)) {
    if (cur.tag() != 0 || cur.fields().size() != 2) {
      throw Error(ErrorKind::MalformedValue, "not a list cell");
    }
    out.push_back(cur.field(0));
    cur = cur.field(1);
  }
  if (cur.as_imm() != 0) throw Error(ErrorKind::MalformedValue, "list must end in []");
  return out;
}

}  // namespace val

}  // namespace reflectix
