#include "reflectix/demo.hpp"

#include <mutex>

#include "reflectix/builtins.hpp"
#include "reflectix/error.hpp"

namespace reflectix::demo {

namespace {

const std::vector<std::string> kDemo{"Demo"};

struct Heads {
  TypeConRef btree = declare_type_con("Btree", kDemo, 1);
  TypeConRef rtree = declare_type_con("Rtree", kDemo, 1);
  TypeConRef expr = declare_type_con("Expr", kDemo, 0);
  TypeConRef nat = declare_type_con("Nat", {"Demo", "Nat"}, 0);
  TypeConRef nat_internal = declare_type_con("NatInternal", {"Demo", "Nat"}, 0);
  TypeConRef score = declare_type_con("Score", kDemo, 0);
  TypeConRef points = declare_type_con("Points", kDemo, 0);
  TypeConRef symbol = declare_type_con("Symbol", kDemo, 0);
  TypeConRef handle = declare_type_con("Handle", kDemo, 0);
  TypeConRef exn = declare_type_con("Exn", kDemo, 0);
  TypeConRef poly = declare_type_con("Poly", kDemo, 1);
  TypeConRef range = declare_type_con("Range", kDemo, 0);
};

const Heads& heads() {
  static const Heads h;
  return h;
}

struct ExnCons {
  std::shared_ptr<ExtensibleDesc> desc;
  ConstructorRef failure;
  ConstructorRef exit;
  ConstructorRef not_found;
};

ExnCons& exn_cons() {
  static ExnCons e;
  return e;
}

FieldList args(std::initializer_list<Type> tys) {
  FieldList out;
  for (const auto& t : tys) out.push_back(Field{"", t, {}});
  return out;
}

void register_all() {
  const Heads& h = heads();

  register_variant(h.btree, "btree", kDemo, [h](std::span<const Type> a) {
    const Type self = Type::apply(h.btree, {a[0]});
    return std::vector<ConSpec>{{"Empty", {}}, {"Node", args({self, a[0], self})}};
  });

  register_record(h.rtree, "rtree", kDemo, [h](std::span<const Type> a) {
    return std::vector<FieldDecl>{{"attr", a[0], false},
                                  {"children", ty::list(Type::apply(h.rtree, {a[0]})), true}};
  });

  register_variant(h.expr, "expr", kDemo, [h](std::span<const Type>) {
    const Type e = Type::apply(h.expr);
    const Type s = ty::string_t();
    return std::vector<ConSpec>{{"Cst", args({ty::int_t()})}, {"Neg", args({e})},
                                {"Add", args({e, e})},         {"Sub", args({e, e})},
                                {"Var", args({s})},            {"Let", args({s, e, e})}};
  });

  register_abstract(h.nat, "nat", {"Demo", "Nat"}, ReprBuilder([](std::span<const Type>) {
                      return Representation{
                          ty::int_t(),
                          [](const Value& v) { return Value::imm(nat_value(v)); },
                          [](const Value& r) -> std::optional<Value> {
                            if (!r.is(ValueKind::Imm) || r.as_imm() < 0) return std::nullopt;
                            return make_nat(r.as_imm());
                          }};
                    }));
  register_synonym(h.nat_internal, "nat", {"Demo", "Nat"},
                   [](std::span<const Type>) { return ty::int_t(); });

  register_synonym(h.points, "points", kDemo, [](std::span<const Type>) { return ty::int_t(); });
  register_synonym(h.score, "score", kDemo,
                   [h](std::span<const Type>) { return Type::apply(h.points); });

  register_opaque(h.symbol, "symbol", kDemo, "Demo.symbol",
                  ReprBuilder([](std::span<const Type>) {
                    return Representation{
                        ty::string_t(),
                        [](const Value& v) {
                          return Value::bytes(
                              std::any_cast<const std::string&>(v.custom_payload()));
                        },
                        [](const Value& r) -> std::optional<Value> {
                          if (!r.is(ValueKind::Bytes)) return std::nullopt;
                          return make_symbol(std::string(r.as_bytes()));
                        }};
                  }));
  register_opaque(h.handle, "handle", kDemo, "Demo.handle");

  register_variant(h.poly, "poly", kDemo, [h](std::span<const Type> a) {
    const Type self = Type::apply(h.poly, {a[0]});
    const Type twice = Type::apply(h.poly, {ty::pair(a[0], a[0])});
    return std::vector<ConSpec>{{"Leaf", args({ty::int_t()})}, {"Node", args({self, twice})}};
  });

  register_abstract(h.range, "range", kDemo, ReprBuilder([](std::span<const Type>) {
                      return Representation{
                          ty::pair(ty::int_t(), ty::int_t()),
                          [](const Value& v) {
                            auto [lo, hi] = range_bounds(v);
                            return val::pair(Value::imm(lo), Value::imm(hi));
                          },
                          [](const Value& r) -> std::optional<Value> {
                            const std::int64_t lo = r.field(0).as_imm();
                            const std::int64_t hi = r.field(1).as_imm();
                            if (lo > hi) return std::nullopt;
                            return make_range(lo, hi);
                          }};
                    }));

  ExnCons& e = exn_cons();
  e.desc = register_extensible(h.exn, "exn", kDemo);
  e.failure = e.desc->add_con("Demo.Failure", args({ty::string_t()}));
  e.exit = e.desc->add_con("Demo.Exit", args({ty::int_t()}));
  e.not_found = e.desc->add_con("Demo.Not_found", {});
}

}  // namespace

void ensure_registered() {
  static std::once_flag once;
  std::call_once(once, register_all);
}

Type btree(Type a) {
  ensure_registered();
  return Type::apply(heads().btree, {std::move(a)});
}

Value empty() { return Value::imm(0); }
Value node(Value l, Value x, Value r) {
  return Value::block(0, {std::move(l), std::move(x), std::move(r)});
}

Type rtree(Type a) {
  ensure_registered();
  return Type::apply(heads().rtree, {std::move(a)});
}

Value rnode(Value attr, const std::vector<Value>& children) {
  return Value::block(0, {std::move(attr), val::list(children)});
}

Type expr() {
  ensure_registered();
  return Type::apply(heads().expr);
}

Value cst(std::int64_t k) { return Value::block(0, {Value::imm(k)}); }
Value neg(Value e) { return Value::block(1, {std::move(e)}); }
Value add(Value a, Value b) { return Value::block(2, {std::move(a), std::move(b)}); }
Value sub(Value a, Value b) { return Value::block(3, {std::move(a), std::move(b)}); }
Value var(std::string name) { return Value::block(4, {Value::bytes(std::move(name))}); }
Value let(std::string name, Value def, Value body) {
  return Value::block(5, {Value::bytes(std::move(name)), std::move(def), std::move(body)});
}

Type nat() {
  ensure_registered();
  return Type::apply(heads().nat);
}

Type nat_internal() {
  ensure_registered();
  return Type::apply(heads().nat_internal);
}

Value make_nat(std::int64_t n) {
  if (n < 0) throw Error(ErrorKind::MalformedValue, "negative natural");
  return Value::custom("Demo.nat", n);
}

std::int64_t nat_value(const Value& v) {
  if (v.custom_identifier() != "Demo.nat") {
    throw Error(ErrorKind::MalformedValue, "not a natural");
  }
  return std::any_cast<std::int64_t>(v.custom_payload());
}

Type score() {
  ensure_registered();
  return Type::apply(heads().score);
}

Type points() {
  ensure_registered();
  return Type::apply(heads().points);
}

Type symbol() {
  ensure_registered();
  return Type::apply(heads().symbol);
}

Value make_symbol(std::string s) { return Value::custom("Demo.symbol", std::move(s)); }

Type handle() {
  ensure_registered();
  return Type::apply(heads().handle);
}

Value make_handle(int id) { return Value::custom("Demo.handle", id); }

Type exn() {
  ensure_registered();
  return Type::apply(heads().exn);
}

std::shared_ptr<ExtensibleDesc> exn_desc() {
  ensure_registered();
  return exn_cons().desc;
}

Value failure(std::string msg) {
  ensure_registered();
  const Value arg = Value::bytes(std::move(msg));
  return exn_cons().failure->embed(std::span<const Value>(&arg, 1));
}

Value exit_code(std::int64_t k) {
  ensure_registered();
  const Value arg = Value::imm(k);
  return exn_cons().exit->embed(std::span<const Value>(&arg, 1));
}

Value not_found() {
  ensure_registered();
  return exn_cons().not_found->embed({});
}

Type poly(Type a) {
  ensure_registered();
  return Type::apply(heads().poly, {std::move(a)});
}

Value leaf(std::int64_t k) { return Value::block(0, {Value::imm(k)}); }
Value pnode(Value l, Value r) { return Value::block(1, {std::move(l), std::move(r)}); }

Type range() {
  ensure_registered();
  return Type::apply(heads().range);
}

Value make_range(std::int64_t lo, std::int64_t hi) {
  return Value::custom("Demo.range", std::pair{lo, hi});
}

std::pair<std::int64_t, std::int64_t> range_bounds(const Value& v) {
  if (!v.is(ValueKind::Custom) || v.custom_identifier() != "Demo.range") {
    throw Error(ErrorKind::MalformedValue, "not a range");
  }
  return std::any_cast<std::pair<std::int64_t, std::int64_t>>(v.custom_payload());
}

}  // namespace reflectix::demo
