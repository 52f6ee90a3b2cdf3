#include <doctest.h>

#include <random>
#include <string>

#include "reflectix/builtins.hpp"
#include "reflectix/demo.hpp"
#include "reflectix/desc.hpp"
#include "reflectix/error.hpp"
#include "support.hpp"

using namespace reflectix;
using testsupport::same_layout;

namespace {

const VariantDesc& variant_of(const DescRef& d) {
  const auto* v = std::get_if<VariantDesc>(d.get());
  REQUIRE(v != nullptr);
  return *v;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::NotSupported;
}

// Deconstruction by trying every constructor in turn.
ConApp linear_conap(const VariantDesc& v, const Value& x) {
  for (const auto& c : v.cons.con_list()) {
    if (auto args = c->proj(x)) return ConApp{c, *args};
  }
  FAIL("no constructor projects");
  return {};
}

}  // namespace

TEST_CASE("btree descriptor") {
  auto d = view_desc(demo::btree(ty::int_t()));
  const auto& v = variant_of(d);
  CHECK(v.name == "btree");
  CHECK(v.module_path == std::vector<std::string>{"Demo"});
  CHECK(cst_len(v) == 1);
  CHECK(ncst_len(v) == 1);
  CHECK(cst_get(v, 0)->name() == "Empty");
  CHECK(ncst_get(v, 0)->name() == "Node");
  CHECK(ncst_get(v, 0)->shape() ==
        ProductShape{demo::btree(ty::int_t()), ty::int_t(), demo::btree(ty::int_t())});
  CHECK(kind_of([&] { (void)cst_get(v, 1); }) == ErrorKind::IndexOutOfRange);
  CHECK(kind_of([&] { (void)ncst_get(v, 1); }) == ErrorKind::IndexOutOfRange);
}

TEST_CASE("descriptors are instantiated per argument") {
  const auto& vs = variant_of(view_desc(demo::btree(ty::string_t())));
  CHECK(ncst_get(vs, 0)->args()[1].ty == ty::string_t());
}

TEST_CASE("expr has six non-constant constructors with dense tags") {
  const auto& v = variant_of(view_desc(demo::expr()));
  CHECK(cst_len(v) == 0);
  REQUIRE(ncst_len(v) == 6);
  const char* names[] = {"Cst", "Neg", "Add", "Sub", "Var", "Let"};
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(ncst_get(v, i)->name() == names[i]);
    CHECK(ncst_get(v, i)->tag() == i);
    CHECK(ncst_get(v, i)->kind() == ConKind::NonConstant);
  }
}

TEST_CASE("functions, scalars and unknown heads have no descriptor") {
  CHECK(std::holds_alternative<NoDesc>(*view_desc(ty::fun(ty::int_t(), ty::int_t()))));
  CHECK(std::holds_alternative<NoDesc>(*view_desc(ty::int_t())));
  CHECK(scalar_kind(ty::int_t()) == ScalarKind::Int);
  CHECK(scalar_kind(ty::char_t()) == ScalarKind::Char);
  CHECK(scalar_kind(ty::float_t()) == ScalarKind::Float);
  CHECK(!scalar_kind(ty::string_t()));
  auto fresh = declare_type_con("Unregistered", {"DescTest"}, 0);
  CHECK(std::holds_alternative<NoDesc>(*view_desc(Type::apply(fresh))));
}

TEST_CASE("pairs are products") {
  auto d = view_desc(ty::pair(ty::int_t(), ty::string_t()));
  const auto* p = std::get_if<ProductDesc>(d.get());
  REQUIRE(p != nullptr);
  CHECK(p->shape == ProductShape{ty::int_t(), ty::string_t()});
  Value x = val::pair(val::of_int(3), val::of_string("a"));
  Value nested = p->iso.fwd(x);
  CHECK(same_layout(nested, nest_product(std::vector<Value>{val::of_int(3), val::of_string("a")})));
  CHECK(same_layout(p->iso.bck(nested), x));
}

TEST_CASE("builtin encodings") {
  const auto& b = variant_of(view_desc(ty::bool_t()));
  CHECK(cst_len(b) == 2);
  CHECK(cst_get(b, 1)->name() == "true");
  const auto& l = variant_of(view_desc(ty::list(ty::int_t())));
  CHECK(cst_get(l, 0)->name() == "[]");
  CHECK(ncst_get(l, 0)->name() == "::");
  const auto& o = variant_of(view_desc(ty::option(ty::int_t())));
  CHECK(cst_get(o, 0)->name() == "None");
  CHECK(ncst_get(o, 0)->name() == "Some");
  auto s = view_desc(ty::string_t());
  REQUIRE(std::holds_alternative<ArrayDesc>(*s));
  CHECK(std::get<ArrayDesc>(*s).byte_storage);
  auto a = view_desc(ty::array(ty::float_t()));
  REQUIRE(std::holds_alternative<ArrayDesc>(*a));
  const auto& ad = std::get<ArrayDesc>(*a);
  CHECK(!ad.byte_storage);
  CHECK(ad.elem == ty::float_t());
  Value arr = ad.ops.init(3, [](std::size_t i) { return Value::real(i * 0.5); });
  CHECK(ad.ops.length(arr) == 3);
  CHECK(ad.ops.get(arr, 2).as_float() == 1.0);
  ad.ops.set(arr, 0, Value::real(9));
  CHECK(ad.ops.get(arr, 0).as_float() == 9.0);
}

TEST_CASE("conap agrees with the linear scan") {
  std::mt19937_64 rng(11);
  const auto& v = variant_of(view_desc(demo::expr()));
  const auto& bt = variant_of(view_desc(demo::btree(ty::int_t())));
  for (int i = 0; i < 500; ++i) {
    Value e = testsupport::random_expr(rng, 1 + i % 12);
    ConApp fast = conap(v, e);
    ConApp slow = linear_conap(v, e);
    CHECK(fast.con == slow.con);
    REQUIRE(fast.args.size() == slow.args.size());
    for (std::size_t j = 0; j < fast.args.size(); ++j) CHECK(fast.args[j].same(slow.args[j]));

    Value t = testsupport::random_btree(rng, i % 5);
    CHECK(conap(bt, t).con == linear_conap(bt, t).con);
  }
  CHECK(kind_of([&] { (void)conap(v, Value::block(6, {})); }) == ErrorKind::MalformedValue);
  CHECK(kind_of([&] { (void)conap(v, Value::imm(0)); }) == ErrorKind::MalformedValue);
}

TEST_CASE("embed and proj are inverse") {
  std::mt19937_64 rng(5);
  const auto& v = variant_of(view_desc(demo::expr()));
  for (int i = 0; i < 200; ++i) {
    Value e = testsupport::random_expr(rng, 1 + i % 9);
    ConApp ca = conap(v, e);
    CHECK(same_layout(ca.con->embed(ca.args), e));
    for (const auto& other : v.cons.con_list()) {
      if (other != ca.con) CHECK(!other->proj(e));
    }
  }
  Value one = Value::imm(1);
  CHECK(kind_of([&] { (void)ncst_get(v, 2)->embed(std::span<const Value>(&one, 1)); }) ==
        ErrorKind::ArityMismatch);
}

TEST_CASE("empty variant") {
  auto head = declare_type_con("Void", {"DescTest"}, 0);
  register_variant(head, "void", {"DescTest"},
                   [](std::span<const Type>) { return std::vector<ConSpec>{}; });
  const auto& v = variant_of(view_desc(Type::apply(head)));
  CHECK(cst_len(v) == 0);
  CHECK(ncst_len(v) == 0);
  CHECK(con_list(v).empty());
}

TEST_CASE("registration errors") {
  auto head = declare_type_con("Twice", {"DescTest"}, 0);
  register_abstract(head, "twice", {"DescTest"});
  CHECK(kind_of([&] { register_abstract(head, "twice", {"DescTest"}); }) ==
        ErrorKind::DuplicateDescriptor);
  CHECK(kind_of([&] { register_product(ty::pair_con()); }) == ErrorKind::DuplicateDescriptor);
  CHECK(kind_of([&] { register_extensible(ty::list_con(), "bad", {}); }) ==
        ErrorKind::ArityMismatch);
}

TEST_CASE("extensible variants") {
  auto e = ext_create("err", {"DescTest"}, Type::any());
  CHECK(e->con_list().empty());
  auto a = e->add_con("DescTest.A", {});
  auto b = e->add_con("DescTest.B", {Field{"", ty::int_t(), {}}});
  auto c = e->add_con("DescTest.C", {});
  CHECK(kind_of([&] { e->add_con("DescTest.B", {}); }) == ErrorKind::DuplicateConstructor);
  auto cs = ext_con_list(*e);
  REQUIRE(cs.size() == 3);
  CHECK(cs[0] == a);
  CHECK(cs[1] == b);
  CHECK(cs[2] == c);

  Value arg = Value::imm(4);
  Value x = b->embed(std::span<const Value>(&arg, 1));
  CHECK(x.is(ValueKind::ExtCon));
  ConApp ca = ext_conap(*e, x);
  CHECK(ca.con == b);
  CHECK(ca.args[0].as_imm() == 4);

  // A value rebuilt from its name alone, as after deserialization.
  Value stale = Value::ext_con(nullptr, "DescTest.B", {Value::imm(4)});
  CHECK(kind_of([&] { (void)ext_conap(*e, stale); }) == ErrorKind::UnknownConstructor);
  Value fresh = reinstate(*e, stale);
  CHECK(ext_conap(*e, fresh).con == b);
  Value unknown = Value::ext_con(nullptr, "DescTest.Z", {});
  CHECK(kind_of([&] { (void)reinstate(*e, unknown); }) == ErrorKind::UnknownConstructor);

  // Same name, different type: identity keeps them apart.
  auto other = ext_create("err2", {"DescTest"}, Type::any());
  auto b2 = other->add_con("DescTest.B", {Field{"", ty::int_t(), {}}});
  CHECK(kind_of([&] { (void)ext_conap(*e, b2->embed(std::span<const Value>(&arg, 1))); }) ==
        ErrorKind::UnknownConstructor);
}

TEST_CASE("demo exceptions") {
  auto d = view_desc(demo::exn());
  const auto* e = std::get_if<std::shared_ptr<ExtensibleDesc>>(d.get());
  REQUIRE(e != nullptr);
  CHECK((*e)->find("Demo.Exit").has_value());
  ConApp ca = (*e)->conap(demo::exit_code(3));
  CHECK(ca.con->name() == "Demo.Exit");
  CHECK((*e)->conap(demo::not_found()).args.empty());
}

TEST_CASE("abstract naturals") {
  Representation r = repr(demo::nat());
  CHECK(r.repr_ty == ty::int_t());
  CHECK(r.to_repr(demo::make_nat(7)).as_imm() == 7);
  CHECK(!r.from_repr(Value::imm(-1)));
  CHECK(!r.from_repr(Value::bytes("7")));
  CHECK(demo::nat_value(*r.from_repr(Value::imm(12))) == 12);
  CHECK(std::holds_alternative<AbstractDesc>(*view_desc(demo::nat())));

  CHECK(kind_of([] { (void)repr(ty::int_t()); }) == ErrorKind::NoRepresentation);
  CHECK(kind_of([] { (void)repr(demo::handle()); }) == ErrorKind::NoRepresentation);
  CHECK(!find_repr(demo::handle()));
  CHECK(find_repr(demo::symbol()).has_value());
}

TEST_CASE("representation is a retraction") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> n(0, 1'000'000'000);
  std::uniform_int_distribution<std::int64_t> any_int(-1'000'000, 1'000'000);
  Representation r = repr(demo::nat());
  for (int i = 0; i < 1000; ++i) {
    Value x = demo::make_nat(n(rng));
    auto back = r.from_repr(r.to_repr(x));
    REQUIRE(back);
    CHECK(same_layout(*back, x));

    Value y = Value::imm(any_int(rng));
    if (auto z = r.from_repr(y)) {
      CHECK(y.as_imm() >= 0);
      CHECK(r.to_repr(*z).as_imm() == y.as_imm());
    } else {
      CHECK(y.as_imm() < 0);
    }
  }
  Representation s = repr(demo::symbol());
  CHECK(same_layout(*s.from_repr(s.to_repr(demo::make_symbol("q"))), demo::make_symbol("q")));
}

TEST_CASE("synonyms") {
  auto d = view_desc(demo::score());
  const auto* s = std::get_if<SynonymDesc>(d.get());
  REQUIRE(s != nullptr);
  CHECK(s->target == demo::points());
  auto d2 = view_desc(s->target);
  const auto* s2 = std::get_if<SynonymDesc>(d2.get());
  REQUIRE(s2 != nullptr);
  CHECK(s2->target == ty::int_t());

  // The declaration is the only evidence: type equality alone stays nominal.
  CHECK(s->eq.left() == demo::score());
  CHECK(s->eq.right() == demo::points());
  CHECK(!ty_equal(demo::score(), demo::points()));
  CHECK(!ty_equal(demo::nat_internal(), ty::int_t()));
  auto di = view_desc(demo::nat_internal());
  REQUIRE(std::holds_alternative<SynonymDesc>(*di));
  CHECK(std::get<SynonymDesc>(*di).target == ty::int_t());
}

TEST_CASE("nest and unnest products") {
  std::mt19937_64 rng(9);
  for (int n = 0; n < 8; ++n) {
    std::vector<Value> items;
    for (int i = 0; i < n; ++i) items.push_back(Value::imm(static_cast<std::int64_t>(rng() % 100)));
    Value nested = nest_product(items);
    auto back = unnest_product(nested);
    REQUIRE(back.size() == items.size());
    for (int i = 0; i < n; ++i) CHECK(back[i].same(items[i]));
    // Right-nested, terminated by unit.
    Value cur = nested;
    for (int i = 0; i < n; ++i) cur = cur.field(1);
    CHECK(cur.is(ValueKind::Imm));
  }
}

TEST_CASE("records and mutable fields") {
  auto d = view_desc(demo::rtree(ty::int_t()));
  const auto* r = std::get_if<RecordDesc>(d.get());
  REQUIRE(r != nullptr);
  REQUIRE(r->fields.size() == 2);
  CHECK(r->fields[0].name == "attr");
  CHECK(!r->fields[0].set);
  CHECK(r->fields[1].ty == ty::list(demo::rtree(ty::int_t())));
  REQUIRE(r->fields[1].set);

  Value leaf = demo::rnode(Value::imm(2), {});
  Value t = demo::rnode(Value::imm(1), {});
  r->fields[1].set(t, val::list({leaf}));
  CHECK(val::as_list(t.field(1)).size() == 1);
  CHECK(t.field(0).as_imm() == 1);

  Value nested = r->iso.fwd(t);
  CHECK(same_layout(r->iso.bck(nested), t));
}
