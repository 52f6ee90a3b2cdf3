#include "reflectix/views.hpp"

#include <algorithm>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

#include "internal.hpp"
#include "reflectix/error.hpp"

namespace reflectix {

namespace {

SumProdRef make(SumProd::Kind k) { return std::make_shared<const SumProd>(SumProd{k, {}, {}, {}, {}, {}}); }

SumProdRef make_pair(SumProd::Kind k, SumProdRef l, SumProdRef r) {
  return std::make_shared<const SumProd>(SumProd{k, std::move(l), std::move(r), {}, {}, {}});
}

SumProdRef make_named(SumProd::Kind k, std::string name, SumProdRef body) {
  return std::make_shared<const SumProd>(SumProd{k, std::move(body), {}, std::move(name), {}, {}});
}

SumProdRef make_typed(SumProd::Kind k, Type t) {
  return std::make_shared<const SumProd>(SumProd{k, {}, {}, {}, std::move(t), {}});
}

// Right-nested product of delayed fields, ending in Unit.
SumProdRef fields_product(const FieldList& fields, bool tagged) {
  SumProdRef acc = make(SumProd::Kind::Unit);
  for (auto it = fields.rbegin(); it != fields.rend(); ++it) {
    SumProdRef item = make_typed(SumProd::Kind::Delay, it->ty);
    if (tagged) item = make_named(SumProd::Kind::FieldTag, it->name, item);
    acc = make_pair(SumProd::Kind::Prod, item, acc);
  }
  return acc;
}

// Injection of the k-th of n summands into the right-nested sum.
Value inject(std::size_t k, std::size_t n, Value payload) {
  Value v = k + 1 < n ? inject_left(std::move(payload)) : std::move(payload);
  for (std::size_t i = 0; i < k; ++i) v = inject_right(std::move(v));
  return v;
}

std::pair<std::size_t, Value> project(std::size_t n, const Value& v) {
  Value cur = v;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (cur.tag() == 0) return {k, cur.field(0)};
    cur = cur.field(0);
  }
  return {n - 1, cur};
}

Iso variant_iso(const VariantDesc& vd) {
  const auto cons = vd.cons.con_list();
  const std::size_t n = cons.size();
  return Iso{
      [vd, n](const Value& x) {
        ConApp ca = conap(vd, x);
        const auto& all = vd.cons.con_list();
        std::size_t k = 0;
        while (all[k] != ca.con) ++k;
        return inject(k, n, nest_product(ca.args));
      },
      [cons, n](const Value& y) {
        auto [k, payload] = project(n, y);
        return cons[k]->embed(unnest_product(payload));
      }};
}

}  // namespace

Value inject_left(Value x) { return Value::block(0, {std::move(x)}); }
Value inject_right(Value x) { return Value::block(1, {std::move(x)}); }

std::string SumProd::to_string() const {
  switch (kind) {
    case Kind::Empty: return "Empty";
    case Kind::Unit: return "Unit";
    case Kind::Sum: return "Sum(" + left->to_string() + ", " + right->to_string() + ")";
    case Kind::Prod: return "Prod(" + left->to_string() + ", " + right->to_string() + ")";
    case Kind::Iso: return "Iso(" + left->to_string() + ")";
    case Kind::Con: return "Con(\"" + name + "\", " + left->to_string() + ")";
    case Kind::FieldTag: return "Field(\"" + name + "\", " + left->to_string() + ")";
    case Kind::Base: return "Base(" + ty.to_string() + ")";
    case Kind::Delay: return "Delay(" + ty.to_string() + ")";
  }
  return "?";
}

Type resolve_synonyms(const Type& t) {
  Type cur = t;
  for (;;) {
    auto d = view_desc(cur);
    const auto* syn = std::get_if<SynonymDesc>(d.get());
    if (syn == nullptr) return cur;
    cur = syn->target;
  }
}

namespace {

SumProdRef build_sumprod(const Type& t);

struct SumProdCache {
  std::shared_mutex mu;
  std::uint64_t generation = 0;
  std::unordered_map<Type, SumProdRef, TypeHash> views;
};

}  // namespace

SumProdRef sumprod(const Type& t) {
  static SumProdCache cache;
  const std::uint64_t gen = desc_generation();
  {
    std::shared_lock lock(cache.mu);
    if (cache.generation == gen) {
      if (auto it = cache.views.find(t); it != cache.views.end()) return it->second;
    }
  }
  SumProdRef built = build_sumprod(t);
  std::unique_lock lock(cache.mu);
  if (cache.generation < gen) {
    cache.views.clear();
    cache.generation = gen;
  }
  if (cache.generation != gen) return built;  // a newer registration won the race
  return cache.views.emplace(t, std::move(built)).first->second;
}

namespace {

SumProdRef build_sumprod(const Type& t) {
  if (scalar_kind(t)) return make_typed(SumProd::Kind::Base, t);
  auto d = view_desc(t);
  return std::visit(
      [&](const auto& desc) -> SumProdRef {
        using D = std::decay_t<decltype(desc)>;
        if constexpr (std::is_same_v<D, NoDesc>) {
          throw Error(ErrorKind::NoView, "no sum-of-products view for " + t.to_string());
        } else if constexpr (std::is_same_v<D, VariantDesc>) {
          const auto& cons = desc.cons.con_list();
          SumProdRef body = make(SumProd::Kind::Empty);
          for (auto it = cons.rbegin(); it != cons.rend(); ++it) {
            SumProdRef c = make_named(SumProd::Kind::Con, (*it)->name(),
                                      fields_product((*it)->args(), false));
            body = it == cons.rbegin() ? c : make_pair(SumProd::Kind::Sum, c, body);
          }
          auto sp = std::make_shared<SumProd>(SumProd{SumProd::Kind::Iso, body, {}, {}, {}, {}});
          sp->iso = variant_iso(desc);
          return sp;
        } else if constexpr (std::is_same_v<D, RecordDesc>) {
          auto sp = std::make_shared<SumProd>(
              SumProd{SumProd::Kind::Iso, fields_product(desc.fields, true), {}, {}, {}, {}});
          sp->iso = desc.iso;
          return sp;
        } else if constexpr (std::is_same_v<D, ProductDesc>) {
          FieldList fs;
          for (const auto& ty : desc.shape) fs.push_back(Field{"", ty, {}});
          auto sp = std::make_shared<SumProd>(
              SumProd{SumProd::Kind::Iso, fields_product(fs, false), {}, {}, {}, {}});
          sp->iso = desc.iso;
          return sp;
        } else if constexpr (std::is_same_v<D, SynonymDesc>) {
          return sumprod(desc.target);
        } else {
          // Array-likes, extensible, abstract and opaque types are base cases.
          return make_typed(SumProd::Kind::Base, t);
        }
      },
      *d);
}

}  // namespace

// ---------------------------------------------------------------------------

namespace {

struct Shape {
  ConMeta meta;
  ConstructorRef con;
};

Shape shape_of_value(const Type& t, const Value& v, ConApp& out) {
  const Type r = resolve_synonyms(t);
  auto d = view_desc(r);
  if (const auto* vd = std::get_if<VariantDesc>(d.get())) {
    out = conap(*vd, v);
    return Shape{ConMeta{out.con->name(), vd->name, vd->module_path, out.con->arity(),
                         out.con->tag(), out.con->kind()},
                 out.con};
  }
  if (std::holds_alternative<RecordDesc>(*d) || std::holds_alternative<ProductDesc>(*d)) {
    const auto& cs = conlist(r);
    out = conlist_conap(cs, v);
    const auto* rd = std::get_if<RecordDesc>(d.get());
    return Shape{ConMeta{out.con->name(), rd ? rd->name : out.con->name(),
                         rd ? rd->module_path : std::vector<std::string>{}, out.con->arity(), 0,
                         ConKind::Tuple},
                 out.con};
  }
  throw Error(ErrorKind::NoView, "no spine view for " + t.to_string());
}

}  // namespace

SpineRef spine(const Type& t, const Value& v) {
  ConApp ca;
  Shape s = shape_of_value(t, v, ca);
  ConstructorRef con = s.con;
  SpineRef acc = std::make_shared<const Spine>(
      Spine{Spine::Kind::Con,
            [con](std::span<const Value> args) { return con->embed(args); },
            std::move(s.meta),
            {},
            {},
            {}});
  for (std::size_t i = 0; i < ca.args.size(); ++i) {
    acc = std::make_shared<const Spine>(
        Spine{Spine::Kind::App, {}, {}, acc, con->args()[i].ty, ca.args[i]});
  }
  return acc;
}

Value rebuild(const SpineRef& s) {
  std::vector<Value> args;
  const Spine* cur = s.get();
  while (cur->kind == Spine::Kind::App) {
    args.push_back(cur->arg);
    cur = cur->fn.get();
  }
  std::reverse(args.begin(), args.end());
  return cur->build(args);
}

// ---------------------------------------------------------------------------

namespace {

struct ConlistCache {
  std::shared_mutex mu;
  std::uint64_t generation = 0;
  std::unordered_map<Type, std::shared_ptr<const std::vector<ConstructorRef>>, TypeHash> lists;
  std::vector<std::shared_ptr<const std::vector<ConstructorRef>>> retired;
};

ConlistCache& conlist_cache() {
  static ConlistCache c;
  return c;
}

std::vector<ConstructorRef> build_conlist(const Type& t) {
  auto d = view_desc(t);
  if (const auto* vd = std::get_if<VariantDesc>(d.get())) return vd->cons.con_list();
  if (const auto* rd = std::get_if<RecordDesc>(d.get())) {
    return {std::make_shared<const Constructor>(rd->name, rd->fields, ConKind::Tuple, 0)};
  }
  if (const auto* pd = std::get_if<ProductDesc>(d.get())) {
    FieldList fs;
    for (const auto& ty : pd->shape) fs.push_back(Field{"", ty, {}});
    const std::string name =
        pd->shape.empty() ? "()" : "(" + std::string(pd->shape.size() - 1, ',') + ")";
    return {std::make_shared<const Constructor>(name,
                                                std::move(fs), ConKind::Tuple, 0)};
  }
  if (const auto* sd = std::get_if<SynonymDesc>(d.get())) return conlist(sd->target);
  return {};
}

}  // namespace

const std::vector<ConstructorRef>& conlist(const Type& t) {
  auto& cache = conlist_cache();
  const std::uint64_t gen = desc_generation();
  {
    std::shared_lock lock(cache.mu);
    if (cache.generation == gen) {
      if (auto it = cache.lists.find(t); it != cache.lists.end()) return *it->second;
    }
  }
  auto built = std::make_shared<const std::vector<ConstructorRef>>(build_conlist(t));
  std::unique_lock lock(cache.mu);
  // Lists handed out earlier stay alive: entries are only dropped from the
  // map when a new registration may have changed the answer, and the old
  // vectors are kept in `retired`.
  if (cache.generation < gen) {
    for (auto& [k, v] : cache.lists) cache.retired.push_back(std::move(v));
    cache.lists.clear();
    cache.generation = gen;
  }
  if (cache.generation != gen) {
    cache.retired.push_back(std::move(built));
    return *cache.retired.back();
  }
  return *cache.lists.emplace(t, std::move(built)).first->second;
}

ConApp conlist_conap(std::span<const ConstructorRef> cs, const Value& v) {
  for (const auto& c : cs) {
    if (auto args = c->proj(v)) return ConApp{c, std::move(*args)};
  }
  throw Error(ErrorKind::NoMatchingConstructor,
              "no constructor among " + std::to_string(cs.size()) + " matches the value");
}

}  // namespace reflectix
