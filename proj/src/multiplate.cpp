#include "reflectix/multiplate.hpp"

#include <memory>

#include "reflectix/error.hpp"
#include "reflectix/extfun.hpp"
#include "reflectix/views.hpp"

namespace reflectix {

namespace {

// Post-order over Multiplate children with an explicit stack.
template <class R, class Step>
R fold_up_m(const Type& t, const Value& v, Step step) {
  struct Frame {
    Type ty;
    Value node;
    Scrapped s;
    std::vector<R> results;
  };
  std::vector<Frame> stack;
  stack.push_back(Frame{t, v, scrap_m(t, v), {}});
  for (;;) {
    Frame& top = stack.back();
    const std::size_t i = top.results.size();
    if (i < top.s.values.size()) {
      Type ct = top.s.shape[i];
      Value cv = top.s.values[i];
      Scrapped cs = scrap_m(ct, cv);
      stack.push_back(Frame{std::move(ct), std::move(cv), std::move(cs), {}});
      continue;
    }
    R r = step(top.ty, top.node, top.s, std::move(top.results));
    stack.pop_back();
    if (stack.empty()) return r;
    stack.back().results.push_back(std::move(r));
  }
}

void check_depth(const Type& t, const Value& v) {
  std::vector<std::pair<Dyn, std::size_t>> todo{{Dyn{t, v}, 1}};
  while (!todo.empty()) {
    auto [d, depth] = std::move(todo.back());
    todo.pop_back();
    if (depth > kMaxPlateDepth) {
      throw Error(ErrorKind::DepthExceeded, "plate traversal nested deeper than " +
                                                std::to_string(kMaxPlateDepth) + " levels");
    }
    for (auto& c : children_dyn(d.rep, d.value)) todo.emplace_back(std::move(c), depth + 1);
  }
}

}  // namespace

Scrapped scrap_m(const Type& t, const Value& v) {
  const auto& cs = conlist(t);
  if (cs.empty()) {
    return Scrapped{{}, {}, [v](std::span<const Value> xs) {
                      if (!xs.empty()) {
                        throw Error(ErrorKind::ArityMismatch, "rebuild expects 0 children, got " +
                                                                  std::to_string(xs.size()));
                      }
                      return v;
                    }};
  }
  ConApp ca = conlist_conap(cs, v);
  ConstructorRef con = ca.con;
  std::vector<Value> orig = ca.args;
  return Scrapped{con->shape(), std::move(ca.args),
                  [con, orig = std::move(orig), v](std::span<const Value> xs) {
                    if (xs.size() == orig.size()) {
                      bool same = true;
                      for (std::size_t i = 0; same && i < xs.size(); ++i) same = xs[i].same(orig[i]);
                      if (same) return v;
                    }
                    return con->embed(xs);
                  }};
}

std::vector<Dyn> children_dyn(const Type& t, const Value& v) {
  Scrapped s = scrap_m(t, v);
  std::vector<Dyn> out;
  out.reserve(s.values.size());
  for (std::size_t i = 0; i < s.values.size(); ++i) out.push_back(Dyn{s.shape[i], s.values[i]});
  return out;
}

std::vector<Dyn> family_dyn(const Type& t, const Value& v) {
  std::vector<Dyn> out;
  std::vector<Dyn> todo{Dyn{t, v}};
  while (!todo.empty()) {
    Dyn d = std::move(todo.back());
    todo.pop_back();
    auto cs = children_dyn(d.rep, d.value);
    todo.insert(todo.end(), std::make_move_iterator(cs.rbegin()), std::make_move_iterator(cs.rend()));
    out.push_back(std::move(d));
  }
  return out;
}

Plate make_plate(const ApplicativeDict& a, std::vector<std::pair<Type, PlateFn>> cases) {
  auto table = std::make_shared<ExtFun<Effectful(const Value&)>>("plate");
  table->extend(Type::any(), [pure = a.pure](const Type&, const Value& v) { return pure(v); });
  for (auto& [pattern, fn] : cases) table->extend(pattern, std::move(fn));
  return Plate{a.brand, [table](const Type& t, const Value& v) { return (*table)(t, v); }};
}

IdPlate make_id_plate(
    std::vector<std::pair<Type, std::function<Value(const Type&, const Value&)>>> cases) {
  auto table = std::make_shared<ExtFun<Value(const Value&)>>("id_plate");
  table->extend(Type::any(), [](const Type&, const Value& v) { return v; });
  for (auto& [pattern, fn] : cases) table->extend(pattern, std::move(fn));
  return [table](const Type& t, const Value& v) { return (*table)(t, v); };
}

ConstPlate make_const_plate(
    const MonoidDict& m,
    std::vector<std::pair<Type, std::function<std::any(const Type&, const Value&)>>> cases) {
  auto table = std::make_shared<ExtFun<std::any(const Value&)>>("const_plate");
  table->extend(Type::any(), [empty = m.empty](const Type&, const Value&) { return empty; });
  for (auto& [pattern, fn] : cases) table->extend(pattern, std::move(fn));
  return [table](const Type& t, const Value& v) { return (*table)(t, v); };
}

Plate traverse_children_p(const ApplicativeDict& a, const Plate& p) {
  if (!(p.brand == a.brand)) {
    throw Error(ErrorKind::BrandMismatch, "plate over " + p.brand.to_string() +
                                              " used with applicative " + a.brand.to_string());
  }
  return Plate{a.brand, [a, p](const Type& t, const Value& v) {
                 Scrapped s = scrap_m(t, v);
                 std::vector<Effectful> effs;
                 effs.reserve(s.values.size());
                 for (std::size_t i = 0; i < s.values.size(); ++i) effs.push_back(p(s.shape[i], s.values[i]));
                 // liftA2 pair over the product, nested to the right.
                 Effectful acc = a.pure(std::any(std::vector<Value>{}));
                 for (std::size_t i = effs.size(); i-- > 0;) {
                   acc = liftA2(a, [](const std::any& x, const std::any& rest) -> std::any {
                     const auto& tail = std::any_cast<const std::vector<Value>&>(rest);
                     std::vector<Value> out;
                     out.reserve(tail.size() + 1);
                     out.push_back(std::any_cast<const Value&>(x));
                     out.insert(out.end(), tail.begin(), tail.end());
                     return out;
                   }, effs[i], acc);
                 }
                 return fun_of_app(a).fmap([rebuild = s.rebuild](const std::any& xs) -> std::any {
                   return rebuild(std::any_cast<const std::vector<Value>&>(xs));
                 }, acc);
               }};
}

IdPlate map_children_p(const IdPlate& p) {
  return [p](const Type& t, const Value& v) {
    Scrapped s = scrap_m(t, v);
    std::vector<Value> xs;
    xs.reserve(s.values.size());
    for (std::size_t i = 0; i < s.values.size(); ++i) xs.push_back(p(s.shape[i], s.values[i]));
    return s.rebuild(xs);
  };
}

ConstPlate fold_children_p(const MonoidDict& m, const ConstPlate& p) {
  return [m, p](const Type& t, const Value& v) {
    Scrapped s = scrap_m(t, v);
    std::any acc = m.empty;
    for (std::size_t i = 0; i < s.values.size(); ++i) acc = m.combine(acc, p(s.shape[i], s.values[i]));
    return acc;
  };
}

namespace {

struct FamilyCtx {
  MonadDict m;
  ApplicativeDict a;
  Plate p;
};

Effectful family_at(const std::shared_ptr<const FamilyCtx>& ctx, const Type& t, const Value& v) {
  Plate self{ctx->a.brand, [ctx](const Type& ct, const Value& cv) { return family_at(ctx, ct, cv); }};
  const Type ty = t;
  return ctx->m.bind(traverse_children_p(ctx->a, self)(t, v), [ctx, ty](const std::any& y) {
    return ctx->p(ty, std::any_cast<const Value&>(y));
  });
}

}  // namespace

Plate traverse_family_p(const MonadDict& m, const Plate& p) {
  if (!(p.brand == m.brand)) {
    throw Error(ErrorKind::BrandMismatch,
                "plate over " + p.brand.to_string() + " used with monad " + m.brand.to_string());
  }
  auto ctx = std::make_shared<const FamilyCtx>(FamilyCtx{m, app_of_mon(m), p});
  return Plate{m.brand, [ctx](const Type& t, const Value& v) {
                 check_depth(t, v);
                 return family_at(ctx, t, v);
               }};
}

IdPlate map_family_p(const IdPlate& p) {
  return [p](const Type& t, const Value& v) {
    return fold_up_m<Value>(t, v, [&p](const Type& ty, const Value&, const Scrapped& s,
                                       std::vector<Value> xs) { return p(ty, s.rebuild(xs)); });
  };
}

ConstPlate pre_fold_p(const MonoidDict& m, const ConstPlate& p) {
  return [m, p](const Type& t, const Value& v) {
    std::any acc = m.empty;
    for (const auto& d : family_dyn(t, v)) acc = m.combine(acc, p(d.rep, d.value));
    return acc;
  };
}

ConstPlate post_fold_p(const MonoidDict& m, const ConstPlate& p) {
  return [m, p](const Type& t, const Value& v) {
    return fold_up_m<std::any>(t, v, [&](const Type& ty, const Value& node, const Scrapped&,
                                         std::vector<std::any> rs) {
      std::any acc = m.empty;
      for (const auto& r : rs) acc = m.combine(acc, r);
      return m.combine(acc, p(ty, node));
    });
  };
}

ConstPlate para_p(const ParaPlate& step) {
  return [step](const Type& t, const Value& v) {
    return fold_up_m<std::any>(t, v, [&](const Type& ty, const Value& node, const Scrapped&,
                                         std::vector<std::any> rs) {
      return step(ty, node, std::move(rs));
    });
  };
}

OpenRec default_openrec(const ApplicativeDict& a) {
  return OpenRec{[a](const OpenRec& r) {
    // r.run(r) is only demanded once a child is reached.
    Plate below{a.brand, [r](const Type& t, const Value& v) { return r.run(r)(t, v); }};
    return traverse_children_p(a, below);
  }};
}

OpenRec override_openrec(
    OpenRec base, Type pattern,
    std::function<Effectful(const Plate& self, const Type&, const Value&)> fn) {
  return OpenRec{[base = std::move(base), pattern = std::move(pattern),
                  fn = std::move(fn)](const OpenRec& r) {
    Plate fallback = base.run(r);
    Plate self{fallback.brand, [r](const Type& t, const Value& v) { return r.run(r)(t, v); }};
    return Plate{fallback.brand, [fallback, self, pattern, fn](const Type& t, const Value& v) {
                   if (matches(pattern, t)) return fn(self, t, v);
                   return fallback(t, v);
                 }};
  }};
}

Plate tie(const OpenRec& r) {
  Plate inner = r.run(r);
  return Plate{inner.brand, [inner](const Type& t, const Value& v) {
                 check_depth(t, v);
                 return inner(t, v);
               }};
}

}  // namespace reflectix
