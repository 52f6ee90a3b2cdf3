#include "reflectix/effects.hpp"

#include <memory>

#include "reflectix/error.hpp"

namespace reflectix {

namespace {

using ReaderFn = std::function<std::any(const std::any&)>;
using StateFn = std::function<std::pair<std::any, std::any>(const std::any&)>;
using IOFn = std::function<std::any()>;

template <class T>
const T& payload_as(const Effectful& e) {
  const T* p = std::any_cast<T>(&e.payload);
  if (p == nullptr) {
    throw Error(ErrorKind::BrandMismatch, "payload does not belong to " + e.brand.to_string());
  }
  return *p;
}

const AnyFn& as_fn(const std::any& a) {
  const AnyFn* f = std::any_cast<AnyFn>(&a);
  if (f == nullptr) throw Error(ErrorKind::BrandMismatch, "applied value is not a function");
  return *f;
}

// Payload closures nest one inside another as computations are composed.
// Copying a std::function copies its captures, so the closure is held by a
// shared_ptr to keep copies O(1).
template <class Fn, class F>
Fn shared(F f) {
  auto p = std::make_shared<const F>(std::move(f));
  return Fn([p](const auto&... args) { return (*p)(args...); });
}

Brand brand_of(BrandKind k, std::string param = "") { return Brand{k, std::move(param)}; }

}  // namespace

std::string Brand::to_string() const {
  std::string base;
  switch (kind) {
    case BrandKind::Identity: base = "Identity"; break;
    case BrandKind::Const: base = "Const"; break;
    case BrandKind::Reader: base = "Reader"; break;
    case BrandKind::State: base = "State"; break;
    case BrandKind::IO: base = "IO"; break;
  }
  return param.empty() ? base : base + "(" + param + ")";
}

void check_brand(const Brand& expected, const Effectful& e) {
  if (!(expected == e.brand)) {
    throw Error(ErrorKind::BrandMismatch,
                "expected " + expected.to_string() + ", found " + e.brand.to_string());
  }
}

FunctorialDict fun_of_app(const ApplicativeDict& a) {
  return FunctorialDict{a.brand, [a](const AnyFn& f, const Effectful& x) {
                          return a.apply(a.pure(std::any(f)), x);
                        }};
}

FunctorialDict fun_of_mon(const MonadDict& m) {
  return FunctorialDict{m.brand, [m](const AnyFn& f, const Effectful& kx) {
                          return m.bind(kx, [m, f](const std::any& x) { return m.ret(f(x)); });
                        }};
}

ApplicativeDict app_of_mon(const MonadDict& m) {
  const FunctorialDict fm = fun_of_mon(m);
  return ApplicativeDict{m.brand, m.ret, [m, fm](const Effectful& kf, const Effectful& kx) {
                           return m.bind(kf, [fm, kx](const std::any& f) {
                             return fm.fmap(as_fn(f), kx);
                           });
                         }};
}

Effectful liftA2(const ApplicativeDict& a, const AnyFn2& f, const Effectful& x, const Effectful& y) {
  check_brand(a.brand, x);
  check_brand(a.brand, y);
  AnyFn curried = [f](const std::any& u) -> std::any {
    return AnyFn([f, u](const std::any& v) { return f(u, v); });
  };
  return a.apply(a.apply(a.pure(std::any(curried)), x), y);
}

Effectful liftM(const MonadDict& m, const AnyFn& f, const Effectful& x) {
  return fun_of_mon(m).fmap(f, x);
}

// Every library brand is traversed by one loop that performs the effects in
// list order. Folding with liftA2 gives the same result but copies the
// accumulated list at every step and nests one closure per element.
Effectful traverse_list(const ApplicativeDict& a, const Kleisli& f, const std::vector<std::any>& xs) {
  const Brand b = a.brand;
  const auto step = [b, f](const std::any& x) {
    Effectful e = f(x);
    check_brand(b, e);
    return e;
  };
  switch (b.kind) {
    case BrandKind::Identity: {
      std::vector<std::any> out;
      out.reserve(xs.size());
      for (const auto& x : xs) out.push_back(step(x).payload);
      return a.pure(std::any(std::move(out)));
    }
    case BrandKind::Const: {
      const AnyFn2 keep = [](const std::any&, const std::any&) { return std::any(); };
      Effectful acc = a.pure(std::any());
      for (const auto& x : xs) acc = liftA2(a, keep, acc, step(x));
      return Effectful{b, acc.payload};
    }
    case BrandKind::Reader:
      return Effectful{b, shared<ReaderFn>([step, xs](const std::any& env) -> std::any {
                         std::vector<std::any> out;
                         out.reserve(xs.size());
                         for (const auto& x : xs) out.push_back(payload_as<ReaderFn>(step(x))(env));
                         return out;
                       })};
    case BrandKind::State:
      return Effectful{b, shared<StateFn>([step, xs](const std::any& s0) {
                         std::vector<std::any> out;
                         out.reserve(xs.size());
                         std::any s = s0;
                         for (const auto& x : xs) {
                           auto [v, s1] = payload_as<StateFn>(step(x))(s);
                           out.push_back(std::move(v));
                           s = std::move(s1);
                         }
                         return std::pair<std::any, std::any>(std::any(std::move(out)), s);
                       })};
    case BrandKind::IO:
      return Effectful{b, shared<IOFn>([step, xs]() -> std::any {
                         std::vector<std::any> out;
                         out.reserve(xs.size());
                         for (const auto& x : xs) out.push_back(payload_as<IOFn>(step(x))());
                         return out;
                       })};
  }
  throw Error(ErrorKind::BrandMismatch, "unknown brand " + b.to_string());
}

Effectful sequence_list(const ApplicativeDict& a, const std::vector<Effectful>& xs) {
  std::vector<std::any> boxed(xs.begin(), xs.end());
  return traverse_list(a, [](const std::any& e) { return std::any_cast<const Effectful&>(e); },
                       boxed);
}

Effectful traverse_m(const MonadDict& m, const Kleisli& f, const std::vector<std::any>& xs) {
  return traverse_list(app_of_mon(m), f, xs);
}

Effectful sequence_m(const MonadDict& m, const std::vector<Effectful>& xs) {
  return sequence_list(app_of_mon(m), xs);
}

// ---------------------------------------------------------------------------

MonadDict identity_monad() {
  const Brand b = brand_of(BrandKind::Identity);
  return MonadDict{b, [b](const std::any& x) { return Effectful{b, x}; },
                   [b](const Effectful& x, const Kleisli& f) {
                     check_brand(b, x);
                     Effectful y = f(x.payload);
                     check_brand(b, y);
                     return y;
                   }};
}

ApplicativeDict identity_applicative() {
  const Brand b = brand_of(BrandKind::Identity);
  return ApplicativeDict{b, [b](const std::any& x) { return Effectful{b, x}; },
                         [b](const Effectful& kf, const Effectful& kx) {
                           check_brand(b, kf);
                           check_brand(b, kx);
                           return Effectful{b, as_fn(kf.payload)(kx.payload)};
                         }};
}

std::any run_identity(const Effectful& e) {
  check_brand(brand_of(BrandKind::Identity), e);
  return e.payload;
}

ApplicativeDict const_applicative(const MonoidDict& m) {
  const Brand b = brand_of(BrandKind::Const, m.name);
  return ApplicativeDict{b, [b, m](const std::any&) { return Effectful{b, m.empty}; },
                         [b, m](const Effectful& kf, const Effectful& kx) {
                           check_brand(b, kf);
                           check_brand(b, kx);
                           return Effectful{b, m.combine(kf.payload, kx.payload)};
                         }};
}

std::any run_const(const Effectful& e) {
  if (e.brand.kind != BrandKind::Const) {
    throw Error(ErrorKind::BrandMismatch, "expected Const, found " + e.brand.to_string());
  }
  return e.payload;
}

MonoidDict list_monoid() {
  return MonoidDict{"list", std::any(std::vector<std::any>{}),
                    [](const std::any& a, const std::any& b) -> std::any {
                      auto out = std::any_cast<const std::vector<std::any>&>(a);
                      const auto& rest = std::any_cast<const std::vector<std::any>&>(b);
                      out.insert(out.end(), rest.begin(), rest.end());
                      return out;
                    }};
}

MonoidDict sum_monoid() {
  return MonoidDict{"sum", std::any(0LL), [](const std::any& a, const std::any& b) -> std::any {
                      return std::any_cast<long long>(a) + std::any_cast<long long>(b);
                    }};
}

MonoidDict string_monoid() {
  return MonoidDict{"string", std::any(std::string()),
                    [](const std::any& a, const std::any& b) -> std::any {
                      return std::any_cast<const std::string&>(a) +
                             std::any_cast<const std::string&>(b);
                    }};
}

// ---------------------------------------------------------------------------

MonadDict reader_monad(std::string env) {
  const Brand b = brand_of(BrandKind::Reader, std::move(env));
  return MonadDict{
      b,
      [b](const std::any& x) { return Effectful{b, shared<ReaderFn>([x](const std::any&) { return x; })}; },
      [b](const Effectful& x, const Kleisli& f) {
        check_brand(b, x);
        ReaderFn rx = payload_as<ReaderFn>(x);
        return Effectful{b, shared<ReaderFn>([b, rx, f](const std::any& env) {
                           Effectful next = f(rx(env));
                           check_brand(b, next);
                           return payload_as<ReaderFn>(next)(env);
                         })};
      }};
}

Effectful ask(std::string env) {
  return Effectful{brand_of(BrandKind::Reader, std::move(env)),
                   shared<ReaderFn>([](const std::any& e) { return e; })};
}

Effectful local(const AnyFn& modify, const Effectful& r) {
  if (r.brand.kind != BrandKind::Reader) {
    throw Error(ErrorKind::BrandMismatch, "expected Reader, found " + r.brand.to_string());
  }
  ReaderFn inner = payload_as<ReaderFn>(r);
  return Effectful{r.brand, shared<ReaderFn>([inner, modify](const std::any& env) {
                     return inner(modify(env));
                   })};
}

std::any run_reader(const Effectful& r, const std::any& env) {
  if (r.brand.kind != BrandKind::Reader) {
    throw Error(ErrorKind::BrandMismatch, "expected Reader, found " + r.brand.to_string());
  }
  return payload_as<ReaderFn>(r)(env);
}

MonadDict state_monad(std::string state) {
  const Brand b = brand_of(BrandKind::State, std::move(state));
  return MonadDict{
      b,
      [b](const std::any& x) {
        return Effectful{b, shared<StateFn>([x](const std::any& s) { return std::pair{x, s}; })};
      },
      [b](const Effectful& x, const Kleisli& f) {
        check_brand(b, x);
        StateFn sx = payload_as<StateFn>(x);
        return Effectful{b, shared<StateFn>([b, sx, f](const std::any& s) {
                           auto [y, s1] = sx(s);
                           Effectful next = f(y);
                           check_brand(b, next);
                           return payload_as<StateFn>(next)(s1);
                         })};
      }};
}

Effectful get_state(std::string state) {
  return Effectful{brand_of(BrandKind::State, std::move(state)),
                   shared<StateFn>([](const std::any& s) { return std::pair{s, s}; })};
}

Effectful put_state(const std::any& s, std::string state) {
  return Effectful{brand_of(BrandKind::State, std::move(state)),
                   shared<StateFn>([s](const std::any&) { return std::pair{std::any(), s}; })};
}

std::pair<std::any, std::any> run_state(const Effectful& m, const std::any& s0) {
  if (m.brand.kind != BrandKind::State) {
    throw Error(ErrorKind::BrandMismatch, "expected State, found " + m.brand.to_string());
  }
  return payload_as<StateFn>(m)(s0);
}

MonadDict io_monad() {
  const Brand b = brand_of(BrandKind::IO);
  return MonadDict{b, [b](const std::any& x) { return Effectful{b, shared<IOFn>([x] { return x; })}; },
                   [b](const Effectful& x, const Kleisli& f) {
                     check_brand(b, x);
                     IOFn io = payload_as<IOFn>(x);
                     return Effectful{b, shared<IOFn>([b, io, f] {
                                        Effectful next = f(io());
                                        check_brand(b, next);
                                        return payload_as<IOFn>(next)();
                                      })};
                   }};
}

Effectful embed_io(std::function<std::any()> thunk) {
  return Effectful{brand_of(BrandKind::IO), shared<IOFn>(std::move(thunk))};
}

std::any run_io(const Effectful& m) {
  check_brand(brand_of(BrandKind::IO), m);
  return payload_as<IOFn>(m)();
}

}  // namespace reflectix
