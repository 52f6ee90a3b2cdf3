#include "reflectix/uniplate.hpp"

#include <memory>

#include "internal.hpp"
#include "reflectix/desc.hpp"
#include "reflectix/error.hpp"
#include "reflectix/views.hpp"

namespace reflectix {

namespace {

// Where the children sit inside a value: a tree mirroring the searched
// part of its structure.
struct Piece {
  enum class Kind { Keep, Hole, Con, Array };
  Kind kind = Kind::Keep;
  Value orig;
  ConstructorRef con;
  DescRef array;  // Array: keeps the ArrayDesc alive
  std::vector<Piece> parts;
};

void decompose(const Type& parent, const Type& t, const Value& v, Piece& out,
               std::vector<Value>& kids);

Piece search(const Type& parent, const Type& t, const Value& v, std::vector<Value>& kids) {
  Piece p;
  p.orig = v;
  if (ty_equal(t, parent)) {
    p.kind = Piece::Kind::Hole;
    kids.push_back(v);
  } else if (searched_type(t)) {
    decompose(parent, t, v, p, kids);
  }
  return p;
}

void decompose(const Type& parent, const Type& t, const Value& v, Piece& out,
               std::vector<Value>& kids) {
  const auto& cs = conlist(t);
  if (!cs.empty()) {
    ConApp ca = conlist_conap(cs, v);
    out.kind = Piece::Kind::Con;
    out.con = ca.con;
    for (std::size_t i = 0; i < ca.args.size(); ++i) {
      out.parts.push_back(search(parent, ca.con->args()[i].ty, ca.args[i], kids));
    }
    return;
  }
  const Type r = resolve_synonyms(t);
  auto d = view_desc(r);
  const auto* a = std::get_if<ArrayDesc>(d.get());
  if (a == nullptr || a->byte_storage) return;
  out.kind = Piece::Kind::Array;
  out.array = d;
  const std::size_t n = a->ops.length(v);
  for (std::size_t i = 0; i < n; ++i) out.parts.push_back(search(parent, a->elem, a->ops.get(v, i), kids));
}

bool holds_children(const Piece& p) {
  if (p.kind == Piece::Kind::Hole) return true;
  for (const auto& q : p.parts) {
    if (holds_children(q)) return true;
  }
  return false;
}

Value assemble(const Piece& p, std::span<const Value> cs, std::size_t& pos) {
  switch (p.kind) {
    case Piece::Kind::Keep: return p.orig;
    case Piece::Kind::Hole: return cs[pos++];
    case Piece::Kind::Con:
    case Piece::Kind::Array: {
      std::vector<Value> parts;
      parts.reserve(p.parts.size());
      bool changed = false;
      for (const auto& q : p.parts) {
        parts.push_back(assemble(q, cs, pos));
        changed = changed || !parts.back().same(q.orig);
      }
      if (!changed) return p.orig;
      if (p.kind == Piece::Kind::Con) return p.con->embed(parts);
      const auto& ops = std::get<ArrayDesc>(*p.array).ops;
      return ops.init(parts.size(), [&](std::size_t i) { return parts[i]; });
    }
  }
  return p.orig;
}

void require_desc(const Type& t) {
  if (scalar_kind(t)) return;
  if (std::holds_alternative<NoDesc>(*view_desc(t))) {
    throw Error(ErrorKind::NotSupported, "scrap: type not supported: " + t.to_string());
  }
}

void check_depth(const Type& t, const Value& v) {
  std::vector<std::pair<Value, std::size_t>> todo{{v, 1}};
  while (!todo.empty()) {
    auto [x, depth] = std::move(todo.back());
    todo.pop_back();
    if (depth > kMaxTraverseDepth) {
      throw Error(ErrorKind::DepthExceeded, "traversal nested deeper than " +
                                                std::to_string(kMaxTraverseDepth) + " levels");
    }
    for (auto& c : children(t, x)) todo.emplace_back(std::move(c), depth + 1);
  }
}

}  // namespace

Scrap scrap(const Type& t, const Value& v) {
  require_desc(t);
  auto root = std::make_shared<Piece>();
  root->orig = v;
  std::vector<Value> kids;
  if (!scalar_kind(t)) decompose(t, t, v, *root, kids);
  if (!holds_children(*root)) {
    return Scrap{{}, [v](std::span<const Value> cs) {
                   if (!cs.empty()) {
                     throw Error(ErrorKind::ArityMismatch,
                                 "rebuild expects 0 children, got " + std::to_string(cs.size()));
                   }
                   return v;
                 }};
  }
  const std::size_t n = kids.size();
  return Scrap{std::move(kids), [root, n](std::span<const Value> cs) {
                 if (cs.size() != n) {
                   throw Error(ErrorKind::ArityMismatch, "rebuild expects " + std::to_string(n) +
                                                             " children, got " +
                                                             std::to_string(cs.size()));
                 }
                 std::size_t pos = 0;
                 return assemble(*root, cs, pos);
               }};
}

std::vector<Value> children(const Type& t, const Value& v) { return scrap(t, v).children; }

Value replace_children(const Type& t, const Value& v, std::span<const Value> cs) {
  return scrap(t, v).rebuild(cs);
}

std::vector<Value> family(const Type& t, const Value& v) {
  std::vector<Value> out;
  std::vector<Value> todo{v};
  while (!todo.empty()) {
    Value x = std::move(todo.back());
    todo.pop_back();
    auto cs = children(t, x);
    todo.insert(todo.end(), cs.rbegin(), cs.rend());
    out.push_back(std::move(x));
  }
  return out;
}

Value map_children(const Type& t, const ValueFn& f, const Value& v) {
  Scrap s = scrap(t, v);
  std::vector<Value> cs;
  cs.reserve(s.children.size());
  for (const auto& c : s.children) cs.push_back(f(c));
  return s.rebuild(cs);
}

Value map_family(const Type& t, const ValueFn& f, const Value& v) {
  return detail::fold_up<Value>(t, v, [&](const Value&, const Scrap& s, std::vector<Value> cs) {
    return f(s.rebuild(cs));
  });
}

Value reduce_family(const Type& t, const Rule& rule, const Value& v, std::uint64_t fuel) {
  std::uint64_t used = 0;
  std::function<Value(const Value&)> g = [&](const Value& x) -> Value {
    auto y = rule(x);
    if (!y) return x;
    if (++used > fuel) {
      throw Error(ErrorKind::FuelExhausted,
                  "reduce_family: rule fired more than " + std::to_string(fuel) + " times");
    }
    return map_family(t, g, *y);
  };
  return map_family(t, g, v);
}

Effectful traverse_children(const ApplicativeDict& a, const Type& t, const ValueKleisli& f,
                            const Value& v) {
  Scrap s = scrap(t, v);
  std::vector<std::any> cs(s.children.begin(), s.children.end());
  Effectful kids = traverse_list(
      a, [f](const std::any& x) { return f(std::any_cast<const Value&>(x)); }, cs);
  auto rebuild = s.rebuild;
  return fun_of_app(a).fmap(
      [rebuild](const std::any& xs) -> std::any {
        const auto& items = std::any_cast<const std::vector<std::any>&>(xs);
        std::vector<Value> vs;
        vs.reserve(items.size());
        for (const auto& x : items) vs.push_back(std::any_cast<const Value&>(x));
        return rebuild(vs);
      },
      kids);
}

Effectful traverse_family(const MonadDict& m, const Type& t, const ValueKleisli& f,
                          const Value& v) {
  check_depth(t, v);
  const ApplicativeDict a = app_of_mon(m);
  auto g = std::make_shared<ValueKleisli>();
  std::weak_ptr<ValueKleisli> weak = g;
  *g = [m, a, t, f, weak](const Value& x) {
    auto self = weak.lock();
    return m.bind(traverse_children(a, t, *self, x),
                  [f](const std::any& y) { return f(std::any_cast<const Value&>(y)); });
  };
  // Keep `g` alive for as long as the computation may run.
  Effectful out = (*g)(v);
  return m.bind(out, [g, m](const std::any& y) { return m.ret(y); });
}

Effectful mreduce_family(const MonadDict& m, const Type& t, const ValueKleisli& rule,
                         const Value& v, std::uint64_t fuel) {
  auto used = std::make_shared<std::uint64_t>(0);
  auto g = std::make_shared<ValueKleisli>();
  std::weak_ptr<ValueKleisli> weak = g;
  *g = [m, t, rule, weak, used, fuel](const Value& x) {
    return m.bind(rule(x), [m, t, weak, used, fuel, x](const std::any& r) {
      const auto& y = std::any_cast<const std::optional<Value>&>(r);
      if (!y) return m.ret(std::any(x));
      if (++*used > fuel) {
        throw Error(ErrorKind::FuelExhausted,
                    "mreduce_family: rule fired more than " + std::to_string(fuel) + " times");
      }
      return traverse_family(m, t, *weak.lock(), *y);
    });
  };
  Effectful out = traverse_family(m, t, *g, v);
  return m.bind(out, [g, m](const std::any& y) { return m.ret(y); });
}

}  // namespace reflectix
