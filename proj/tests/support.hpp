#pragma once

#include <any>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "reflectix/demo.hpp"
#include "reflectix/typerep.hpp"
#include "reflectix/value.hpp"

namespace testsupport {

using reflectix::Type;
using reflectix::Value;
using reflectix::ValueKind;
namespace ty = reflectix::ty;

inline Type random_type(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 3 : 8);
  switch (pick(rng)) {
    case 0: return ty::int_t();
    case 1: return ty::string_t();
    case 2: return ty::bool_t();
    case 3: return ty::float_t();
    case 4: return ty::list(random_type(rng, depth - 1));
    case 5: return ty::option(random_type(rng, depth - 1));
    case 6: return ty::array(random_type(rng, depth - 1));
    case 7: return ty::pair(random_type(rng, depth - 1), random_type(rng, depth - 1));
    default: return ty::fun(random_type(rng, depth - 1), random_type(rng, depth - 1));
  }
}

// Replaces random subterms of `t` by the wildcard.
inline Type generalize(std::mt19937_64& rng, const Type& t, double p = 0.3) {
  std::bernoulli_distribution coin(p);
  if (t.is_any() || coin(rng)) return Type::any();
  std::vector<Type> args;
  for (const auto& a : t.args()) args.push_back(generalize(rng, a, p));
  return Type::apply(t.head(), std::move(args));
}

inline Type random_pattern(std::mt19937_64& rng, int depth) {
  return generalize(rng, random_type(rng, depth));
}

// Structural equality straight off the runtime layout; the independent
// oracle for the generic equality. Custom payloads compare when they hold an
// int, an int64 or a string.
inline bool same_layout(const Value& a, const Value& b) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case ValueKind::Imm: return a.as_imm() == b.as_imm();
    case ValueKind::Float:
      return a.as_float() == b.as_float() || (std::isnan(a.as_float()) && std::isnan(b.as_float()));
    case ValueKind::Bytes: return a.as_bytes() == b.as_bytes();
    case ValueKind::Block:
    case ValueKind::ExtCon: {
      if (a.is(ValueKind::Block) ? a.tag() != b.tag() : a.ext_name() != b.ext_name()) return false;
      if (a.fields().size() != b.fields().size()) return false;
      for (std::size_t i = 0; i < a.fields().size(); ++i) {
        if (!same_layout(a.fields()[i], b.fields()[i])) return false;
      }
      return true;
    }
    case ValueKind::Custom: {
      if (a.custom_identifier() != b.custom_identifier()) return false;
      const std::any& x = a.custom_payload();
      const std::any& y = b.custom_payload();
      if (x.type() != y.type()) return false;
      if (auto* p = std::any_cast<std::int64_t>(&x)) return *p == std::any_cast<std::int64_t>(y);
      if (auto* p = std::any_cast<int>(&x)) return *p == std::any_cast<int>(y);
      if (auto* p = std::any_cast<std::string>(&x)) return *p == std::any_cast<std::string>(y);
      return false;
    }
    case ValueKind::Closure: return a.same(b);
  }
  return false;
}

// Random expression with roughly `size` constructors.
inline Value random_expr(std::mt19937_64& rng, int size) {
  namespace demo = reflectix::demo;
  std::uniform_int_distribution<int> leaf(0, 1);
  std::uniform_int_distribution<int> k(-9, 9);
  static const char* names[] = {"x", "y", "z", "w"};
  if (size <= 1) {
    if (leaf(rng) == 0) return demo::cst(k(rng));
    return demo::var(names[std::uniform_int_distribution<int>(0, 3)(rng)]);
  }
  std::uniform_int_distribution<int> pick(0, 3);
  const int rest = size - 1;
  const int left = std::uniform_int_distribution<int>(1, std::max(1, rest - 1))(rng);
  switch (pick(rng)) {
    case 0: return demo::neg(random_expr(rng, rest));
    case 1: return demo::add(random_expr(rng, left), random_expr(rng, rest - left));
    case 2: return demo::sub(random_expr(rng, left), random_expr(rng, rest - left));
    default:
      return demo::let(names[std::uniform_int_distribution<int>(0, 3)(rng)],
                       random_expr(rng, left), random_expr(rng, rest - left));
  }
}

inline Value random_btree(std::mt19937_64& rng, int size) {
  namespace demo = reflectix::demo;
  if (size <= 0) return demo::empty();
  const int left = std::uniform_int_distribution<int>(0, size - 1)(rng);
  return demo::node(random_btree(rng, left),
                    Value::imm(std::uniform_int_distribution<int>(0, 99)(rng)),
                    random_btree(rng, size - 1 - left));
}

inline Value random_rtree(std::mt19937_64& rng, int depth) {
  namespace demo = reflectix::demo;
  std::vector<Value> kids;
  if (depth > 0) {
    const int n = std::uniform_int_distribution<int>(0, 3)(rng);
    for (int i = 0; i < n; ++i) kids.push_back(random_rtree(rng, depth - 1));
  }
  return demo::rnode(Value::imm(std::uniform_int_distribution<int>(0, 99)(rng)), kids);
}

}  // namespace testsupport
