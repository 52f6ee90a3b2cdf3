#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "reflectix/effects.hpp"
#include "reflectix/typerep.hpp"
#include "reflectix/value.hpp"

namespace reflectix {

// Children of a value together with the function putting new ones in their
// place. Children are the maximal substructures of the scrapped type (see
// children_conlist). Rebuilding with the original children returns the
// original value, and positions whose child is unchanged keep their node.
struct Scrap {
  std::vector<Value> children;
  // Throws ArityMismatch unless given exactly children.size() values.
  std::function<Value(std::span<const Value>)> rebuild;
};

// Scalars, strings, abstract, opaque and extensible values have no children.
// Throws NotSupported for types without a descriptor.
Scrap scrap(const Type& t, const Value& v);

std::vector<Value> children(const Type& t, const Value& v);
Value replace_children(const Type& t, const Value& v, std::span<const Value> cs);

// The value and all its descendants, preorder.
std::vector<Value> family(const Type& t, const Value& v);

using ValueFn = std::function<Value(const Value&)>;
using Rule = std::function<std::optional<Value>(const Value&)>;

Value map_children(const Type& t, const ValueFn& f, const Value& v);
// Bottom-up: f sees each node after its children were transformed.
Value map_family(const Type& t, const ValueFn& f, const Value& v);

inline constexpr std::uint64_t kDefaultFuel = 1'000'000;

// Rewrites until `rule` applies nowhere. Each rule firing costs one unit of
// fuel; throws FuelExhausted when it runs out.
Value reduce_family(const Type& t, const Rule& rule, const Value& v,
                    std::uint64_t fuel = kDefaultFuel);

namespace detail {

// Post-order evaluation without host recursion.
template <class R, class Step>
R fold_up(const Type& t, const Value& v, Step step) {
  struct Frame {
    Value node;
    Scrap s;
    std::vector<R> results;
  };
  std::vector<Frame> stack;
  stack.push_back(Frame{v, scrap(t, v), {}});
  for (;;) {
    Frame& top = stack.back();
    if (top.results.size() < top.s.children.size()) {
      Value next = top.s.children[top.results.size()];
      stack.push_back(Frame{next, scrap(t, next), {}});
      continue;
    }
    R r = step(top.node, top.s, std::move(top.results));
    stack.pop_back();
    if (stack.empty()) return r;
    stack.back().results.push_back(std::move(r));
  }
}

}  // namespace detail

// Paramorphism: `step` receives each node with its children's results.
template <class R>
R para(const Type& t, const std::function<R(const Value&, std::vector<R>)>& step, const Value& v) {
  return detail::fold_up<R>(t, v, [&](const Value& node, const Scrap&, std::vector<R> rs) {
    return step(node, std::move(rs));
  });
}

// Effectful variants. Payloads of the returned computations are Values.
// The family traversals recurse on the host stack: values nested deeper
// than kMaxTraverseDepth raise DepthExceeded.
using ValueKleisli = std::function<Effectful(const Value&)>;
inline constexpr std::size_t kMaxTraverseDepth = 4'000;

Effectful traverse_children(const ApplicativeDict& a, const Type& t, const ValueKleisli& f,
                            const Value& v);
Effectful traverse_family(const MonadDict& m, const Type& t, const ValueKleisli& f,
                          const Value& v);
// `rule` yields an std::optional<Value>.
Effectful mreduce_family(const MonadDict& m, const Type& t, const ValueKleisli& rule,
                         const Value& v, std::uint64_t fuel = kDefaultFuel);

}  // namespace reflectix
