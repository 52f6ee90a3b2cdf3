#pragma once

#include <any>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "reflectix/desc.hpp"
#include "reflectix/effects.hpp"
#include "reflectix/typerep.hpp"
#include "reflectix/value.hpp"

// Traversals over several types at once. A child here is any constructor
// argument or record field, whatever its type.
namespace reflectix {

struct Scrapped {
  ProductShape shape;
  std::vector<Value> values;
  // Returns the scrapped value itself when handed back the same values.
  std::function<Value(std::span<const Value>)> rebuild;
};

// Types without a constructor list (scalars, strings, arrays, abstract and
// extensible types) scrap to the empty product.
Scrapped scrap_m(const Type& t, const Value& v);

std::vector<Dyn> children_dyn(const Type& t, const Value& v);
// Preorder.
std::vector<Dyn> family_dyn(const Type& t, const Value& v);

using PlateFn = std::function<Effectful(const Type&, const Value&)>;

// A type-indexed effectful transformation for one brand.
struct Plate {
  Brand brand;
  PlateFn run;

  Effectful operator()(const Type& t, const Value& v) const { return run(t, v); }
};

using IdPlate = std::function<Value(const Type&, const Value&)>;
// Results are elements of some monoid.
using ConstPlate = std::function<std::any(const Type&, const Value&)>;
// The step of a paramorphism: node and the results of its children.
using ParaPlate = std::function<std::any(const Type&, const Value&, std::vector<std::any>)>;

// Total plates: types matching none of the patterns get the default
// (pure, identity, monoid empty). The most specific pattern wins.
Plate make_plate(const ApplicativeDict& a, std::vector<std::pair<Type, PlateFn>> cases = {});
IdPlate make_id_plate(
    std::vector<std::pair<Type, std::function<Value(const Type&, const Value&)>>> cases = {});
ConstPlate make_const_plate(
    const MonoidDict& m,
    std::vector<std::pair<Type, std::function<std::any(const Type&, const Value&)>>> cases = {});

// Throws BrandMismatch when p is not over a's brand.
Plate traverse_children_p(const ApplicativeDict& a, const Plate& p);
IdPlate map_children_p(const IdPlate& p);
ConstPlate fold_children_p(const MonoidDict& m, const ConstPlate& p);

// Children first, then p at the node. Values nested deeper than
// kMaxPlateDepth raise DepthExceeded.
inline constexpr std::size_t kMaxPlateDepth = 4'000;
Plate traverse_family_p(const MonadDict& m, const Plate& p);

// The remaining family combinators work without host recursion.
IdPlate map_family_p(const IdPlate& p);
// Node's own contribution before (pre) or after (post) its descendants'.
ConstPlate pre_fold_p(const MonoidDict& m, const ConstPlate& p);
ConstPlate post_fold_p(const MonoidDict& m, const ConstPlate& p);
ConstPlate para_p(const ParaPlate& step);

struct OpenRec {
  std::function<Plate(const OpenRec&)> run;
};

// run(r) = traverse_children_p(a, r.run(r)).
OpenRec default_openrec(const ApplicativeDict& a);
// `base` with `fn` taking over at types matching `pattern`. `fn` receives
// the tied plate for recursing further.
OpenRec override_openrec(
    OpenRec base, Type pattern,
    std::function<Effectful(const Plate& self, const Type&, const Value&)> fn);
// r.run(r), guarded by kMaxPlateDepth.
Plate tie(const OpenRec& r);

}  // namespace reflectix
