#pragma once

#include <string>
#include <vector>

#include "reflectix/extfun.hpp"
#include "reflectix/typerep.hpp"
#include "reflectix/value.hpp"

namespace reflectix {

// Rendering: ints in decimal, strings quoted and escaped, lists `[a; b]`,
// arrays `[|a; b|]`, tuples `(a, b)`, functions `<fun>`, constructors
// `Name (a, b)` or a bare `Name`, records `{f = v; g = w}` and abstract
// values as `name(repr)`.
// Throws NotSupported for types without a descriptor (functions excepted)
// and for abstract or opaque types without a public representation.
std::string show(const Type& t, const Value& v);

// The extensible function behind `show`. Cases added here are also used for
// nested positions.
ExtFun<std::string(const Value&)>& show_fun();

// Structural equality through the sum-of-products view. Extensible values
// compare their constructor identity; abstract values their representation.
// Floats compare by value except that NaN equals NaN.
// Throws NotSupported for functions and types without a descriptor.
bool equal(const Type& t, const Value& x, const Value& y);

// The same relation computed through the list-of-constructors view.
bool equal_conlist(const Type& t, const Value& x, const Value& y);

// [v] if `candidate` is the parent type, otherwise [].
std::vector<Value> child(const Type& parent, const Type& candidate, const Value& v);

// Maximal substructures of type `t`, left to right. Positions of other
// types are searched through their own structure when it is algebraic
// (variants, records, tuples, synonyms and non-byte arrays), so the trees
// held in a `List(Rtree a)` field count as children of the rose tree.
// Scalars, strings, functions and abstract, opaque or extensible values are
// not searched. Each function uses a different view; they agree.
std::vector<Value> children_sumprod(const Type& t, const Value& v);
std::vector<Value> children_spine(const Type& t, const Value& v);
std::vector<Value> children_conlist(const Type& t, const Value& v);

}  // namespace reflectix
