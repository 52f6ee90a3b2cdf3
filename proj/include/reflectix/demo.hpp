#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "reflectix/desc.hpp"

// Example datatypes registered with the library: the usual binary and rose
// trees, a small expression language, abstract naturals, synonyms, opaque
// handles and an extensible exception type. Every accessor registers the
// whole set on first use.
namespace reflectix::demo {

void ensure_registered();

// 'a btree = Empty | Node of 'a btree * 'a * 'a btree
Type btree(Type a);
Value empty();
Value node(Value l, Value x, Value r);

// 'a rtree = {attr : 'a; children : 'a rtree list}
Type rtree(Type a);
Value rnode(Value attr, const std::vector<Value>& children);

// expr = Cst of int | Neg of expr | Add of expr * expr | Sub of expr * expr
//      | Var of string | Let of string * expr * expr
Type expr();
Value cst(std::int64_t k);
Value neg(Value e);
Value add(Value a, Value b);
Value sub(Value a, Value b);
Value var(std::string name);
Value let(std::string name, Value def, Value body);

// Abstract naturals. Outside their module they are Custom payloads carrying
// an int64; their public representation is Int and negative integers are
// rejected. NatInternal is the inside view: a synonym of Int.
Type nat();
Type nat_internal();
Value make_nat(std::int64_t n);  // precondition: n >= 0
std::int64_t nat_value(const Value& v);

// 'a poly = Leaf of int | Node of 'a poly * ('a * 'a) poly
// Polymorphic recursion: a cyclic value of this type is only checkable by
// generalising its type.
Type poly(Type a);
Value leaf(std::int64_t k);
Value pnode(Value l, Value r);

// Abstract integer ranges represented by (lo, hi); pairs with lo > hi are
// rejected.
Type range();
Value make_range(std::int64_t lo, std::int64_t hi);
std::pair<std::int64_t, std::int64_t> range_bounds(const Value& v);

// Score = Points = Int, a chain of two synonyms.
Type score();
Type points();

// Opaque types: Symbol is represented by String, Handle has no
// representation and cannot be serialized.
Type symbol();
Value make_symbol(std::string s);
Type handle();
Value make_handle(int id);

// Extensible exceptions.
Type exn();
std::shared_ptr<ExtensibleDesc> exn_desc();
Value failure(std::string msg);   // Demo.Failure of string
Value exit_code(std::int64_t k);  // Demo.Exit of int
Value not_found();                // Demo.Not_found

}  // namespace reflectix::demo
