#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "reflectix/value.hpp"

// Passes over the demo expression type, written with the uniplate
// combinators, and its s-expression syntax:
//
//   expr ::= (cst INT) | (neg expr) | (add expr expr) | (sub expr expr)
//          | (var IDENT) | (let IDENT expr expr)
//   IDENT ::= [a-zA-Z][a-zA-Z0-9_]*
namespace reflectix::expr {

// Throws ParseError with a 1-based line and column.
Value parse(std::string_view text);
std::string print(const Value& e);

// Removes double negations.
Value simplify(const Value& e);
// Evaluates additions, subtractions and negations of constants.
Value const_fold(const Value& e);
// Rewrites Neg (Neg x) to x and Sub (x, y) to Add (x, Neg y) to a normal form.
Value simplify_more(const Value& e, std::uint64_t fuel);
Value simplify_more(const Value& e);
// Replaces constants, bottom-up and left to right, by Var "x0", "x1", ...
// Returns the new expression and the final counter.
std::pair<Value, std::int64_t> abstract(const Value& e);
// Free variables in the order met; a Let binds its name in both of its
// subterms.
std::vector<std::string> free_vars(const Value& e);
std::vector<std::int64_t> constants(const Value& e);
std::int64_t height(const Value& e);
Value subst(const std::map<std::string, Value>& env, const Value& e);

}  // namespace reflectix::expr
