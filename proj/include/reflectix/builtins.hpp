#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "reflectix/value.hpp"

// Constructors and destructors for values of the built-in types, following
// their registered descriptors.
namespace reflectix::val {

Value of_int(std::int64_t i);
Value of_char(char c);
Value of_float(double d);
Value of_string(std::string s);
Value of_bool(bool b);
Value unit();
Value none();
Value some(Value v);
Value pair(Value a, Value b);
Value triple(Value a, Value b, Value c);
Value list(const std::vector<Value>& items);
Value array(std::vector<Value> items);

// Throw Error(MalformedValue) when the value does not have the expected
// layout.
std::int64_t as_int(const Value& v);
std::string as_string(const Value& v);
bool as_bool(const Value& v);
std::vector<Value> as_list(const Value& v);

}  // namespace reflectix::val
