#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "reflectix/typerep.hpp"
#include "reflectix/value.hpp"

// Type-safe serialization over value graphs with sharing and cycles.
//
// Wire format (little-endian, no padding):
//   "GVG1" | u32 root | u32 count | count nodes
//   node: u8 kind, then
//     0 Imm     i64
//     1 Block   u32 tag, u32 arity, arity x u32 index
//     2 Bytes   u32 length, bytes
//     3 Float   8 bytes IEEE-754
//     4 ExtCon  u16 name length, name, u32 arity, arity x u32 index
namespace reflectix {

using NodeRef = std::uint32_t;

enum class NodeKind : std::uint8_t {
  Imm = 0,
  Block = 1,
  Bytes = 2,
  Float = 3,
  ExtCon = 4,
  // In-memory only; never encoded.
  Host,     // a library value standing for itself (abstract values)
  Pending,  // reserved output slot, not filled yet
};

struct ValueNode {
  NodeKind kind = NodeKind::Imm;
  std::int64_t imm = 0;
  std::uint32_t tag = 0;
  double real = 0;
  std::string bytes;  // Bytes payload, ExtCon name
  std::vector<NodeRef> fields;
  // ExtCon: registered constructor, when known. Not part of the encoding.
  const Constructor* identity = nullptr;
  Value host;

  static ValueNode make_imm(std::int64_t i);
  static ValueNode make_block(std::uint32_t tag, std::vector<NodeRef> fields);
  static ValueNode make_bytes(std::string data);
  static ValueNode make_float(double d);
  static ValueNode make_ext(std::string name, std::vector<NodeRef> fields);

  // Floats compare bitwise; identity and Host payloads by address.
  friend bool operator==(const ValueNode& a, const ValueNode& b);
};

struct ValueGraph {
  std::vector<ValueNode> nodes;
  NodeRef root = 0;

  friend bool operator==(const ValueGraph&, const ValueGraph&) = default;
};

std::string encode_graph(const ValueGraph& g);
// Throws MalformedBytes carrying the offset of the offending byte.
ValueGraph decode_graph(std::string_view bytes);

// One node per distinct library value, so sharing is kept. Abstract values
// become Host nodes; closures cannot be represented (NotSupported).
ValueGraph graph_of_value(const Value& v);
// Throws CyclicValue when the graph reachable from the root has a cycle,
// and MalformedValue on Pending nodes.
Value materialize(const ValueGraph& g);

enum class Direction { To, From };

// Recursive: depth-first checking from the root, re-visiting a node when
// its expected pattern generalises. Topological: nodes are checked once
// their parents are done, strongly connected components as a unit.
enum class Strategy { Recursive, Topological };

inline constexpr std::size_t kMaxConvertDepth = 4'000;

struct ConvertStats {
  std::size_t visits = 0;           // arrivals at a Block or ExtCon node
  std::size_t descents = 0;         // times a node's fields were checked
  std::size_t memo_hits = 0;        // arrivals answered by an earlier check
  std::size_t pattern_updates = 0;  // generalisations of some node's pattern
};

// Pattern history of one Block or ExtCon node. Every update strictly
// generalises, so updates <= first.concrete_size().
struct NodeTrace {
  Type first;
  Type last;
  std::size_t updates = 0;
};

struct ConvertResult {
  ValueGraph graph;
  ConvertStats stats;
  std::unordered_map<NodeRef, NodeTrace> traces;
};

// Checks g against t and converts abstract values: To replaces Host nodes
// by their public representation (outside in), From rebuilds abstract
// values from their representation (inside out).
//
// Throws Incompatible, RepresentationRejected, UnknownConstructor,
// NoDescriptor, CyclicValue (abstract value on a cycle) or DepthExceeded.
ConvertResult convert(Direction d, const Type& t, const ValueGraph& g,
                      Strategy s = Strategy::Topological);
// convert(From, ...) with the output discarded.
ConvertStats check_compat(const Type& t, const ValueGraph& g, Strategy s = Strategy::Topological);

std::string serialize(const Type& t, const Value& v);
Value deserialize(const Type& t, std::string_view bytes);

}  // namespace reflectix
