#include <doctest.h>

#include <chrono>
#include <fstream>
#include <random>
#include <sstream>

#include "reflectix/builtins.hpp"
#include "reflectix/demo.hpp"
#include "reflectix/error.hpp"
#include "reflectix/generics.hpp"
#include "reflectix/safeser.hpp"
#include "support.hpp"

using namespace reflectix;
using testsupport::same_layout;

namespace {

using N = ValueNode;

ValueGraph graph(NodeRef root, std::vector<ValueNode> nodes) { return ValueGraph{std::move(nodes), root}; }

std::string slurp(const std::string& name) {
  std::ifstream in(std::string(RFX_GOLDEN_DIR) + "/" + name, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Little-endian byte builder, written out by hand for the oracle.
struct Bytes {
  std::string s;
  Bytes& u8(unsigned x) {
    s.push_back(static_cast<char>(x));
    return *this;
  }
  Bytes& u32(std::uint32_t x) {
    for (int i = 0; i < 4; ++i) u8((x >> (8 * i)) & 0xff);
    return *this;
  }
  Bytes& i64(std::int64_t x) {
    for (int i = 0; i < 8; ++i) u8((static_cast<std::uint64_t>(x) >> (8 * i)) & 0xff);
    return *this;
  }
};

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::NotSupported;
}

// Values of a few registered types built straight from their layout.
Value random_at(std::mt19937_64& rng, const Type& t, int depth) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const std::string head = t.head()->name();
  if (head == "Int") return Value::imm(pick(-1000, 1000));
  if (head == "Float") return Value::real(pick(-100, 100) / 8.0);
  if (head == "Char") return Value::imm(pick(0, 255));
  if (head == "String") return Value::bytes(std::string(static_cast<std::size_t>(pick(0, 5)), 'a' + pick(0, 25)));
  if (head == "Bool") return Value::imm(pick(0, 1));
  if (head == "Unit") return Value::imm(0);
  if (head == "Option") return pick(0, 2) == 0 || depth <= 0 ? Value::imm(0) : Value::block(0, {random_at(rng, t.arg(0), depth - 1)});
  if (head == "List" || head == "Array") {
    std::vector<Value> xs;
    const int n = depth <= 0 ? 0 : pick(0, 4);
    for (int i = 0; i < n; ++i) xs.push_back(random_at(rng, t.arg(0), depth - 1));
    return head == "List" ? val::list(xs) : val::array(xs);
  }
  if (head == "Pair") return Value::block(0, {random_at(rng, t.arg(0), depth - 1), random_at(rng, t.arg(1), depth - 1)});
  if (head == "Expr") return testsupport::random_expr(rng, pick(1, 12));
  if (head == "Btree") return testsupport::random_btree(rng, pick(0, 8));
  if (head == "Rtree") return testsupport::random_rtree(rng, std::min(depth, 3));
  if (head == "Nat") return demo::make_nat(pick(0, 50));
  if (head == "Range") {
    const int lo = pick(-9, 9);
    return demo::make_range(lo, lo + pick(0, 9));
  }
  if (head == "Symbol") return demo::make_symbol("sym" + std::to_string(pick(0, 9)));
  if (head == "Score") return Value::imm(pick(0, 99));
  if (head == "Exn") {
    switch (pick(0, 2)) {
      case 0: return demo::failure("f" + std::to_string(pick(0, 9)));
      case 1: return demo::exit_code(pick(-5, 5));
      default: return demo::not_found();
    }
  }
  FAIL("no generator for " << t.to_string());
  return Value();
}

std::vector<Type> sample_types() {
  return {ty::int_t(),
          ty::string_t(),
          ty::list(ty::int_t()),
          ty::list(ty::string_t()),
          ty::option(ty::pair(ty::int_t(), ty::float_t())),
          ty::array(ty::bool_t()),
          demo::expr(),
          demo::btree(ty::int_t()),
          demo::rtree(ty::char_t()),
          demo::nat(),
          ty::list(demo::range()),
          ty::pair(demo::symbol(), demo::score()),
          ty::list(demo::exn())};
}

// Random graph: Imm/Bytes leaves and small Blocks, possibly cyclic.
ValueGraph random_graph(std::mt19937_64& rng, std::size_t n, bool acyclic) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  ValueGraph g;
  for (std::size_t i = 0; i < n; ++i) {
    const bool last = i + 1 == n;
    const int k = acyclic && last ? 0 : pick(0, 4);
    if (k <= 1) {
      g.nodes.push_back(pick(0, 5) == 0 ? N::make_bytes("s") : N::make_imm(pick(0, 2)));
      continue;
    }
    std::vector<NodeRef> fs;
    const int arity = pick(1, 3);
    for (int j = 0; j < arity; ++j) {
      const int lo = acyclic ? static_cast<int>(i) + 1 : 0;
      fs.push_back(static_cast<NodeRef>(pick(lo, static_cast<int>(n) - 1)));
    }
    g.nodes.push_back(N::make_block(static_cast<std::uint32_t>(pick(0, 1)), std::move(fs)));
  }
  g.root = 0;
  return g;
}

std::size_t tracked_reachable(const ValueGraph& g) {
  std::vector<bool> seen(g.nodes.size(), false);
  std::vector<NodeRef> todo{g.root};
  std::size_t count = 0;
  while (!todo.empty()) {
    const NodeRef n = todo.back();
    todo.pop_back();
    if (seen[n]) continue;
    seen[n] = true;
    const auto& node = g.nodes[n];
    if (node.kind != NodeKind::Block && node.kind != NodeKind::ExtCon) continue;
    ++count;
    for (NodeRef f : node.fields) todo.push_back(f);
  }
  return count;
}

}  // namespace

TEST_CASE("encode: minimal graph is header plus one Imm record") {
  const ValueGraph g = graph(0, {N::make_imm(0)});
  Bytes b;
  b.u8('G').u8('V').u8('G').u8('1').u32(0).u32(1).u8(0).i64(0);
  CHECK(encode_graph(g) == b.s);
  CHECK(encode_graph(g).size() == 21);
  CHECK(decode_graph(b.s) == g);
}

TEST_CASE("encode: every node kind against hand-built bytes") {
  const ValueGraph g = graph(1, {N::make_imm(-2), N::make_block(7, {0, 2, 3}), N::make_bytes("hi"),
                                 N::make_float(1.0), N::make_ext("M.E", {0})});
  Bytes b;
  b.u8('G').u8('V').u8('G').u8('1').u32(1).u32(5);
  b.u8(0).i64(-2);
  b.u8(1).u32(7).u32(3).u32(0).u32(2).u32(3);
  b.u8(2).u32(2).u8('h').u8('i');
  b.u8(3).i64(0x3ff0000000000000);
  b.u8(4).u8(3).u8(0).u8('M').u8('.').u8('E').u32(1).u32(0);
  CHECK(encode_graph(g) == b.s);
  CHECK(decode_graph(b.s) == g);
}

TEST_CASE("golden fixtures decode to the expected graphs and re-encode byte for byte") {
  const std::vector<std::pair<std::string, ValueGraph>> cases = {
      {"int_list.gvg", graph(0, {N::make_block(0, {1, 2}), N::make_imm(1), N::make_block(0, {3, 4}),
                                 N::make_imm(2), N::make_imm(0)})},
      {"unit.gvg", graph(0, {N::make_imm(0)})},
      {"shared_pair.gvg",
       graph(0, {N::make_block(0, {1, 1}), N::make_block(0, {2, 3}), N::make_imm(7), N::make_imm(8)})},
      {"poly_cycle.gvg", graph(0, {N::make_block(1, {0, 0})})},
      {"mixed.gvg", graph(0, {N::make_block(0, {1, 2, 3}), N::make_float(-0.25), N::make_bytes("boom"),
                              N::make_ext("Demo.Exit", {4}), N::make_imm(-3)})},
  };
  for (const auto& [file, expected] : cases) {
    CAPTURE(file);
    const std::string bytes = slurp(file);
    const ValueGraph g = decode_graph(bytes);
    CHECK(g == expected);
    CHECK(encode_graph(g) == bytes);
    CHECK(encode_graph(expected) == bytes);
  }
}

TEST_CASE("golden [1;2] is the graph of the library list") {
  const ValueGraph g = graph_of_value(val::list({Value::imm(1), Value::imm(2)}));
  CHECK(g.nodes.size() == 5);
  CHECK(encode_graph(g) == slurp("int_list.gvg"));
}

TEST_CASE("sharing: two references to one block are one node") {
  const Value p = val::pair(Value::imm(7), Value::imm(8));
  const ValueGraph g = graph_of_value(val::pair(p, p));
  CHECK(g.nodes.size() == 4);
  CHECK(g.nodes[0].fields[0] == g.nodes[0].fields[1]);
  CHECK(encode_graph(g) == slurp("shared_pair.gvg"));

  const Type t = ty::pair(ty::pair(ty::int_t(), ty::int_t()), ty::pair(ty::int_t(), ty::int_t()));
  const Value back = deserialize(t, slurp("shared_pair.gvg"));
  CHECK(back.field(0).same(back.field(1)));
  CHECK(back.field(0).field(1).as_imm() == 8);
}

TEST_CASE("cyclic graph round-trips through the codec") {
  const ValueGraph g = graph(0, {N::make_block(1, {0, 0})});
  CHECK(decode_graph(encode_graph(g)) == g);
  const ValueGraph h = graph(1, {N::make_block(0, {1}), N::make_block(0, {0, 2}), N::make_imm(3)});
  CHECK(decode_graph(encode_graph(h)) == h);
}

TEST_CASE("decode: malformed input reports the offending offset") {
  const std::string good = encode_graph(graph(0, {N::make_block(0, {1}), N::make_imm(5)}));
  auto offset_of = [](std::string_view b) -> std::size_t {
    try {
      decode_graph(b);
    } catch (const MalformedBytes& e) {
      return e.offset();
    }
    FAIL("decoded");
    return 0;
  };
  std::string bad = good;
  bad[1] = 'X';
  CHECK(offset_of(bad) == 1);
  CHECK(offset_of(good.substr(0, 3)) == 0);
  // Reference to node 9 in a two-node graph; the reference sits at 12+1+4+4.
  bad = good;
  bad[21] = 9;
  CHECK(offset_of(bad) == 21);
  // Root out of range.
  bad = good;
  bad[4] = 2;
  CHECK(offset_of(bad) == 4);
  // Unknown kind byte of the second node at 12+13.
  bad = good;
  bad[25] = 7;
  CHECK(offset_of(bad) == 25);
  // Truncated immediate.
  CHECK(offset_of(good.substr(0, good.size() - 1)) == 26);
  CHECK(offset_of(good + "x") == good.size());
  // A count larger than the remaining bytes could hold.
  bad = good;
  bad[9] = 1;
  CHECK(offset_of(bad) == 8);
}

TEST_CASE("encode rejects in-memory nodes") {
  ValueGraph g = graph_of_value(demo::make_nat(3));
  CHECK(g.nodes[0].kind == NodeKind::Host);
  CHECK(kind_of([&] { encode_graph(g); }) == ErrorKind::NotSupported);
  CHECK(kind_of([&] { graph_of_value(Value::closure([](const Value& v) { return v; })); }) ==
        ErrorKind::NotSupported);
}

TEST_CASE("materialize: sharing is kept, cycles are refused") {
  const Value v = materialize(graph(0, {N::make_block(0, {1, 1}), N::make_bytes("x")}));
  CHECK(v.field(0).same(v.field(1)));
  CHECK(kind_of([] { materialize(graph(0, {N::make_block(1, {0, 0})})); }) == ErrorKind::CyclicValue);
}

TEST_CASE("convert: immediates, Nat and Btree") {
  const Type btree_int = demo::btree(ty::int_t());
  auto r = convert(Direction::From, ty::int_t(), graph(0, {N::make_imm(5)}));
  CHECK(r.graph == graph(0, {N::make_imm(5)}));

  try {
    convert(Direction::From, demo::nat(), graph(0, {N::make_imm(-1)}));
    FAIL("accepted");
  } catch (const RepresentationRejected& e) {
    CHECK(e.path() == "$");
  }

  // Node(Empty, 1, Empty): one block, its Imm 0 shared.
  const ValueGraph tree = graph(0, {N::make_block(0, {1, 2, 1}), N::make_imm(0), N::make_imm(1)});
  r = convert(Direction::From, btree_int, tree);
  CHECK(r.graph.nodes.size() == tree.nodes.size());
  CHECK(materialize(r.graph).field(1).as_imm() == 1);
  CHECK(equal(btree_int, materialize(r.graph), demo::node(demo::empty(), Value::imm(1), demo::empty())));

  try {
    convert(Direction::From, btree_int, graph(0, {N::make_block(0, {1, 1}), N::make_imm(0)}));
    FAIL("accepted");
  } catch (const Incompatible& e) {
    CHECK(e.path() == "$");
    CHECK(e.expected() == "Btree(Int)");
    CHECK(e.found() == "Block(tag 0, arity 2)");
  }
}

TEST_CASE("check: constant constructor range") {
  const Type btree_int = demo::btree(ty::int_t());
  CHECK_NOTHROW(check_compat(ty::bool_t(), graph(0, {N::make_imm(1)})));
  CHECK(kind_of([] { check_compat(ty::bool_t(), graph(0, {N::make_imm(3)})); }) == ErrorKind::Incompatible);
  CHECK(kind_of([] { check_compat(ty::bool_t(), graph(0, {N::make_imm(2)})); }) == ErrorKind::Incompatible);
  CHECK(kind_of([] { check_compat(ty::bool_t(), graph(0, {N::make_imm(-1)})); }) == ErrorKind::Incompatible);
  CHECK(kind_of([&] { check_compat(btree_int, graph(0, {N::make_imm(1)})); }) == ErrorKind::Incompatible);
  CHECK(kind_of([] { check_compat(ty::char_t(), graph(0, {N::make_imm(256)})); }) == ErrorKind::Incompatible);
}

TEST_CASE("check: Incompatible names the path to the bad node") {
  // [1; "x"] read as int list.
  const ValueGraph g = graph(0, {N::make_block(0, {1, 2}), N::make_imm(1), N::make_block(0, {3, 4}),
                                 N::make_bytes("x"), N::make_imm(0)});
  try {
    check_compat(ty::list(ty::int_t()), g);
    FAIL("accepted");
  } catch (const Incompatible& e) {
    CHECK(e.path() == "$.::[1].::[0]");
    CHECK(e.expected() == "Int");
    CHECK(e.found() == "Bytes(length 1)");
  }
  try {
    check_compat(ty::list(ty::string_t()), decode_graph(slurp("int_list.gvg")));
    FAIL("accepted");
  } catch (const Incompatible& e) {
    CHECK(e.path() == "$.::[0]");
    CHECK(e.expected() == "String");
    CHECK(e.found() == "Imm 1");
  }
  CHECK_NOTHROW(check_compat(ty::list(ty::int_t()), decode_graph(slurp("int_list.gvg"))));
}

TEST_CASE("check: records, synonyms and extensible constructors") {
  const Type rt = demo::rtree(ty::int_t());
  CHECK_NOTHROW(check_compat(rt, graph_of_value(demo::rnode(Value::imm(1), {demo::rnode(Value::imm(2), {})}))));
  CHECK_NOTHROW(check_compat(demo::score(), graph(0, {N::make_imm(4)})));
  CHECK_NOTHROW(check_compat(ty::list(demo::score()),
                             graph(0, {N::make_block(0, {1, 1}), N::make_imm(0)})));

  const ValueGraph mixed = decode_graph(slurp("mixed.gvg"));
  const Type t = ty::triple(ty::float_t(), ty::string_t(), demo::exn());
  const auto r = convert(Direction::From, t, mixed);
  const Value v = materialize(r.graph);
  CHECK(equal(demo::exn(), v.field(2), demo::exit_code(-3)));
  CHECK(v.field(2).ext_identity() != nullptr);

  ValueGraph unknown = mixed;
  unknown.nodes[3].bytes = "Demo.Nope";
  CHECK(kind_of([&] { check_compat(t, unknown); }) == ErrorKind::UnknownConstructor);
  ValueGraph arity = mixed;
  arity.nodes[3].fields.push_back(4);
  CHECK(kind_of([&] { check_compat(t, arity); }) == ErrorKind::Incompatible);
  ValueGraph block_for_ext = mixed;
  block_for_ext.nodes[3] = N::make_block(0, {4});
  CHECK(kind_of([&] { check_compat(t, block_for_ext); }) == ErrorKind::Incompatible);
}

TEST_CASE("check: the wildcard accepts no value") {
  CHECK(kind_of([] { check_compat(ty::list(Type::any()), graph(0, {N::make_block(0, {1, 2}), N::make_imm(1), N::make_imm(0)})); }) ==
        ErrorKind::Incompatible);
  CHECK_NOTHROW(check_compat(ty::list(Type::any()), graph(0, {N::make_imm(0)})));
}

TEST_CASE("check: a shared node is descended once per pattern") {
  // (p, p) with p = (1, 2).
  const ValueGraph g = decode_graph(slurp("shared_pair.gvg"));
  const Type ii = ty::pair(ty::int_t(), ty::int_t());
  for (Strategy s : {Strategy::Recursive, Strategy::Topological}) {
    const ConvertStats st = check_compat(ty::pair(ii, ii), g, s);
    CHECK(st.descents == 2);
    CHECK(st.visits == 3);
    CHECK(st.memo_hits == 1);
    CHECK(st.pattern_updates == 0);
  }
  // Shared at two types: generalises to Pair(Int, _), whose second
  // component then holds a value at the wildcard.
  const Type is = ty::pair(ty::int_t(), ty::string_t());
  CHECK(kind_of([&] { check_compat(ty::pair(ii, is), g); }) == ErrorKind::Incompatible);
}

TEST_CASE("check: self-referential polymorphic block reaches a fixed point") {
  const ValueGraph g = decode_graph(slurp("poly_cycle.gvg"));
  for (Strategy s : {Strategy::Recursive, Strategy::Topological}) {
    const auto t0 = std::chrono::steady_clock::now();
    const ConvertResult r = convert(Direction::From, demo::poly(ty::int_t()), g, s);
    CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(1));
    const NodeTrace& tr = r.traces.at(0);
    CHECK(tr.first == demo::poly(ty::int_t()));
    CHECK(tr.last == demo::poly(Type::any()));
    CHECK(tr.updates == 1);
    CHECK(tr.updates <= tr.first.concrete_size());
    CHECK(r.stats.descents == 2);
  }
  // Checked at the general pattern straight away: one descent.
  const ConvertStats st = check_compat(demo::poly(Type::any()), g);
  CHECK(st.descents == 1);
  CHECK(st.pattern_updates == 0);
  // The host layer has no cyclic values.
  CHECK(kind_of([] { deserialize(demo::poly(ty::int_t()), slurp("poly_cycle.gvg")); }) == ErrorKind::CyclicValue);
}

TEST_CASE("check: deeper polymorphic cycles stay within the update bound") {
  // x = Node (Node (x, y), y) with y = Node (Leaf 1, y)
  const ValueGraph g = graph(0, {N::make_block(1, {1, 2}), N::make_block(1, {0, 2}),
                                 N::make_block(1, {3, 2}), N::make_block(0, {4}), N::make_imm(1)});
  for (Strategy s : {Strategy::Recursive, Strategy::Topological}) {
    // Leaf 1 ends up at a generalised type and holds an Int, which is fine;
    // the Int field of Leaf is not parameterised.
    const ConvertResult r = convert(Direction::From, demo::poly(ty::int_t()), g, s);
    for (const auto& [n, tr] : r.traces) CHECK(tr.updates <= tr.first.concrete_size());
  }
}

TEST_CASE("strategies agree on random graphs") {
  std::mt19937_64 rng(7);
  const std::vector<Type> types = {ty::list(ty::int_t()),      ty::list(ty::list(ty::bool_t())),
                                   demo::poly(ty::int_t()),    demo::btree(ty::int_t()),
                                   ty::pair(ty::int_t(), ty::int_t()), ty::option(ty::list(ty::string_t())),
                                   demo::expr()};
  int accepted = 0;
  for (int i = 0; i < 3000; ++i) {
    const bool acyclic = i % 2 == 0;
    const ValueGraph g = random_graph(rng, 2 + rng() % 8, acyclic);
    const Type& t = types[rng() % types.size()];
    std::optional<ConvertResult> a, b;
    try {
      a = convert(Direction::From, t, g, Strategy::Recursive);
    } catch (const Error&) {
    }
    try {
      b = convert(Direction::From, t, g, Strategy::Topological);
    } catch (const Error&) {
    }
    REQUIRE(a.has_value() == b.has_value());
    if (!a) continue;
    ++accepted;
    CHECK(a->graph == b->graph);
    REQUIRE(a->traces.size() == b->traces.size());
    for (const auto& [n, tr] : a->traces) CHECK(tr.last == b->traces.at(n).last);
    if (acyclic) CHECK(b->stats.descents == tracked_reachable(g));
    CHECK(b->stats.descents <= a->stats.descents);
  }
  CHECK(accepted > 100);
}

TEST_CASE("identity conversion keeps the node count") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const ValueGraph g = graph_of_value(testsupport::random_expr(rng, 1 + i % 30));
    const ConvertResult r = convert(Direction::From, demo::expr(), g);
    CHECK(r.graph.nodes.size() == g.nodes.size());
  }
}

TEST_CASE("serialize/deserialize round-trip on random exprs") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    const Value e = testsupport::random_expr(rng, 1 + i % 40);
    const Value back = deserialize(demo::expr(), serialize(demo::expr(), e));
    REQUIRE(same_layout(back, e));
    CHECK(equal(demo::expr(), back, e));
  }
}

TEST_CASE("round-trip on random values of registered types") {
  std::mt19937_64 rng(5);
  for (const Type& t : sample_types()) {
    CAPTURE(t.to_string());
    for (int i = 0; i < 100; ++i) {
      const Value v = random_at(rng, t, 6);
      CHECK(equal(t, deserialize(t, serialize(t, v)), v));
    }
  }
}

TEST_CASE("abstract types travel as their public representation") {
  const std::string b = serialize(demo::nat(), demo::make_nat(3));
  CHECK(decode_graph(b) == graph(0, {N::make_imm(3)}));
  CHECK(demo::nat_value(deserialize(demo::nat(), encode_graph(graph(0, {N::make_imm(7)})))) == 7);

  const std::string r = serialize(demo::range(), demo::make_range(2, 5));
  CHECK(decode_graph(r) == graph(0, {N::make_block(0, {1, 2}), N::make_imm(2), N::make_imm(5)}));
  CHECK(demo::range_bounds(deserialize(demo::range(), r)) == std::pair<std::int64_t, std::int64_t>{2, 5});
  CHECK(kind_of([] {
          deserialize(demo::range(), encode_graph(graph(0, {N::make_block(0, {1, 2}), N::make_imm(6),
                                                                N::make_imm(5)})));
        }) == ErrorKind::RepresentationRejected);

  const std::string s = serialize(demo::symbol(), demo::make_symbol("abc"));
  CHECK(decode_graph(s) == graph(0, {N::make_bytes("abc")}));

  // A shared abstract value stays shared on both sides.
  const Value n = demo::make_nat(4);
  const Type nn = ty::pair(demo::nat(), demo::nat());
  const Value back = deserialize(nn, serialize(nn, val::pair(n, n)));
  CHECK(back.field(0).same(back.field(1)));

  // Nested path of a rejected representation.
  try {
    deserialize(ty::list(demo::nat()),
                encode_graph(graph(0, {N::make_block(0, {1, 2}), N::make_imm(-4), N::make_imm(0)})));
    FAIL("accepted");
  } catch (const RepresentationRejected& e) {
    CHECK(e.path() == "$.::[0]");
  }
  // A host value where the representation is expected.
  CHECK(kind_of([] { convert(Direction::From, demo::nat(), graph_of_value(demo::make_nat(1))); }) ==
        ErrorKind::Incompatible);
  CHECK(kind_of([] { convert(Direction::To, ty::int_t(), graph_of_value(demo::make_nat(1))); }) ==
        ErrorKind::Incompatible);
  CHECK(kind_of([] { serialize(demo::nat(), demo::make_symbol("x")); }) == ErrorKind::Incompatible);
}

TEST_CASE("extensible values are reinstated from the registry") {
  for (const Value& x : {demo::failure("boom"), demo::exit_code(2), demo::not_found()}) {
    const std::string b = serialize(demo::exn(), x);
    const ValueGraph g = decode_graph(b);
    CHECK(g.nodes[g.root].identity == nullptr);
    const Value back = deserialize(demo::exn(), b);
    CHECK(back.ext_identity() == x.ext_identity());
    CHECK(equal(demo::exn(), back, x));
  }
}

TEST_CASE("types without a descriptor") {
  const Value f = Value::closure([](const Value& v) { return v; });
  CHECK(kind_of([&] { serialize(ty::fun(ty::int_t(), ty::int_t()), f); }) == ErrorKind::NoDescriptor);
  CHECK(kind_of([&] { serialize(ty::list(ty::fun(ty::int_t(), ty::int_t())), val::list({f})); }) ==
        ErrorKind::NoDescriptor);
  CHECK(kind_of([] { serialize(demo::handle(), demo::make_handle(1)); }) == ErrorKind::NoDescriptor);
  CHECK(kind_of([] { deserialize(demo::handle(), slurp("unit.gvg")); }) == ErrorKind::NoDescriptor);
}

TEST_CASE("deserialize at the wrong type fails cleanly") {
  const std::string b = serialize(ty::list(ty::int_t()), val::list({Value::imm(1), Value::imm(2)}));
  CHECK(kind_of([&] { deserialize(ty::list(ty::string_t()), b); }) == ErrorKind::Incompatible);
  CHECK(kind_of([&] { deserialize(demo::expr(), b); }) == ErrorKind::Incompatible);
  CHECK(kind_of([&] { deserialize(ty::float_t(), b); }) == ErrorKind::Incompatible);
}

TEST_CASE("random bytes never crash the deserializer") {
  std::mt19937_64 rng(99);
  const std::vector<Type> types = sample_types();
  std::vector<std::string> seeds;
  for (const Type& t : types) seeds.push_back(serialize(t, random_at(rng, t, 4)));
  int decoded = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string b;
    if (i % 2 == 0) {
      b.resize(rng() % 64);
      for (char& c : b) c = static_cast<char>(rng());
      if (i % 4 == 0 && b.size() >= 4) b.replace(0, 4, "GVG1");
    } else {
      b = seeds[rng() % seeds.size()];
      const int flips = 1 + static_cast<int>(rng() % 3);
      for (int k = 0; k < flips && !b.empty(); ++k) b[rng() % b.size()] = static_cast<char>(rng());
    }
    const Type& t = types[rng() % types.size()];
    try {
      deserialize(t, b);
      ++decoded;
    } catch (const Error&) {
    }
  }
  CHECK(decoded > 0);
}

TEST_CASE("deep lists") {
  std::vector<Value> xs;
  for (int i = 0; i < 100000; ++i) xs.push_back(Value::imm(i));
  const Value big = val::list(xs);
  const Type t = ty::list(ty::int_t());
  const Value back = deserialize(t, serialize(t, big));
  Value cur = back;
  std::int64_t k = 0;
  while (cur.is(ValueKind::Block)) {
    REQUIRE(cur.field(0).as_imm() == k++);
    cur = cur.field(1);
  }
  CHECK(k == 100000);
  CHECK(kind_of([&] { convert(Direction::To, t, graph_of_value(big), Strategy::Recursive); }) ==
        ErrorKind::DepthExceeded);

  // A long cycle is handled without recursion.
  ValueGraph ring;
  const NodeRef n = 50000;
  for (NodeRef i = 0; i < n; ++i) ring.nodes.push_back(N::make_block(0, {n, (i + 1) % n}));
  ring.nodes.push_back(N::make_imm(1));
  CHECK(check_compat(t, ring).descents == n);
  CHECK(kind_of([&] { materialize(convert(Direction::From, t, ring).graph); }) == ErrorKind::CyclicValue);
}
