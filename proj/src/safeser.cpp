#include "reflectix/safeser.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <limits>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <variant>

#include "reflectix/desc.hpp"
#include "reflectix/error.hpp"

namespace reflectix {

ValueNode ValueNode::make_imm(std::int64_t i) {
  ValueNode n;
  n.kind = NodeKind::Imm;
  n.imm = i;
  return n;
}

ValueNode ValueNode::make_block(std::uint32_t tag, std::vector<NodeRef> fields) {
  ValueNode n;
  n.kind = NodeKind::Block;
  n.tag = tag;
  n.fields = std::move(fields);
  return n;
}

ValueNode ValueNode::make_bytes(std::string data) {
  ValueNode n;
  n.kind = NodeKind::Bytes;
  n.bytes = std::move(data);
  return n;
}

ValueNode ValueNode::make_float(double d) {
  ValueNode n;
  n.kind = NodeKind::Float;
  n.real = d;
  return n;
}

ValueNode ValueNode::make_ext(std::string name, std::vector<NodeRef> fields) {
  ValueNode n;
  n.kind = NodeKind::ExtCon;
  n.bytes = std::move(name);
  n.fields = std::move(fields);
  return n;
}

bool operator==(const ValueNode& a, const ValueNode& b) {
  return a.kind == b.kind && a.imm == b.imm && a.tag == b.tag &&
         std::bit_cast<std::uint64_t>(a.real) == std::bit_cast<std::uint64_t>(b.real) &&
         a.bytes == b.bytes && a.fields == b.fields && a.identity == b.identity &&
         (a.kind != NodeKind::Host || a.host.same(b.host));
}

// ---------------------------------------------------------------------------
// Wire format

namespace {

constexpr char kMagic[4] = {'G', 'V', 'G', '1'};

class Writer {
 public:
  void u8(std::uint8_t x) { out_.push_back(static_cast<char>(x)); }
  void u16(std::uint16_t x) { le(x, 2); }
  void u32(std::uint32_t x) { le(x, 4); }
  void u64(std::uint64_t x) { le(x, 8); }
  void raw(std::string_view s) { out_.append(s); }
  std::string take() { return std::move(out_); }

 private:
  void le(std::uint64_t x, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view b) : b_(b) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return b_.size() - pos_; }

  std::uint8_t u8(const char* what) { return static_cast<std::uint8_t>(le(1, what)); }
  std::uint16_t u16(const char* what) { return static_cast<std::uint16_t>(le(2, what)); }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(le(4, what)); }
  std::uint64_t u64(const char* what) { return le(8, what); }
  std::string_view raw(std::size_t n, const char* what) {
    need(n, what);
    auto s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n, const char* what) {
    if (remaining() < n) throw MalformedBytes(pos_, std::string("truncated ") + what);
  }
  std::uint64_t le(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t x = 0;
    for (int i = 0; i < n; ++i) {
      x |= static_cast<std::uint64_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return x;
  }

  std::string_view b_;
  std::size_t pos_ = 0;
};

void write_refs(Writer& w, const std::vector<NodeRef>& fields) {
  if (fields.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorKind::NotSupported, "node arity exceeds 2^32-1");
  }
  w.u32(static_cast<std::uint32_t>(fields.size()));
  for (NodeRef r : fields) w.u32(r);
}

std::vector<NodeRef> read_refs(Reader& r, std::uint32_t count) {
  const std::size_t arity_at = r.pos();
  const std::uint32_t arity = r.u32("arity");
  if (arity > r.remaining() / 4) throw MalformedBytes(arity_at, "arity larger than the input");
  std::vector<NodeRef> fields;
  fields.reserve(arity);
  for (std::uint32_t i = 0; i < arity; ++i) {
    const std::size_t at = r.pos();
    const std::uint32_t ref = r.u32("reference");
    if (ref >= count) {
      throw MalformedBytes(at, "reference " + std::to_string(ref) + " out of range");
    }
    fields.push_back(ref);
  }
  return fields;
}

}  // namespace

std::string encode_graph(const ValueGraph& g) {
  if (g.nodes.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorKind::NotSupported, "graph has more than 2^32-1 nodes");
  }
  Writer w;
  w.raw(std::string_view(kMagic, 4));
  w.u32(g.root);
  w.u32(static_cast<std::uint32_t>(g.nodes.size()));
  for (const ValueNode& n : g.nodes) {
    switch (n.kind) {
      case NodeKind::Imm:
        w.u8(0);
        w.u64(static_cast<std::uint64_t>(n.imm));
        break;
      case NodeKind::Block:
        w.u8(1);
        w.u32(n.tag);
        write_refs(w, n.fields);
        break;
      case NodeKind::Bytes:
        if (n.bytes.size() > std::numeric_limits<std::uint32_t>::max()) {
          throw Error(ErrorKind::NotSupported, "byte string longer than 2^32-1");
        }
        w.u8(2);
        w.u32(static_cast<std::uint32_t>(n.bytes.size()));
        w.raw(n.bytes);
        break;
      case NodeKind::Float:
        w.u8(3);
        w.u64(std::bit_cast<std::uint64_t>(n.real));
        break;
      case NodeKind::ExtCon:
        if (n.bytes.size() > std::numeric_limits<std::uint16_t>::max()) {
          throw Error(ErrorKind::NotSupported, "constructor name longer than 65535 bytes");
        }
        w.u8(4);
        w.u16(static_cast<std::uint16_t>(n.bytes.size()));
        w.raw(n.bytes);
        write_refs(w, n.fields);
        break;
      case NodeKind::Host:
      case NodeKind::Pending:
        throw Error(ErrorKind::NotSupported, "in-memory node cannot be encoded");
    }
  }
  return w.take();
}

ValueGraph decode_graph(std::string_view bytes) {
  Reader r(bytes);
  const std::string_view magic = r.raw(4, "header");
  for (std::size_t i = 0; i < 4; ++i) {
    if (magic[i] != kMagic[i]) throw MalformedBytes(i, "bad magic");
  }
  ValueGraph g;
  g.root = r.u32("header");
  const std::size_t count_at = r.pos();
  const std::uint32_t count = r.u32("header");
  // Every node takes at least five bytes.
  if (count > r.remaining() / 5) throw MalformedBytes(count_at, "node count larger than the input");
  if (g.root >= count) throw MalformedBytes(4, "root index out of range");
  g.nodes.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t at = r.pos();
    switch (r.u8("node")) {
      case 0:
        g.nodes.push_back(ValueNode::make_imm(static_cast<std::int64_t>(r.u64("immediate"))));
        break;
      case 1: {
        const std::uint32_t tag = r.u32("block tag");
        g.nodes.push_back(ValueNode::make_block(tag, read_refs(r, count)));
        break;
      }
      case 2: {
        const std::uint32_t len = r.u32("byte length");
        g.nodes.push_back(ValueNode::make_bytes(std::string(r.raw(len, "byte string"))));
        break;
      }
      case 3:
        g.nodes.push_back(ValueNode::make_float(std::bit_cast<double>(r.u64("float"))));
        break;
      case 4: {
        const std::uint16_t len = r.u16("name length");
        std::string name(r.raw(len, "constructor name"));
        g.nodes.push_back(ValueNode::make_ext(std::move(name), read_refs(r, count)));
        break;
      }
      default:
        throw MalformedBytes(at, "unknown node kind");
    }
  }
  if (r.remaining() != 0) throw MalformedBytes(r.pos(), "trailing bytes");
  return g;
}

// ---------------------------------------------------------------------------
// Library values <-> graphs

namespace {

// Closures become Host nodes when `closures_as_host`; the checker then
// reports the function type as having no descriptor.
ValueGraph graph_of(const Value& v, bool closures_as_host) {
  std::unordered_map<const void*, NodeRef> index;
  std::vector<Value> order;
  std::vector<Value> todo{v};
  while (!todo.empty()) {
    Value x = std::move(todo.back());
    todo.pop_back();
    if (index.contains(x.address())) continue;
    if (x.is(ValueKind::Closure) && !closures_as_host) {
      throw Error(ErrorKind::NotSupported, "functions cannot be serialized");
    }
    index.emplace(x.address(), static_cast<NodeRef>(order.size()));
    if (x.is(ValueKind::Block) || x.is(ValueKind::ExtCon)) {
      auto fs = x.fields();
      for (auto it = fs.rbegin(); it != fs.rend(); ++it) todo.push_back(*it);
    }
    order.push_back(std::move(x));
  }

  ValueGraph g;
  g.nodes.reserve(order.size());
  auto refs = [&](const Value& x) {
    std::vector<NodeRef> out;
    out.reserve(x.fields().size());
    for (const Value& f : x.fields()) out.push_back(index.at(f.address()));
    return out;
  };
  for (const Value& x : order) {
    switch (x.kind()) {
      case ValueKind::Imm: g.nodes.push_back(ValueNode::make_imm(x.as_imm())); break;
      case ValueKind::Block: g.nodes.push_back(ValueNode::make_block(x.tag(), refs(x))); break;
      case ValueKind::Bytes: g.nodes.push_back(ValueNode::make_bytes(std::string(x.as_bytes()))); break;
      case ValueKind::Float: g.nodes.push_back(ValueNode::make_float(x.as_float())); break;
      case ValueKind::ExtCon: {
        ValueNode n = ValueNode::make_ext(std::string(x.ext_name()), refs(x));
        n.identity = x.ext_identity();
        g.nodes.push_back(std::move(n));
        break;
      }
      case ValueKind::Custom:
      case ValueKind::Closure: {
        ValueNode n;
        n.kind = NodeKind::Host;
        n.host = x;
        g.nodes.push_back(std::move(n));
        break;
      }
    }
  }
  g.root = 0;
  return g;
}

}  // namespace

ValueGraph graph_of_value(const Value& v) { return graph_of(v, false); }

namespace {

void check_refs(const ValueGraph& g) {
  if (g.root >= g.nodes.size()) throw Error(ErrorKind::MalformedValue, "root index out of range");
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    for (NodeRef r : g.nodes[i].fields) {
      if (r >= g.nodes.size()) {
        throw Error(ErrorKind::MalformedValue,
                    "node " + std::to_string(i) + " references missing node " + std::to_string(r));
      }
    }
  }
}

// Turns graph nodes into library values, remembering what it built so
// repeated requests on a growing graph stay linear.
class Materializer {
 public:
  explicit Materializer(const std::vector<ValueNode>& nodes) : nodes_(nodes) {}

  Value operator()(NodeRef root) {
    enum : std::uint8_t { kNew, kOpen };
    std::vector<std::pair<NodeRef, bool>> stack{{root, false}};
    std::unordered_map<NodeRef, std::uint8_t> state;
    while (!stack.empty()) {
      auto [n, children_done] = stack.back();
      if (built_.contains(n)) {
        stack.pop_back();
        continue;
      }
      const ValueNode& node = nodes_[n];
      if (node.kind == NodeKind::Pending) {
        throw Error(ErrorKind::CyclicValue, "value depends on itself through node " +
                                                std::to_string(n));
      }
      if (!children_done) {
        auto [it, fresh] = state.emplace(n, kOpen);
        if (!fresh) {
          throw Error(ErrorKind::CyclicValue,
                      "graph has a cycle through node " + std::to_string(n));
        }
        stack.back().second = true;
        for (auto f = node.fields.rbegin(); f != node.fields.rend(); ++f) {
          if (!built_.contains(*f)) stack.emplace_back(*f, false);
        }
        continue;
      }
      stack.pop_back();
      built_.emplace(n, build(node));
    }
    return built_.at(root);
  }

 private:
  Value build(const ValueNode& node) const {
    std::vector<Value> fs;
    fs.reserve(node.fields.size());
    for (NodeRef f : node.fields) fs.push_back(built_.at(f));
    switch (node.kind) {
      case NodeKind::Imm: return Value::imm(node.imm);
      case NodeKind::Block: return Value::block(node.tag, std::move(fs));
      case NodeKind::Bytes: return Value::bytes(node.bytes);
      case NodeKind::Float: return Value::real(node.real);
      case NodeKind::ExtCon: return Value::ext_con(node.identity, node.bytes, std::move(fs));
      case NodeKind::Host: return node.host;
      case NodeKind::Pending: break;
    }
    throw Error(ErrorKind::MalformedValue, "pending node");
  }

  const std::vector<ValueNode>& nodes_;
  std::unordered_map<NodeRef, Value> built_;
};

}  // namespace

Value materialize(const ValueGraph& g) {
  check_refs(g);
  for (const auto& n : g.nodes) {
    if (n.kind == NodeKind::Pending) throw Error(ErrorKind::MalformedValue, "pending node in graph");
  }
  return Materializer(g.nodes)(g.root);
}

// ---------------------------------------------------------------------------
// Checking and conversion

namespace {

constexpr NodeRef kNone = std::numeric_limits<NodeRef>::max();

bool tracked(const ValueNode& n) { return n.kind == NodeKind::Block || n.kind == NodeKind::ExtCon; }

std::string describe(const ValueNode& n) {
  switch (n.kind) {
    case NodeKind::Imm: return "Imm " + std::to_string(n.imm);
    case NodeKind::Block:
      return "Block(tag " + std::to_string(n.tag) + ", arity " + std::to_string(n.fields.size()) + ")";
    case NodeKind::Bytes: return "Bytes(length " + std::to_string(n.bytes.size()) + ")";
    case NodeKind::Float: return "Float";
    case NodeKind::ExtCon: return "ExtCon " + n.bytes + "/" + std::to_string(n.fields.size());
    case NodeKind::Host:
      if (n.host.is(ValueKind::Closure)) return "function";
      return "host value " + std::string(n.host.custom_identifier());
    case NodeKind::Pending: return "pending node";
  }
  return "?";
}

struct AbstractStep {
  Type ty;
  Representation rep;
  Type repr_ty;  // normalised
};

// A type with its synonyms and representations peeled off.
struct Resolved {
  std::vector<AbstractStep> chain;  // outermost first
  Type structural;                  // Any, a scalar or a structural type
  DescRef desc;
  std::optional<ScalarKind> scalar;
};

struct Expansion {
  std::vector<Type> field_types;
  std::vector<std::string> labels;
  const Constructor* ext = nullptr;
};

struct Via {
  NodeRef parent = kNone;
  std::string label;
};

struct AbsKey {
  NodeRef node;
  Type ty;
  bool operator==(const AbsKey&) const = default;
};

struct AbsKeyHash {
  std::size_t operator()(const AbsKey& k) const noexcept {
    return k.ty.hash() * 31 + std::hash<NodeRef>{}(k.node);
  }
};

class Converter {
 public:
  Converter(Direction d, const ValueGraph& g, Strategy s) : dir_(d), g_(g), strategy_(s) {
    const std::size_t n = g.nodes.size();
    traces_.resize(n);
    checked_.resize(n);
    via_.resize(n);
  }

  ConvertResult run(const Type& t) {
    check_refs(g_);
    const Type root_ty = normalize(t);
    check_phase(root_ty);
    ConvertResult r;
    r.graph = build_phase(root_ty);
    r.stats = stats_;
    for (NodeRef i = 0; i < traces_.size(); ++i) {
      if (traces_[i]) r.traces.emplace(i, *traces_[i]);
    }
    return r;
  }

 private:
  // ---- types

  Type normalize(const Type& t) {
    if (t.is_any()) return t;
    if (auto it = normal_.find(t); it != normal_.end()) return it->second;
    Type out;
    const DescRef d = view_desc(t);
    if (const auto* syn = std::get_if<SynonymDesc>(d.get())) {
      out = normalize(syn->target);
    } else {
      std::vector<Type> args;
      args.reserve(t.args().size());
      for (const Type& a : t.args()) args.push_back(normalize(a));
      out = Type::apply(t.head(), std::move(args));
    }
    normal_.emplace(t, out);
    return out;
  }

  // `t` is normalised.
  const Resolved& resolve(const Type& t) {
    if (auto it = resolved_.find(t); it != resolved_.end()) return it->second;
    Resolved r;
    Type cur = t;
    for (;;) {
      if (r.chain.size() > 64) {
        throw Error(ErrorKind::NoDescriptor, "representation chain of " + t.to_string() + " too long");
      }
      if (cur.is_any()) break;
      if ((r.scalar = scalar_kind(cur))) break;
      r.desc = view_desc(cur);
      if (std::holds_alternative<AbstractDesc>(*r.desc) ||
          std::holds_alternative<OpaqueDesc>(*r.desc)) {
        auto rep = find_repr(cur);
        if (!rep) throw Error(ErrorKind::NoDescriptor, cur.to_string() + " has no representation");
        Type next = normalize(rep->repr_ty);
        r.chain.push_back(AbstractStep{cur, std::move(*rep), next});
        cur = std::move(next);
        continue;
      }
      if (std::holds_alternative<NoDesc>(*r.desc)) {
        throw Error(ErrorKind::NoDescriptor, cur.to_string() + " has no descriptor");
      }
      break;
    }
    r.structural = cur;
    return resolved_.emplace(t, std::move(r)).first->second;
  }

  // ---- paths

  std::string path_of(NodeRef n) const {
    std::vector<const std::string*> parts;
    std::size_t guard = 0;
    for (NodeRef cur = n; cur != kNone && guard <= via_.size(); ++guard) {
      parts.push_back(&via_[cur].label);
      cur = via_[cur].parent;
    }
    std::string out = "$";
    constexpr std::size_t kHead = 8, kTail = 24;
    const std::size_t k = parts.size();
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t from_top = k - 1 - i;
      if (k > kHead + kTail && i == kHead) {
        out += "...(" + std::to_string(k - kHead - kTail) + " more)";
      }
      if (k > kHead + kTail && i >= kHead && i < k - kTail) continue;
      out += *parts[from_top];
    }
    return out;
  }

  std::string child_path(NodeRef parent, const std::string& label) const {
    return parent == kNone ? "$" : path_of(parent) + label;
  }

  // ---- checking

  [[noreturn]] void incompatible(const std::string& path, const Type& expected,
                                 const ValueNode& found) const {
    throw Incompatible(path, expected.to_string(), describe(found));
  }

  // Leaf nodes are checked per reference.
  void check_leaf(NodeRef c, const Type& declared, const Resolved& r, NodeRef parent,
                  const std::string& label) {
    const ValueNode& n = g_.nodes[c];
    const auto path = [&] { return child_path(parent, label); };
    if (n.kind == NodeKind::Pending) incompatible(path(), declared, n);
    if (dir_ == Direction::To && !r.chain.empty()) {
      if (n.kind != NodeKind::Host) incompatible(path(), declared, n);
      return;
    }
    if (n.kind == NodeKind::Host) incompatible(path(), declared, n);
    bool ok = false;
    if (r.structural.is_any()) {
      ok = false;
    } else if (r.scalar) {
      switch (*r.scalar) {
        case ScalarKind::Int: ok = n.kind == NodeKind::Imm; break;
        case ScalarKind::Char: ok = n.kind == NodeKind::Imm && n.imm >= 0 && n.imm <= 255; break;
        case ScalarKind::Float: ok = n.kind == NodeKind::Float; break;
      }
    } else if (const auto* v = std::get_if<VariantDesc>(r.desc.get())) {
      ok = n.kind == NodeKind::Imm && n.imm >= 0 &&
           static_cast<std::uint64_t>(n.imm) < v->cons.cst_len();
    } else if (const auto* a = std::get_if<ArrayDesc>(r.desc.get())) {
      ok = a->byte_storage && n.kind == NodeKind::Bytes;
    }
    if (!ok) incompatible(path(), declared, n);
  }

  // Field types of tracked node n at structural pattern p.
  Expansion expand(NodeRef n, const Type& p) {
    const ValueNode& node = g_.nodes[n];
    Expansion e;
    auto fail = [&]() { incompatible(path_of(n), p, node); };
    if (p.is_any() || scalar_kind(p)) fail();
    const DescRef d = view_desc(p);
    const auto positional = [&](const FieldList& fs, const std::string& prefix) {
      for (std::size_t i = 0; i < fs.size(); ++i) {
        e.field_types.push_back(normalize(fs[i].ty));
        e.labels.push_back(fs[i].name.empty() ? prefix + "[" + std::to_string(i) + "]"
                                              : prefix + "." + fs[i].name);
      }
    };
    if (const auto* v = std::get_if<VariantDesc>(d.get())) {
      if (node.kind != NodeKind::Block || node.tag >= v->cons.ncst_len()) fail();
      const Constructor& con = *v->cons.ncst_get(node.tag);
      if (con.arity() != node.fields.size()) fail();
      positional(con.args(), "." + con.name());
    } else if (const auto* rec = std::get_if<RecordDesc>(d.get())) {
      if (node.kind != NodeKind::Block || node.tag != 0 || node.fields.size() != rec->fields.size()) {
        fail();
      }
      positional(rec->fields, "");
    } else if (const auto* prod = std::get_if<ProductDesc>(d.get())) {
      if (node.kind != NodeKind::Block || node.tag != 0 || node.fields.size() != prod->shape.size()) {
        fail();
      }
      for (std::size_t i = 0; i < prod->shape.size(); ++i) {
        e.field_types.push_back(normalize(prod->shape[i]));
        e.labels.push_back("[" + std::to_string(i) + "]");
      }
    } else if (const auto* arr = std::get_if<ArrayDesc>(d.get())) {
      if (arr->byte_storage || node.kind != NodeKind::Block || node.tag != 0) fail();
      const Type elem = normalize(arr->elem);
      for (std::size_t i = 0; i < node.fields.size(); ++i) {
        e.field_types.push_back(elem);
        e.labels.push_back("[" + std::to_string(i) + "]");
      }
    } else if (const auto* ext = std::get_if<std::shared_ptr<ExtensibleDesc>>(d.get())) {
      if (node.kind != NodeKind::ExtCon) fail();
      auto con = (*ext)->find(node.bytes);
      if (!con) {
        throw Error(ErrorKind::UnknownConstructor,
                    "at " + path_of(n) + ": " + node.bytes + " is not a constructor of " + p.to_string());
      }
      if ((*con)->arity() != node.fields.size()) fail();
      positional((*con)->args(), "." + (*con)->name());
      e.ext = con->get();
    } else {
      fail();
    }
    return e;
  }

  // Records that n is expected at structural pattern s. True when n's
  // pattern was created or generalised.
  bool arrive(NodeRef n, const Type& s, NodeRef parent, const std::string& label) {
    ++stats_.visits;
    auto& tr = traces_[n];
    if (!tr) {
      tr = NodeTrace{s, s, 0};
      via_[n] = Via{parent, label};
      return true;
    }
    Type p = anti_unify(tr->last, s);
    if (p == tr->last) {
      ++stats_.memo_hits;
      return false;
    }
    tr->last = std::move(p);
    ++tr->updates;
    ++stats_.pattern_updates;
    if (tr->updates > tr->first.concrete_size()) {
      throw std::logic_error("pattern of node " + std::to_string(n) +
                             " generalised more often than its size allows");
    }
    return true;
  }

  bool settled(NodeRef n) const { return checked_[n] && *checked_[n] == traces_[n]->last; }

  // Expands n at its current pattern; `on_tracked(child)` runs after a
  // tracked child has been reached.
  template <class F>
  void descend(NodeRef n, F&& on_tracked) {
    checked_[n] = traces_[n]->last;
    ++stats_.descents;
    const Expansion e = expand(n, traces_[n]->last);
    const auto& fields = g_.nodes[n].fields;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const NodeRef c = fields[i];
      reach(c, e.field_types[i], n, e.labels[i], on_tracked);
    }
  }

  template <class F>
  void reach(NodeRef c, const Type& ty, NodeRef parent, const std::string& label, F&& on_tracked) {
    const Resolved& r = resolve(ty);
    if (!tracked(g_.nodes[c])) {
      check_leaf(c, ty, r, parent, label);
      return;
    }
    if (dir_ == Direction::To && !r.chain.empty()) {
      incompatible(child_path(parent, label), ty, g_.nodes[c]);
    }
    arrive(c, r.structural, parent, label);
    on_tracked(c);
  }

  void visit_recursive(NodeRef n, std::size_t depth) {
    if (settled(n)) return;
    if (depth > kMaxConvertDepth) {
      throw Error(ErrorKind::DepthExceeded, "value nested deeper than " +
                                                std::to_string(kMaxConvertDepth) + " levels at " +
                                                path_of(n));
    }
    descend(n, [&](NodeRef c) { visit_recursive(c, depth + 1); });
  }

  // Tarjan over the tracked nodes reachable from `root`; components come out
  // in topological order (parents first).
  std::vector<std::vector<NodeRef>> components(NodeRef root) {
    const std::size_t n = g_.nodes.size();
    std::vector<std::uint32_t> index(n, kNone), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<NodeRef> stack;
    std::vector<std::vector<NodeRef>> out;
    std::uint32_t next = 0;
    struct Frame {
      NodeRef v;
      std::size_t i;
    };
    std::vector<Frame> call{{root, 0}};
    index[root] = low[root] = next++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      Frame& f = call.back();
      const auto& fields = g_.nodes[f.v].fields;
      if (f.i < fields.size()) {
        const NodeRef w = fields[f.i++];
        if (!tracked(g_.nodes[w])) continue;
        if (index[w] == kNone) {
          index[w] = low[w] = next++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
        continue;
      }
      const NodeRef v = f.v;
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
      if (low[v] == index[v]) {
        std::vector<NodeRef> scc;
        NodeRef w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          scc.push_back(w);
        } while (w != v);
        out.push_back(std::move(scc));
      }
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

  void check_topological(NodeRef root) {
    std::vector<std::uint32_t> comp(g_.nodes.size(), kNone);
    const auto sccs = components(root);
    for (std::uint32_t k = 0; k < sccs.size(); ++k) {
      for (NodeRef v : sccs[k]) comp[v] = k;
    }
    for (std::uint32_t k = 0; k < sccs.size(); ++k) {
      const auto& scc = sccs[k];
      // Every parent of this component is settled, so each member's pattern
      // only changes from inside the component now.
      std::vector<NodeRef> work;
      for (NodeRef v : scc) {
        if (traces_[v] && !settled(v)) work.push_back(v);
      }
      while (!work.empty()) {
        const NodeRef v = work.back();
        work.pop_back();
        if (settled(v)) continue;
        descend(v, [&](NodeRef c) {
          if (comp[c] == k && !settled(c)) work.push_back(c);
        });
      }
    }
  }

  void check_phase(const Type& t) {
    const NodeRef root = g_.root;
    reach(root, t, kNone, "", [](NodeRef) {});
    if (!tracked(g_.nodes[root])) return;
    if (strategy_ == Strategy::Recursive) {
      visit_recursive(root, 1);
    } else {
      check_topological(root);
    }
  }

  // ---- building

  NodeRef push(ValueNode n) {
    out_.push_back(std::move(n));
    return static_cast<NodeRef>(out_.size() - 1);
  }

  NodeRef push_host(Value v) {
    ValueNode n;
    n.kind = NodeKind::Host;
    n.host = std::move(v);
    return push(std::move(n));
  }

  Value leaf_value(const ValueNode& n) const {
    switch (n.kind) {
      case NodeKind::Imm: return Value::imm(n.imm);
      case NodeKind::Bytes: return Value::bytes(n.bytes);
      case NodeKind::Float: return Value::real(n.real);
      default: return n.host;
    }
  }

  // from_repr, innermost representation first.
  Value rebuild_abstract(Value v, const Resolved& r, NodeRef parent, const std::string& label) {
    for (auto it = r.chain.rbegin(); it != r.chain.rend(); ++it) {
      std::optional<Value> back = it->rep.from_repr(v);
      if (!back) throw RepresentationRejected(child_path(parent, label), it->ty.to_string());
      v = std::move(*back);
    }
    return v;
  }

  // To: the host value replaced by its converted representation.
  NodeRef publish_abstract(const ValueNode& host, const Type& declared, const Resolved& r,
                           NodeRef parent, const std::string& label) {
    const AbstractStep& step = r.chain.front();
    Value rep;
    try {
      rep = step.rep.to_repr(host.host);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::MalformedValue) throw;
      incompatible(child_path(parent, label), declared, host);
    }
    ConvertResult inner;
    try {
      inner = convert(Direction::To, step.repr_ty, graph_of(rep, true), strategy_);
    } catch (const Incompatible& e) {
      throw Incompatible(child_path(parent, label) + "<" + step.ty.to_string() + ">" + e.path().substr(1), e.expected(),
                         e.found());
    }
    const auto offset = static_cast<NodeRef>(out_.size());
    for (ValueNode n : inner.graph.nodes) {
      for (NodeRef& f : n.fields) f += offset;
      out_.push_back(std::move(n));
    }
    return offset + inner.graph.root;
  }

  // Output node for a reference to input node c at normalised type ty. For
  // tracked nodes reached through an abstract type the node must be built.
  NodeRef output_ref(NodeRef c, const Type& ty, NodeRef parent, const std::string& label) {
    const Resolved& r = resolve(ty);
    const ValueNode& n = g_.nodes[c];
    if (r.chain.empty()) {
      if (tracked(n)) return slot_[c];
      if (copy_[c] == kNone) {
        ValueNode leaf = n;
        copy_[c] = push(std::move(leaf));
      }
      return copy_[c];
    }
    const AbsKey key{c, ty};
    if (auto it = abstract_.find(key); it != abstract_.end()) return it->second;
    NodeRef out;
    if (dir_ == Direction::To) {
      out = publish_abstract(n, ty, r, parent, label);
    } else {
      Value v = tracked(n) ? materializer_(slot_[c]) : leaf_value(n);
      out = push_host(rebuild_abstract(std::move(v), r, parent, label));
    }
    abstract_.emplace(key, out);
    return out;
  }

  ValueGraph build_phase(const Type& t) {
    const std::size_t n = g_.nodes.size();
    slot_.assign(n, kNone);
    copy_.assign(n, kNone);
    enum : std::uint8_t { kUnseen, kReserved, kOpen, kDone };
    std::vector<std::uint8_t> state(n, kUnseen);
    std::vector<std::pair<NodeRef, bool>> stack;

    auto reserve = [&](NodeRef c) {
      if (state[c] == kUnseen) {
        ValueNode pending;
        pending.kind = NodeKind::Pending;
        slot_[c] = push(std::move(pending));
        state[c] = kReserved;
      }
      // Re-pushing a reserved node makes it complete before its new parent.
      if (state[c] == kReserved) stack.emplace_back(c, false);
    };

    const NodeRef root = g_.root;
    if (tracked(g_.nodes[root])) reserve(root);
    while (!stack.empty()) {
      auto [v, expanded] = stack.back();
      if (!expanded) {
        if (state[v] != kReserved) {
          stack.pop_back();
          continue;
        }
        state[v] = kOpen;
        stack.back().second = true;
        const auto& fields = g_.nodes[v].fields;
        for (auto it = fields.rbegin(); it != fields.rend(); ++it) {
          if (tracked(g_.nodes[*it])) reserve(*it);
        }
        continue;
      }
      stack.pop_back();
      const ValueNode& in = g_.nodes[v];
      const Expansion e = expand(v, traces_[v]->last);
      std::vector<NodeRef> fields;
      fields.reserve(in.fields.size());
      for (std::size_t i = 0; i < in.fields.size(); ++i) {
        fields.push_back(output_ref(in.fields[i], e.field_types[i], v, e.labels[i]));
      }
      ValueNode built = in.kind == NodeKind::Block ? ValueNode::make_block(in.tag, std::move(fields))
                                                   : ValueNode::make_ext(in.bytes, std::move(fields));
      built.identity = e.ext;
      out_[slot_[v]] = std::move(built);
      state[v] = kDone;
    }

    ValueGraph g;
    g.root = output_ref(root, t, kNone, "");
    g.nodes = std::move(out_);
    return g;
  }

  Direction dir_;
  const ValueGraph& g_;
  Strategy strategy_;
  ConvertStats stats_;
  std::vector<std::optional<NodeTrace>> traces_;
  std::vector<std::optional<Type>> checked_;
  std::vector<Via> via_;
  std::unordered_map<Type, Type, TypeHash> normal_;
  std::unordered_map<Type, Resolved, TypeHash> resolved_;

  std::vector<ValueNode> out_;
  std::vector<NodeRef> slot_;
  std::vector<NodeRef> copy_;
  std::unordered_map<AbsKey, NodeRef, AbsKeyHash> abstract_;
  Materializer materializer_{out_};
};

}  // namespace

ConvertResult convert(Direction d, const Type& t, const ValueGraph& g, Strategy s) {
  return Converter(d, g, s).run(t);
}

ConvertStats check_compat(const Type& t, const ValueGraph& g, Strategy s) {
  return convert(Direction::From, t, g, s).stats;
}

std::string serialize(const Type& t, const Value& v) {
  if (!t.is_ground()) throw Error(ErrorKind::NotSupported, "cannot serialize at pattern " + t.to_string());
  return encode_graph(convert(Direction::To, t, graph_of(v, true)).graph);
}

Value deserialize(const Type& t, std::string_view bytes) {
  if (!t.is_ground()) {
    throw Error(ErrorKind::NotSupported, "cannot deserialize at pattern " + t.to_string());
  }
  return materialize(convert(Direction::From, t, decode_graph(bytes)).graph);
}

}  // namespace reflectix
