#include "reflectix/typerep.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <map>
#include <mutex>
#include <shared_mutex>

#include "reflectix/error.hpp"

namespace reflectix {

namespace {

struct ConTable {
  std::shared_mutex mu;
  std::deque<std::unique_ptr<TypeCon>> entries;
  std::map<std::string, TypeConRef, std::less<>> by_qualified;
  std::multimap<std::string, TypeConRef, std::less<>> by_name;
};

ConTable& con_table() {
  static ConTable table;
  return table;
}

std::string join_path(const std::vector<std::string>& path, const std::string& name) {
  std::string out;
  for (const auto& p : path) {
    out += p;
    out += '.';
  }
  return out + name;
}

std::size_t mix(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

constexpr std::size_t kAnyHash = 0x5bd1e995;

}  // namespace

std::string TypeCon::qualified_name() const { return join_path(module_path_, name_); }

TypeConRef declare_type_con(std::string name, std::vector<std::string> module_path,
                            std::size_t arity) {
  auto& table = con_table();
  const std::string qualified = join_path(module_path, name);
  std::unique_lock lock(table.mu);
  if (auto it = table.by_qualified.find(qualified); it != table.by_qualified.end()) {
    if (it->second->arity() != arity) {
      throw Error(ErrorKind::ArityMismatch, qualified + " is declared with arity " +
                                                std::to_string(it->second->arity()));
    }
    return it->second;
  }
  table.entries.push_back(
      std::unique_ptr<TypeCon>(new TypeCon(name, std::move(module_path), arity)));
  TypeConRef con = table.entries.back().get();
  table.by_qualified.emplace(qualified, con);
  table.by_name.emplace(std::move(name), con);
  return con;
}

namespace {

// Built-in constructors are declared on first use; lookups by name must see
// all of them.
void declare_builtin_cons() {
  static const bool done = [] {
    for (auto con : {ty::int_con, ty::char_con, ty::float_con, ty::string_con, ty::bytes_con,
                     ty::bool_con, ty::unit_con, ty::list_con, ty::option_con, ty::pair_con,
                     ty::triple_con, ty::array_con, ty::fun_con}) {
      con();
    }
    return true;
  }();
  (void)done;
}

}  // namespace

std::optional<TypeConRef> find_type_con(std::string_view name) {
  declare_builtin_cons();
  auto& table = con_table();
  std::shared_lock lock(table.mu);
  if (auto it = table.by_qualified.find(name); it != table.by_qualified.end()) return it->second;
  auto [lo, hi] = table.by_name.equal_range(name);
  if (lo != hi && std::next(lo) == hi) return lo->second;
  return std::nullopt;
}

struct Type::Node {
  TypeConRef head;
  std::vector<Type> args;
  std::size_t hash;
  std::size_t concrete_size;
  bool ground;
};

Type Type::any() { return Type(nullptr); }

Type Type::apply(TypeConRef head, std::vector<Type> args) {
  if (head == nullptr) throw Error(ErrorKind::UnknownType, "null type constructor");
  if (args.size() != head->arity()) {
    throw Error(ErrorKind::ArityMismatch, head->name() + " expects " +
                                              std::to_string(head->arity()) + " argument(s), got " +
                                              std::to_string(args.size()));
  }
  std::size_t h = std::hash<const void*>{}(head);
  std::size_t size = 1;
  bool ground = true;
  for (const auto& a : args) {
    h = mix(h, a.hash());
    size += a.concrete_size();
    ground = ground && a.is_ground();
  }
  return Type(std::make_shared<const Node>(Node{head, std::move(args), h, size, ground}));
}

TypeConRef Type::head() const noexcept { return node_->head; }

std::span<const Type> Type::args() const noexcept {
  if (!node_) return {};
  return node_->args;
}

const Type& Type::arg(std::size_t i) const {
  if (!node_ || i >= node_->args.size()) {
    throw Error(ErrorKind::IndexOutOfRange, "type argument " + std::to_string(i) + " of " +
                                                to_string());
  }
  return node_->args[i];
}

bool Type::is_ground() const noexcept { return node_ && node_->ground; }

std::size_t Type::hash() const noexcept { return node_ ? node_->hash : kAnyHash; }

std::size_t Type::concrete_size() const noexcept { return node_ ? node_->concrete_size : 0; }

bool operator==(const Type& a, const Type& b) noexcept {
  if (a.node_ == b.node_) return true;
  if (!a.node_ || !b.node_) return false;
  if (a.node_->hash != b.node_->hash || a.node_->head != b.node_->head) return false;
  return std::equal(a.node_->args.begin(), a.node_->args.end(), b.node_->args.begin());
}

std::string Type::to_string() const {
  if (!node_) return "_";
  std::string out = node_->head->name();
  if (!node_->args.empty()) {
    out += '(';
    for (std::size_t i = 0; i < node_->args.size(); ++i) {
      if (i > 0) out += ", ";
      out += node_->args[i].to_string();
    }
    out += ')';
  }
  return out;
}

namespace {

class TypeParser {
 public:
  explicit TypeParser(std::string_view text) : text_(text) {}

  Type parse() {
    Type t = parse_term();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& reason) const {
    throw ParseError(1, static_cast<int>(pos_) + 1, reason);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '\'';
  }

  Type parse_term() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    if (start == pos_) fail("expected a type name");
    const std::string_view name = text_.substr(start, pos_ - start);
    std::vector<Type> args;
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      for (;;) {
        args.push_back(parse_term());
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == ',') {
          ++pos_;
          continue;
        }
        if (pos_ < text_.size() && text_[pos_] == ')') {
          ++pos_;
          break;
        }
        fail("expected ',' or ')'");
      }
    }
    if (name == "_") {
      if (!args.empty()) fail("the wildcard takes no arguments");
      return Type::any();
    }
    auto con = find_type_con(name);
    if (!con) throw Error(ErrorKind::UnknownType, "unknown type constructor " + std::string(name));
    if ((*con)->arity() != args.size()) {
      throw Error(ErrorKind::UnknownType, std::string(name) + " expects " +
                                              std::to_string((*con)->arity()) +
                                              " argument(s), got " + std::to_string(args.size()));
    }
    return Type::apply(*con, std::move(args));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Type parse_type(std::string_view text) { return TypeParser(text).parse(); }

std::optional<EqualityWitness> ty_equal(const Type& a, const Type& b) {
  if (!a.is_ground() || !b.is_ground()) return std::nullopt;
  if (a.head() != b.head()) return std::nullopt;
  for (std::size_t i = 0; i < a.args().size(); ++i) {
    if (!ty_equal(a.args()[i], b.args()[i])) return std::nullopt;
  }
  return EqualityWitness(a, b);
}

std::optional<Value> coerce(const Type& from, const Type& to, const Value& v) {
  if (!ty_equal(from, to)) return std::nullopt;
  return v;
}

std::optional<Dyn> coerce(const Dyn& d, const Type& to) {
  if (!ty_equal(d.rep, to)) return std::nullopt;
  return Dyn{to, d.value};
}

bool matches(const Type& pattern, const Type& t) {
  if (pattern.is_any()) return true;
  if (t.is_any() || pattern.head() != t.head()) return false;
  for (std::size_t i = 0; i < pattern.args().size(); ++i) {
    if (!matches(pattern.args()[i], t.args()[i])) return false;
  }
  return true;
}

Specificity compare_specificity(const Type& p, const Type& q) {
  if (p.is_any() && q.is_any()) return Specificity::Equal;
  if (p.is_any()) return Specificity::MoreGeneral;
  if (q.is_any()) return Specificity::MoreSpecific;
  if (p.head() != q.head()) return Specificity::Incomparable;
  for (std::size_t i = 0; i < p.args().size(); ++i) {
    const Specificity s = compare_specificity(p.args()[i], q.args()[i]);
    if (s != Specificity::Equal) return s;
  }
  return Specificity::Equal;
}

std::strong_ordering dispatch_order(const Type& p, const Type& q) {
  if (p.is_any() && q.is_any()) return std::strong_ordering::equal;
  if (p.is_any()) return std::strong_ordering::greater;
  if (q.is_any()) return std::strong_ordering::less;
  if (p.head() != q.head()) {
    if (auto c = p.head()->name() <=> q.head()->name(); c != 0) return c;
    if (auto c = p.head()->module_path() <=> q.head()->module_path(); c != 0) return c;
    return p.head()->arity() <=> q.head()->arity();
  }
  for (std::size_t i = 0; i < p.args().size(); ++i) {
    if (auto c = dispatch_order(p.args()[i], q.args()[i]); c != 0) return c;
  }
  return std::strong_ordering::equal;
}

Type anti_unify(const Type& a, const Type& b) {
  if (a.is_any() || b.is_any() || a.head() != b.head()) return Type::any();
  if (a == b) return a;
  std::vector<Type> args;
  args.reserve(a.args().size());
  for (std::size_t i = 0; i < a.args().size(); ++i) {
    args.push_back(anti_unify(a.args()[i], b.args()[i]));
  }
  return Type::apply(a.head(), std::move(args));
}

namespace ty {

namespace {
TypeConRef stdlib(const char* name, std::size_t arity) {
  return declare_type_con(name, {"Stdlib"}, arity);
}
}  // namespace

TypeConRef int_con() { static const TypeConRef c = stdlib("Int", 0); return c; }
TypeConRef char_con() { static const TypeConRef c = stdlib("Char", 0); return c; }
TypeConRef float_con() { static const TypeConRef c = stdlib("Float", 0); return c; }
TypeConRef string_con() { static const TypeConRef c = stdlib("String", 0); return c; }
TypeConRef bytes_con() { static const TypeConRef c = stdlib("Bytes", 0); return c; }
TypeConRef bool_con() { static const TypeConRef c = stdlib("Bool", 0); return c; }
TypeConRef unit_con() { static const TypeConRef c = stdlib("Unit", 0); return c; }
TypeConRef list_con() { static const TypeConRef c = stdlib("List", 1); return c; }
TypeConRef option_con() { static const TypeConRef c = stdlib("Option", 1); return c; }
TypeConRef pair_con() { static const TypeConRef c = stdlib("Pair", 2); return c; }
TypeConRef triple_con() { static const TypeConRef c = stdlib("Triple", 3); return c; }
TypeConRef array_con() { static const TypeConRef c = stdlib("Array", 1); return c; }
TypeConRef fun_con() { static const TypeConRef c = stdlib("Fun", 2); return c; }

Type int_t() { return Type::apply(int_con()); }
Type char_t() { return Type::apply(char_con()); }
Type float_t() { return Type::apply(float_con()); }
Type string_t() { return Type::apply(string_con()); }
Type bytes_t() { return Type::apply(bytes_con()); }
Type bool_t() { return Type::apply(bool_con()); }
Type unit_t() { return Type::apply(unit_con()); }
Type list(Type elem) { return Type::apply(list_con(), {std::move(elem)}); }
Type option(Type elem) { return Type::apply(option_con(), {std::move(elem)}); }
Type pair(Type a, Type b) { return Type::apply(pair_con(), {std::move(a), std::move(b)}); }
Type triple(Type a, Type b, Type c) {
  return Type::apply(triple_con(), {std::move(a), std::move(b), std::move(c)});
}
Type array(Type elem) { return Type::apply(array_con(), {std::move(elem)}); }
Type fun(Type a, Type b) { return Type::apply(fun_con(), {std::move(a), std::move(b)}); }

}  // namespace ty

}  // namespace reflectix
