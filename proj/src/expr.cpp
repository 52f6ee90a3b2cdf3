#include "reflectix/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "reflectix/builtins.hpp"
#include "reflectix/demo.hpp"
#include "reflectix/error.hpp"
#include "reflectix/uniplate.hpp"

namespace reflectix::expr {

namespace {

enum Tag : std::uint32_t { kCst, kNeg, kAdd, kSub, kVar, kLet };

std::string name_of(const Value& e, std::size_t i) { return std::string(e.field(i).as_bytes()); }

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Value parse_all() {
    Value e = parse_expr();
    skip_ws();
    if (pos_ < text_.size()) fail("unexpected text after the expression");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& reason) const { throw ParseError(line_, col_, reason); }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) advance();
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size()) fail(std::string("expected '") + c + "', found end of input");
    if (text_[pos_] != c) fail(std::string("expected '") + c + "'");
    advance();
  }

  std::string atom() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != '(' && text_[pos_] != ')') {
      advance();
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string ident() {
    skip_ws();
    const int line = line_, col = col_;
    std::string s = atom();
    const bool ok = !s.empty() && std::isalpha(static_cast<unsigned char>(s[0])) &&
                    std::all_of(s.begin(), s.end(), [](char c) {
                      return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
                    });
    if (!ok) throw ParseError(line, col, s.empty() ? "expected an identifier" : "bad identifier '" + s + "'");
    return s;
  }

  std::int64_t integer() {
    skip_ws();
    const int line = line_, col = col_;
    std::string s = atom();
    std::int64_t k = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), k);
    if (s.empty() || ec != std::errc() || end != s.data() + s.size()) {
      throw ParseError(line, col, s.empty() ? "expected an integer" : "bad integer '" + s + "'");
    }
    return k;
  }

  Value parse_expr() {
    expect('(');
    skip_ws();
    const int line = line_, col = col_;
    const std::string head = atom();
    Value out;
    if (head == "cst") {
      out = demo::cst(integer());
    } else if (head == "neg") {
      out = demo::neg(parse_expr());
    } else if (head == "add" || head == "sub") {
      Value a = parse_expr();
      Value b = parse_expr();
      out = head == "add" ? demo::add(a, b) : demo::sub(a, b);
    } else if (head == "var") {
      out = demo::var(ident());
    } else if (head == "let") {
      std::string n = ident();
      Value d = parse_expr();
      Value b = parse_expr();
      out = demo::let(std::move(n), d, b);
    } else {
      throw ParseError(line, col, head.empty() ? "expected a constructor" : "unknown constructor '" + head + "'");
    }
    expect(')');
    return out;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

void print_to(const Value& e, std::string& out) {
  switch (e.tag()) {
    case kCst: out += "(cst " + std::to_string(e.field(0).as_imm()) + ")"; return;
    case kNeg:
      out += "(neg ";
      print_to(e.field(0), out);
      out += ")";
      return;
    case kAdd:
    case kSub:
      out += e.tag() == kAdd ? "(add " : "(sub ";
      print_to(e.field(0), out);
      out += " ";
      print_to(e.field(1), out);
      out += ")";
      return;
    case kVar: out += "(var " + name_of(e, 0) + ")"; return;
    case kLet:
      out += "(let " + name_of(e, 0) + " ";
      print_to(e.field(1), out);
      out += " ";
      print_to(e.field(2), out);
      out += ")";
      return;
  }
  throw Error(ErrorKind::MalformedValue, "not an expression");
}

bool is(const Value& e, Tag t) { return e.is(ValueKind::Block) && e.tag() == t; }

}  // namespace

Value parse(std::string_view text) { return Parser(text).parse_all(); }

std::string print(const Value& e) {
  std::string out;
  print_to(e, out);
  return out;
}

Value simplify(const Value& e) {
  return map_family(demo::expr(), [](const Value& x) {
    if (is(x, kNeg) && is(x.field(0), kNeg)) return x.field(0).field(0);
    return x;
  }, e);
}

Value const_fold(const Value& e) {
  return map_family(demo::expr(), [](const Value& x) {
    if ((is(x, kAdd) || is(x, kSub)) && is(x.field(0), kCst) && is(x.field(1), kCst)) {
      const std::int64_t a = x.field(0).field(0).as_imm();
      const std::int64_t b = x.field(1).field(0).as_imm();
      return demo::cst(is(x, kAdd) ? a + b : a - b);
    }
    if (is(x, kNeg) && is(x.field(0), kCst)) return demo::cst(-x.field(0).field(0).as_imm());
    return x;
  }, e);
}

Value simplify_more(const Value& e, std::uint64_t fuel) {
  return reduce_family(demo::expr(), [](const Value& x) -> std::optional<Value> {
    if (is(x, kNeg) && is(x.field(0), kNeg)) return x.field(0).field(0);
    if (is(x, kSub)) return demo::add(x.field(0), demo::neg(x.field(1)));
    return std::nullopt;
  }, e, fuel);
}

Value simplify_more(const Value& e) { return simplify_more(e, kDefaultFuel); }

std::pair<Value, std::int64_t> abstract(const Value& e) {
  const MonadDict state = state_monad("Int");
  const Effectful incr = state.bind(get_state("Int"), [state](const std::any& i) {
    return state.bind(put_state(std::any(std::any_cast<std::int64_t>(i) + 1), "Int"),
                      [state, i](const std::any&) { return state.ret(i); });
  });
  Effectful run = traverse_family(state, demo::expr(), [state, incr](const Value& x) {
    if (!is(x, kCst)) return state.ret(std::any(x));
    return liftM(state, [](const std::any& i) -> std::any {
      return demo::var("x" + std::to_string(std::any_cast<std::int64_t>(i)));
    }, incr);
  }, e);
  auto [v, s] = run_state(run, std::any(std::int64_t{0}));
  return {std::any_cast<Value>(v), std::any_cast<std::int64_t>(s)};
}

std::vector<std::string> free_vars(const Value& e) {
  using Names = std::vector<std::string>;
  const MonadDict reader = reader_monad("List(String)");
  const auto in_scope = [](std::string n) {
    return Effectful{Brand{BrandKind::Reader, "List(String)"},
                     std::function<std::any(const std::any&)>([n](const std::any& env) -> std::any {
                       const auto& ns = std::any_cast<const Names&>(env);
                       return std::find(ns.begin(), ns.end(), n) != ns.end();
                     })};
  };
  const auto extend_scope = [](std::string n, const Effectful& c) {
    return local([n](const std::any& env) -> std::any {
      Names ns = std::any_cast<const Names&>(env);
      ns.insert(ns.begin(), n);
      return ns;
    }, c);
  };
  Effectful scoped = para<Effectful>(demo::expr(), [&](const Value& x, std::vector<Effectful> rs) {
    Effectful r = liftM(reader, [](const std::any& lists) -> std::any {
      Names out;
      for (const auto& l : std::any_cast<const std::vector<std::any>&>(lists)) {
        const auto& ns = std::any_cast<const Names&>(l);
        out.insert(out.end(), ns.begin(), ns.end());
      }
      return out;
    }, sequence_m(reader, rs));
    if (is(x, kVar)) {
      const std::string n = name_of(x, 0);
      return reader.bind(in_scope(n), [reader, n](const std::any& bound) {
        return reader.ret(std::any(std::any_cast<bool>(bound) ? Names{} : Names{n}));
      });
    }
    if (is(x, kLet)) return extend_scope(name_of(x, 0), r);
    return r;
  }, e);
  return std::any_cast<Names>(run_reader(scoped, std::any(Names{})));
}

std::vector<std::int64_t> constants(const Value& e) {
  std::vector<std::int64_t> out;
  for (const auto& x : family(demo::expr(), e)) {
    if (is(x, kCst)) out.push_back(x.field(0).as_imm());
  }
  return out;
}

std::int64_t height(const Value& e) {
  return para<std::int64_t>(demo::expr(), [](const Value&, std::vector<std::int64_t> hs) {
    if (hs.empty()) return std::int64_t{0};
    return 1 + *std::max_element(hs.begin(), hs.end());
  }, e);
}

Value subst(const std::map<std::string, Value>& env, const Value& e) {
  if (is(e, kLet)) {
    auto inner = env;
    inner.erase(name_of(e, 0));
    return demo::let(name_of(e, 0), subst(env, e.field(1)), subst(inner, e.field(2)));
  }
  if (is(e, kVar)) {
    if (auto it = env.find(name_of(e, 0)); it != env.end()) return it->second;
  }
  return map_children(demo::expr(), [&env](const Value& c) { return subst(env, c); }, e);
}

}  // namespace reflectix::expr
