#include "reflectix/generics.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "reflectix/desc.hpp"
#include "reflectix/error.hpp"
#include "reflectix/views.hpp"
#include "internal.hpp"

namespace reflectix {

namespace {

[[noreturn]] void unsupported(const std::string& what, const Type& t) {
  throw Error(ErrorKind::NotSupported, what + ": type not supported: " + t.to_string());
}

bool is_fun(const Type& t) { return !t.is_any() && t.head() == ty::fun_con(); }

// ---------------------------------------------------------------------------
// show

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (c < 32 || c >= 127) {
          char buf[5];
          std::snprintf(buf, sizeof buf, "\\%03u", static_cast<unsigned>(c));
          out += buf;
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  return out + "\"";
}

std::string show_float(double d) {
  if (std::isnan(d)) return "nan";
  if (std::isinf(d)) return d > 0 ? "infinity" : "neg_infinity";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, d);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".e") == std::string::npos) s += ".";
  return s;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

std::string show_app(const std::string& name, const FieldList& fields,
                     std::span<const Value> args) {
  if (args.empty()) return name;
  std::vector<std::string> parts;
  for (std::size_t i = 0; i < args.size(); ++i) parts.push_back(show(fields[i].ty, args[i]));
  return name + " (" + join(parts, ", ") + ")";
}

std::string show_structural(const Type& t, const Value& v) {
  if (auto k = scalar_kind(t)) {
    switch (*k) {
      case ScalarKind::Int: return std::to_string(v.as_imm());
      case ScalarKind::Char: {
        const std::string q = quote(std::string(1, static_cast<char>(v.as_imm())));
        return "'" + q.substr(1, q.size() - 2) + "'";
      }
      case ScalarKind::Float: return show_float(v.as_float());
    }
  }
  if (is_fun(t)) return "<fun>";
  auto d = view_desc(t);
  return std::visit(
      [&](const auto& desc) -> std::string {
        using D = std::decay_t<decltype(desc)>;
        if constexpr (std::is_same_v<D, NoDesc>) {
          unsupported("show", t);
        } else if constexpr (std::is_same_v<D, VariantDesc>) {
          ConApp ca = conap(desc, v);
          return show_app(ca.con->name(), ca.con->args(), ca.args);
        } else if constexpr (std::is_same_v<D, RecordDesc>) {
          std::vector<std::string> parts;
          for (std::size_t i = 0; i < desc.fields.size(); ++i) {
            parts.push_back(desc.fields[i].name + " = " + show(desc.fields[i].ty, v.field(i)));
          }
          return "{" + join(parts, "; ") + "}";
        } else if constexpr (std::is_same_v<D, ProductDesc>) {
          std::vector<std::string> parts;
          for (std::size_t i = 0; i < desc.shape.size(); ++i) {
            parts.push_back(show(desc.shape[i], v.field(i)));
          }
          return "(" + join(parts, ", ") + ")";
        } else if constexpr (std::is_same_v<D, ArrayDesc>) {
          if (desc.byte_storage) return quote(v.as_bytes());
          std::vector<std::string> parts;
          const std::size_t n = desc.ops.length(v);
          for (std::size_t i = 0; i < n; ++i) parts.push_back(show(desc.elem, desc.ops.get(v, i)));
          return "[|" + join(parts, "; ") + "|]";
        } else if constexpr (std::is_same_v<D, std::shared_ptr<ExtensibleDesc>>) {
          ConApp ca = desc->conap(v);
          return show_app(ca.con->name(), ca.con->args(), ca.args);
        } else if constexpr (std::is_same_v<D, SynonymDesc>) {
          return show(desc.target, v);
        } else {
          // Abstract and opaque types.
          auto r = find_repr(t);
          if (!r) unsupported("show", t);
          return desc.name + "(" + show(r->repr_ty, r->to_repr(v)) + ")";
        }
      },
      *d);
}

ExtFun<std::string(const Value&)>* make_show_fun() {
  auto* f = new ExtFun<std::string(const Value&)>("show");
  f->extend(Type::any(), show_structural);
  f->extend(ty::list(Type::any()), [](const Type& t, const Value& v) {
    std::vector<std::string> parts;
    for (Value cur = v; cur.is(ValueKind::Block); cur = cur.field(1)) {
      parts.push_back(show(t.arg(0), cur.field(0)));
    }
    return "[" + join(parts, "; ") + "]";
  });
  return f;
}

// ---------------------------------------------------------------------------
// equality

bool float_eq(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

using EqFn = bool (*)(const Type&, const Value&, const Value&);

// Types that neither view decomposes: scalars, arrays, extensible, abstract
// and opaque types.
bool base_equal(const Type& t, const Value& x, const Value& y, EqFn eq) {
  if (auto k = scalar_kind(t)) {
    if (*k == ScalarKind::Float) return float_eq(x.as_float(), y.as_float());
    return x.as_imm() == y.as_imm();
  }
  auto d = view_desc(t);
  if (const auto* a = std::get_if<ArrayDesc>(d.get())) {
    if (a->byte_storage) return x.as_bytes() == y.as_bytes();
    const std::size_t n = a->ops.length(x);
    if (n != a->ops.length(y)) return false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!eq(a->elem, a->ops.get(x, i), a->ops.get(y, i))) return false;
    }
    return true;
  }
  if (const auto* e = std::get_if<std::shared_ptr<ExtensibleDesc>>(d.get())) {
    ConApp cx = (*e)->conap(x);
    ConApp cy = (*e)->conap(y);
    if (cx.con != cy.con) return false;
    for (std::size_t i = 0; i < cx.args.size(); ++i) {
      if (!eq(cx.con->args()[i].ty, cx.args[i], cy.args[i])) return false;
    }
    return true;
  }
  if (std::holds_alternative<AbstractDesc>(*d) || std::holds_alternative<OpaqueDesc>(*d)) {
    if (auto r = find_repr(t)) return eq(r->repr_ty, r->to_repr(x), r->to_repr(y));
  }
  unsupported("equal", t);
}

bool equal_view(const SumProd& sp, const Value& x, const Value& y) {
  switch (sp.kind) {
    case SumProd::Kind::Empty:
    case SumProd::Kind::Unit: return true;
    case SumProd::Kind::Sum:
      if (x.tag() != y.tag()) return false;
      return equal_view(x.tag() == 0 ? *sp.left : *sp.right, x.field(0), y.field(0));
    case SumProd::Kind::Prod:
      return equal_view(*sp.left, x.field(0), y.field(0)) &&
             equal_view(*sp.right, x.field(1), y.field(1));
    case SumProd::Kind::Con:
    case SumProd::Kind::FieldTag: return equal_view(*sp.left, x, y);
    case SumProd::Kind::Delay:
    case SumProd::Kind::Base: return equal(sp.ty, x, y);
    case SumProd::Kind::Iso: return equal_view(*sp.left, sp.iso.fwd(x), sp.iso.fwd(y));
  }
  return false;
}

// ---------------------------------------------------------------------------
// children

// Array elements of a non-byte array type, with their type.
bool array_elems(const Type& t, const Value& v, Type& elem, std::vector<Value>& out) {
  auto d = view_desc(t);
  const auto* a = std::get_if<ArrayDesc>(d.get());
  if (a == nullptr || a->byte_storage) return false;
  elem = a->elem;
  const std::size_t n = a->ops.length(v);
  for (std::size_t i = 0; i < n; ++i) out.push_back(a->ops.get(v, i));
  return true;
}

}  // namespace

bool searched_type(const Type& t) {
  if (t.is_any() || scalar_kind(t)) return false;
  auto d = view_desc(t);
  if (const auto* a = std::get_if<ArrayDesc>(d.get())) return !a->byte_storage;
  return std::holds_alternative<VariantDesc>(*d) || std::holds_alternative<RecordDesc>(*d) ||
         std::holds_alternative<ProductDesc>(*d) || std::holds_alternative<SynonymDesc>(*d);
}

namespace {

bool is_searched(const Type& t) { return searched_type(t); }

void require_desc(const Type& t) {
  if (scalar_kind(t)) return;
  if (std::holds_alternative<NoDesc>(*view_desc(t))) unsupported("children", t);
}

// sum-of-products

void sp_search(const Type& parent, const Type& t, const Value& v, std::vector<Value>& out);

void sp_walk(const Type& parent, const SumProd& sp, const Value& v, std::vector<Value>& out) {
  switch (sp.kind) {
    case SumProd::Kind::Sum:
      sp_walk(parent, v.tag() == 0 ? *sp.left : *sp.right, v.field(0), out);
      return;
    case SumProd::Kind::Prod:
      sp_walk(parent, *sp.left, v.field(0), out);
      sp_walk(parent, *sp.right, v.field(1), out);
      return;
    case SumProd::Kind::Con:
    case SumProd::Kind::FieldTag: sp_walk(parent, *sp.left, v, out); return;
    case SumProd::Kind::Delay: sp_search(parent, sp.ty, v, out); return;
    default: return;
  }
}

void sp_decompose(const Type& parent, const Type& t, const Value& v, std::vector<Value>& out) {
  SumProdRef sp = sumprod(t);
  if (sp->kind == SumProd::Kind::Iso) {
    sp_walk(parent, *sp->left, sp->iso.fwd(v), out);
    return;
  }
  Type elem;
  std::vector<Value> elems;
  if (array_elems(resolve_synonyms(t), v, elem, elems)) {
    for (const auto& e : elems) sp_search(parent, elem, e, out);
  }
}

void sp_search(const Type& parent, const Type& t, const Value& v, std::vector<Value>& out) {
  if (ty_equal(t, parent)) {
    out.push_back(v);
  } else if (is_searched(t)) {
    sp_decompose(parent, t, v, out);
  }
}

// spine

void spine_search(const Type& parent, const Type& t, const Value& v, std::vector<Value>& out);

void spine_decompose(const Type& parent, const Type& t, const Value& v, std::vector<Value>& out) {
  const Type r = resolve_synonyms(t);
  Type elem;
  std::vector<Value> elems;
  if (array_elems(r, v, elem, elems)) {
    for (const auto& e : elems) spine_search(parent, elem, e, out);
    return;
  }
  auto d = view_desc(r);
  if (!std::holds_alternative<VariantDesc>(*d) && !std::holds_alternative<RecordDesc>(*d) &&
      !std::holds_alternative<ProductDesc>(*d)) {
    return;
  }
  // The spine lists arguments last to first.
  std::vector<const Spine*> apps;
  SpineRef s = spine(r, v);
  for (const Spine* cur = s.get(); cur->kind == Spine::Kind::App; cur = cur->fn.get()) {
    apps.push_back(cur);
  }
  for (auto it = apps.rbegin(); it != apps.rend(); ++it) {
    spine_search(parent, (*it)->arg_ty, (*it)->arg, out);
  }
}

void spine_search(const Type& parent, const Type& t, const Value& v, std::vector<Value>& out) {
  for (const auto& c : child(parent, t, v)) out.push_back(c);
  if (!ty_equal(t, parent) && is_searched(t)) spine_decompose(parent, t, v, out);
}

// list of constructors

void cl_search(const Type& parent, const Type& t, const Value& v, std::vector<Value>& out);

void cl_decompose(const Type& parent, const Type& t, const Value& v, std::vector<Value>& out) {
  const auto& cs = conlist(t);
  if (cs.empty()) {
    Type elem;
    std::vector<Value> elems;
    if (array_elems(resolve_synonyms(t), v, elem, elems)) {
      for (const auto& e : elems) cl_search(parent, elem, e, out);
    }
    return;
  }
  ConApp ca = conlist_conap(cs, v);
  for (std::size_t i = 0; i < ca.args.size(); ++i) {
    cl_search(parent, ca.con->args()[i].ty, ca.args[i], out);
  }
}

void cl_search(const Type& parent, const Type& t, const Value& v, std::vector<Value>& out) {
  if (ty_equal(t, parent)) {
    out.push_back(v);
  } else if (is_searched(t)) {
    cl_decompose(parent, t, v, out);
  }
}

}  // namespace

ExtFun<std::string(const Value&)>& show_fun() {
  static ExtFun<std::string(const Value&)>* f = make_show_fun();
  return *f;
}

std::string show(const Type& t, const Value& v) { return show_fun()(t, v); }

bool equal(const Type& t, const Value& x, const Value& y) {
  if (scalar_kind(t)) return base_equal(t, x, y, equal);
  if (is_fun(t) || std::holds_alternative<NoDesc>(*view_desc(t))) unsupported("equal", t);
  SumProdRef sp = sumprod(t);
  if (sp->kind == SumProd::Kind::Base) return base_equal(sp->ty, x, y, equal);
  return equal_view(*sp, x, y);
}

bool equal_conlist(const Type& t, const Value& x, const Value& y) {
  const Type r = resolve_synonyms(t);
  const auto& cs = conlist(r);
  if (cs.empty()) return base_equal(r, x, y, equal_conlist);
  ConApp cx = conlist_conap(cs, x);
  ConApp cy = conlist_conap(cs, y);
  if (cx.con != cy.con) return false;  // not the same constructor
  for (std::size_t i = 0; i < cx.args.size(); ++i) {
    if (!equal_conlist(cx.con->args()[i].ty, cx.args[i], cy.args[i])) return false;
  }
  return true;
}

std::vector<Value> child(const Type& parent, const Type& candidate, const Value& v) {
  if (ty_equal(candidate, parent)) return {v};
  return {};
}

std::vector<Value> children_sumprod(const Type& t, const Value& v) {
  require_desc(t);
  std::vector<Value> out;
  if (!scalar_kind(t)) sp_decompose(t, t, v, out);
  return out;
}

std::vector<Value> children_spine(const Type& t, const Value& v) {
  require_desc(t);
  std::vector<Value> out;
  if (!scalar_kind(t)) spine_decompose(t, t, v, out);
  return out;
}

std::vector<Value> children_conlist(const Type& t, const Value& v) {
  require_desc(t);
  std::vector<Value> out;
  if (!scalar_kind(t)) cl_decompose(t, t, v, out);
  return out;
}

}  // namespace reflectix
