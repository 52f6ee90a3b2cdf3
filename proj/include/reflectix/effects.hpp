#pragma once

#include <any>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace reflectix {

enum class BrandKind { Identity, Const, Reader, State, IO };

// Names one interpretation of effectful values. Two brands are the same
// interpretation iff kind and parameter agree (e.g. State over Int).
struct Brand {
  BrandKind kind;
  std::string param;

  friend bool operator==(const Brand&, const Brand&) = default;
  std::string to_string() const;
};

// An effectful computation with an untyped result. The payload layout
// depends on the brand:
//   Identity  the result itself
//   Const     the accumulated monoid element
//   Reader    std::function<std::any(const std::any& env)>
//   State     std::function<std::pair<std::any, std::any>(const std::any& s)>
//   IO        std::function<std::any()>
struct Effectful {
  Brand brand;
  std::any payload;
};

using AnyFn = std::function<std::any(const std::any&)>;
using AnyFn2 = std::function<std::any(const std::any&, const std::any&)>;
using Kleisli = std::function<Effectful(const std::any&)>;

struct FunctorialDict {
  Brand brand;
  std::function<Effectful(const AnyFn&, const Effectful&)> fmap;
};

struct ApplicativeDict {
  Brand brand;
  std::function<Effectful(const std::any&)> pure;
  // `kf` yields an AnyFn.
  std::function<Effectful(const Effectful& kf, const Effectful& kx)> apply;
};

struct MonadDict {
  Brand brand;
  std::function<Effectful(const std::any&)> ret;
  std::function<Effectful(const Effectful&, const Kleisli&)> bind;
};

struct MonoidDict {
  std::string name;
  std::any empty;
  AnyFn2 combine;
};

// Throws Error(BrandMismatch) unless `e` carries `expected`.
void check_brand(const Brand& expected, const Effectful& e);

FunctorialDict fun_of_app(const ApplicativeDict& a);
FunctorialDict fun_of_mon(const MonadDict& m);
ApplicativeDict app_of_mon(const MonadDict& m);

Effectful liftA2(const ApplicativeDict& a, const AnyFn2& f, const Effectful& x, const Effectful& y);
Effectful liftM(const MonadDict& m, const AnyFn& f, const Effectful& x);

// Results are std::vector<std::any>.
Effectful traverse_list(const ApplicativeDict& a, const Kleisli& f, const std::vector<std::any>& xs);
Effectful sequence_list(const ApplicativeDict& a, const std::vector<Effectful>& xs);
Effectful traverse_m(const MonadDict& m, const Kleisli& f, const std::vector<std::any>& xs);
Effectful sequence_m(const MonadDict& m, const std::vector<Effectful>& xs);

// Identity
MonadDict identity_monad();
ApplicativeDict identity_applicative();
std::any run_identity(const Effectful& e);

// Const: an applicative (not a monad) accumulating monoid elements.
ApplicativeDict const_applicative(const MonoidDict& m);
std::any run_const(const Effectful& e);

MonoidDict list_monoid();  // std::vector<std::any>, concatenation
MonoidDict sum_monoid();   // long long, addition
MonoidDict string_monoid();

// Reader
MonadDict reader_monad(std::string env = "");
Effectful ask(std::string env = "");
Effectful local(const AnyFn& modify, const Effectful& r);
std::any run_reader(const Effectful& r, const std::any& env);

// State
MonadDict state_monad(std::string state = "");
Effectful get_state(std::string state = "");
Effectful put_state(const std::any& s, std::string state = "");
std::pair<std::any, std::any> run_state(const Effectful& m, const std::any& s0);

// IO
MonadDict io_monad();
Effectful embed_io(std::function<std::any()> thunk);
std::any run_io(const Effectful& m);

}  // namespace reflectix
