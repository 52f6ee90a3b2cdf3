#pragma once

#include <algorithm>
#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "reflectix/error.hpp"
#include "reflectix/typerep.hpp"

namespace reflectix {

template <class Signature>
class ExtFun;

/// An extensible type-indexed function.
///
/// Cases are registered against type patterns and stored in buckets keyed
/// by the pattern's head constructor (the wildcard `_` has its own bucket).
/// A bucket is kept sorted most-specific-first by `dispatch_order`, so the
/// case chosen for a type never depends on registration order.
///
/// Each case receives the queried type, already known to match its pattern.
template <class R, class... Args>
class ExtFun<R(Args...)> {
 public:
  using Case = std::function<R(const Type&, Args...)>;

  explicit ExtFun(std::string doc) : doc_(std::move(doc)), table_(std::make_shared<Table>()) {}

  ExtFun(const ExtFun&) = delete;
  ExtFun& operator=(const ExtFun&) = delete;

  const std::string& doc() const noexcept { return doc_; }

  // Registering an identical pattern again replaces the earlier case.
  void extend(const Type& pattern, Case fn) {
    std::lock_guard lock(write_mu_);
    auto next = std::make_shared<Table>(*snapshot());
    auto& bucket = pattern.is_any() ? next->wildcard : next->buckets[pattern.head()];
    auto pos = std::lower_bound(bucket.begin(), bucket.end(), pattern,
                                [](const Entry& e, const Type& p) {
                                  return dispatch_order(e.pattern, p) < 0;
                                });
    if (pos != bucket.end() && pos->pattern == pattern) {
      pos->fn = std::move(fn);
    } else {
      bucket.insert(pos, Entry{pattern, std::move(fn)});
    }
    std::lock_guard read_lock(read_mu_);
    table_ = std::move(next);
  }

  R operator()(const Type& t, Args... args) const {
    auto table = snapshot();
    const Entry* e = find(*table, t);
    if (e == nullptr) {
      throw Error(ErrorKind::NotSupported, doc_ + ": type not supported: " + t.to_string());
    }
    return e->fn(t, std::forward<Args>(args)...);
  }

  // Pattern of the case `operator()` would run for `t`.
  std::optional<Type> resolve(const Type& t) const {
    auto table = snapshot();
    if (const Entry* e = find(*table, t)) return e->pattern;
    return std::nullopt;
  }

  bool supports(const Type& t) const { return resolve(t).has_value(); }

  // Number of case patterns tested against a query so far.
  std::size_t probes() const noexcept { return probes_.load(std::memory_order_relaxed); }
  void reset_probes() noexcept { probes_.store(0, std::memory_order_relaxed); }

 private:
  struct Entry {
    Type pattern;
    Case fn;
  };
  struct Table {
    std::unordered_map<TypeConRef, std::vector<Entry>> buckets;
    std::vector<Entry> wildcard;
  };

  std::shared_ptr<const Table> snapshot() const {
    std::lock_guard lock(read_mu_);
    return table_;
  }

  const Entry* find(const Table& table, const Type& t) const {
    if (!t.is_any()) {
      if (auto it = table.buckets.find(t.head()); it != table.buckets.end()) {
        for (const Entry& e : it->second) {
          probes_.fetch_add(1, std::memory_order_relaxed);
          if (matches(e.pattern, t)) return &e;
        }
      }
    }
    if (!table.wildcard.empty()) {
      probes_.fetch_add(1, std::memory_order_relaxed);
      return &table.wildcard.front();
    }
    return nullptr;
  }

  std::string doc_;
  std::mutex write_mu_;
  mutable std::mutex read_mu_;
  std::shared_ptr<const Table> table_;
  mutable std::atomic<std::size_t> probes_{0};
};

}  // namespace reflectix
