#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vrld/error.hpp"

namespace vrld {

using Reals = std::vector<double>;
using Strings = std::vector<std::string>;

/// A typed parameter value. The type tags used by the config format are
/// bool, int, real, str, reals and strs, in that order.
using Value = std::variant<bool, std::int64_t, double, std::string, Reals, Strings>;

std::string_view type_name(const Value& v) noexcept;

/// Ordered key -> typed value map with checked accessors.
class ParamMap {
 public:
  ParamMap() = default;

  bool contains(std::string_view key) const { return values_.find(std::string(key)) != values_.end(); }
  bool empty() const noexcept { return values_.empty(); }
  void set(std::string key, Value v) { values_[std::move(key)] = std::move(v); }
  void erase(std::string_view key) { values_.erase(std::string(key)); }
  const std::map<std::string, Value>& entries() const noexcept { return values_; }

  /// Typed lookup. Ints are accepted where a real is requested.
  template <typename T>
  std::optional<T> find(std::string_view key) const;

  template <typename T>
  T get(std::string_view key, T fallback) const {
    auto v = find<T>(key);
    return v ? *v : fallback;
  }

  template <typename T>
  T require(std::string_view key) const {
    auto v = find<T>(key);
    if (!v) fail(ErrorKind::Config, "missing required parameter '" + std::string(key) + "'");
    return *v;
  }

  /// Throws a Config error naming every key not in `allowed`.
  void check_keys(std::initializer_list<std::string_view> allowed, std::string_view where) const;

  bool operator==(const ParamMap&) const = default;

 private:
  std::map<std::string, Value> values_;
};

}  // namespace vrld
