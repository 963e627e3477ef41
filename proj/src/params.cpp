#include "vrld/params.hpp"

#include <algorithm>

namespace vrld {

std::string_view type_name(const Value& v) noexcept {
  constexpr std::string_view names[] = {"bool", "int", "real", "str", "reals", "strs"};
  return names[v.index()];
}

namespace {

template <typename T>
std::optional<T> convert(const Value& v, std::string_view key) {
  if (const auto* p = std::get_if<T>(&v)) return *p;
  if constexpr (std::is_same_v<T, double>) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  }
  if constexpr (std::is_same_v<T, Reals>) {
    if (const auto* d = std::get_if<double>(&v)) return Reals{*d};
    if (const auto* i = std::get_if<std::int64_t>(&v)) return Reals{static_cast<double>(*i)};
  }
  if constexpr (std::is_same_v<T, Strings>) {
    if (const auto* s = std::get_if<std::string>(&v)) return Strings{*s};
  }
  fail(ErrorKind::Config, "parameter '" + std::string(key) + "' has type " + std::string(type_name(v)) +
                              ", which does not match the expected type");
}

}  // namespace

template <typename T>
std::optional<T> ParamMap::find(std::string_view key) const {
  auto it = values_.find(std::string(key));
  if (it == values_.end()) return std::nullopt;
  return convert<T>(it->second, key);
}

template std::optional<bool> ParamMap::find<bool>(std::string_view) const;
template std::optional<std::int64_t> ParamMap::find<std::int64_t>(std::string_view) const;
template std::optional<double> ParamMap::find<double>(std::string_view) const;
template std::optional<std::string> ParamMap::find<std::string>(std::string_view) const;
template std::optional<Reals> ParamMap::find<Reals>(std::string_view) const;
template std::optional<Strings> ParamMap::find<Strings>(std::string_view) const;

void ParamMap::check_keys(std::initializer_list<std::string_view> allowed, std::string_view where) const {
  std::string bad;
  for (const auto& [key, _] : values_) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      if (!bad.empty()) bad += ", ";
      bad += key;
    }
  }
  if (!bad.empty()) fail(ErrorKind::Config, "unknown key(s) in " + std::string(where) + ": " + bad);
}

}  // namespace vrld
