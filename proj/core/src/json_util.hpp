// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

// Internal helpers shared by the config, document and report codecs.

#ifndef HYBRIDPRUNE_SRC_JSON_UTIL_HPP
#define HYBRIDPRUNE_SRC_JSON_UTIL_HPP

#include <set>
#include <string>
#include <type_traits>

#include "hybridprune/error.hpp"
#include "hybridprune/supernet.hpp"
#include "hybridprune/tasks.hpp"
#include "json.hpp"

namespace hybridprune::detail {

using json = nlohmann::json;

// Reads fields of one JSON object and rejects keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) fail(ErrorKind::Parse, context_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) fail(ErrorKind::Parse, context_ + ": missing key '" + key + "'");
    return j_.at(key);
  }

  template <typename T>
  T required(const std::string& key) {
    return convert<T>(raw(key), key);
  }

  template <typename T>
  T optional(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    return convert<T>(j_.at(key), key);
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) fail(ErrorKind::Parse, context_ + ": unknown key '" + key + "'");
    }
  }

  const std::string& context() const { return context_; }

 private:
  template <typename T>
  T convert(const json& v, const std::string& key) const {
    try {
      if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0)) {
          fail(ErrorKind::Parse, context_ + "." + key + ": expected a non-negative integer");
        }
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      fail(ErrorKind::Parse, context_ + "." + key + ": " + e.what());
    }
  }

  const json& j_;
  std::string context_;
  std::set<std::string> seen_;
};

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view text);

json supernet_to_json(const SupernetConfig& c);
// Reads the architecture fields; task-derived dimensions are read only when
// `with_task_dims` is set.
SupernetConfig supernet_from_json(const json& j, const std::string& context, bool with_task_dims);

json task_to_json(const SyntheticTaskSpec& t);
SyntheticTaskSpec task_from_json(const json& j, const std::string& context);

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace hybridprune::detail

#endif  // HYBRIDPRUNE_SRC_JSON_UTIL_HPP
