// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HYBRIDPRUNE_ERROR_HPP
#define HYBRIDPRUNE_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace hybridprune {

enum class ErrorKind {
  ShapeMismatch,
  InvalidArgument,
  InvalidConfig,
  Unreachable,
  Parse,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries a machine-readable kind so the
// CLI can emit a structured error record.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace hybridprune

#endif  // HYBRIDPRUNE_ERROR_HPP
