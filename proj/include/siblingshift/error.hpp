// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace siblingshift {

enum class ErrorKind {
  invalid_argument,
  dimension_mismatch,
  duplicate_word,
  unknown_word,
  io,
  checksum_mismatch,
  truncated,
  non_finite,
  degenerate_count,
  not_invertible,
  incompatible_config,
  empty_input,
  constant_input,
};

std::string_view to_string(ErrorKind kind);

/// Every failure surfaced by the library carries a kind so callers (and
/// tests) can branch on it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace siblingshift
