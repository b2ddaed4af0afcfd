// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace siblingshift {

// 64-bit FNV-1a. Used for archive payload checksums, config fingerprints and
// per-word RNG stream derivation, so it must stay stable across platforms.
class Fnv1a64 {
 public:
  static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
  static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

  void update(std::span<const std::byte> bytes) noexcept;
  void update(std::string_view text) noexcept;
  std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = kOffset;
};

std::uint64_t fnv1a64(std::span<const std::byte> bytes) noexcept;
std::uint64_t fnv1a64(std::string_view text) noexcept;

/// Lower-case, zero-padded 16 character hex.
std::string to_hex(std::uint64_t value);
/// Throws Error(invalid_argument) on anything but 1..16 hex digits.
std::uint64_t from_hex(std::string_view text);

}  // namespace siblingshift
