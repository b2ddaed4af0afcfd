// SPDX-License-Identifier: Apache-2.0
#include "siblingshift/checksum.hpp"

#include <charconv>

#include "siblingshift/error.hpp"

namespace siblingshift {

void Fnv1a64::update(std::span<const std::byte> bytes) noexcept {
  for (std::byte b : bytes) {
    state_ ^= static_cast<std::uint64_t>(b);
    state_ *= kPrime;
  }
}

void Fnv1a64::update(std::string_view text) noexcept {
  update(std::as_bytes(std::span(text.data(), text.size())));
}

std::uint64_t fnv1a64(std::span<const std::byte> bytes) noexcept {
  Fnv1a64 h;
  h.update(bytes);
  return h.digest();
}

std::uint64_t fnv1a64(std::string_view text) noexcept {
  Fnv1a64 h;
  h.update(text);
  return h.digest();
}

std::string to_hex(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[value & 0xfU];
    value >>= 4;
  }
  return out;
}

std::uint64_t from_hex(std::string_view text) {
  std::uint64_t value = 0;
  if (text.empty() || text.size() > 16) {
    throw Error(ErrorKind::invalid_argument,
                "bad hex checksum '" + std::string(text) + "'");
  }
  auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value, 16);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::invalid_argument,
                "bad hex checksum '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace siblingshift
