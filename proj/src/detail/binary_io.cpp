// SPDX-License-Identifier: Apache-2.0
#include "detail/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "siblingshift/error.hpp"

namespace siblingshift::detail {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

namespace {

void swap_words(std::span<std::byte> bytes) {
  for (std::size_t i = 0; i + 3 < bytes.size(); i += 4) {
    std::swap(bytes[i], bytes[i + 3]);
    std::swap(bytes[i + 1], bytes[i + 2]);
  }
}

}  // namespace

std::vector<std::byte> to_le_bytes(std::span<const float> values) {
  std::vector<std::byte> bytes(values.size_bytes());
  if (!bytes.empty()) std::memcpy(bytes.data(), values.data(), bytes.size());
  if constexpr (std::endian::native == std::endian::big) swap_words(bytes);
  return bytes;
}

void from_le_bytes(std::span<const std::byte> bytes, std::span<float> values) {
  if (bytes.size() != values.size_bytes()) {
    throw Error(ErrorKind::truncated, "payload size does not match destination");
  }
  if (!bytes.empty()) std::memcpy(values.data(), bytes.data(), bytes.size());
  if constexpr (std::endian::native == std::endian::big) {
    swap_words(std::as_writable_bytes(values));
  }
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::io, "cannot open " + path.string());
  }
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::byte> bytes(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()),
                           static_cast<std::streamsize>(size))) {
    throw Error(ErrorKind::io, "cannot read " + path.string());
  }
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorKind::io, "cannot create " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error(ErrorKind::io, "cannot write " + path.string());
  }
}

void write_text_atomically(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << text;
    if (!out) {
      throw Error(ErrorKind::io, "cannot write " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw Error(ErrorKind::io, "cannot finalize " + path.string() + ": " + ec.message());
  }
}

}  // namespace siblingshift::detail
