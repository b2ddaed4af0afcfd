// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace siblingshift::detail {

// float32 values <-> little-endian bytes, regardless of host byte order.
std::vector<std::byte> to_le_bytes(std::span<const float> values);
void from_le_bytes(std::span<const std::byte> bytes, std::span<float> values);

std::vector<std::byte> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes);
/// Writes to a sibling temp file then renames over `path`.
void write_text_atomically(const std::filesystem::path& path, const std::string& text);

}  // namespace siblingshift::detail
