// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace siblingshift {

/// Row-major N x d block of float32 token embeddings, laid out exactly as
/// the on-disk payload.
using EmbeddingMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Which hidden layers the extractor pooled. Carried as metadata only.
class LayerMode {
 public:
  enum class Kind { last, mean_last_four, other };

  LayerMode() = default;
  static LayerMode last() { return LayerMode(Kind::last, {}); }
  static LayerMode mean_last_four() { return LayerMode(Kind::mean_last_four, {}); }
  static LayerMode other(std::string label) {
    return LayerMode(Kind::other, std::move(label));
  }
  /// "last" and "mean-last-four" map to their kinds; any other token is kept
  /// verbatim as Kind::other.
  static LayerMode parse(std::string_view token);

  Kind kind() const noexcept { return kind_; }
  std::string token() const;

  friend bool operator==(const LayerMode&, const LayerMode&) = default;

 private:
  LayerMode(Kind kind, std::string label)
      : kind_(kind), label_(std::move(label)) {}

  Kind kind_ = Kind::last;
  std::string label_;
};

/// All token embeddings of one word in one corpus.
struct SiblingSet {
  std::string word;
  std::string corpus_id;
  EmbeddingMatrix embeddings;
  LayerMode layer_mode;

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(embeddings.rows());
  }
  std::size_t dim() const noexcept {
    return static_cast<std::size_t>(embeddings.cols());
  }
};

/// Throws unless N >= 1, d >= 1 and every entry is finite.
void validate(const SiblingSet& set);

struct ManifestEntry {
  std::string surface;
  std::size_t count = 0;
  std::string file;  // relative to the archive directory
  std::uint64_t checksum = 0;
};

struct ArchiveManifest {
  static constexpr int kSchemaVersion = 1;

  int schema_version = kSchemaVersion;
  std::string corpus_id;
  std::size_t dim = 0;
  LayerMode layer_mode;
  std::vector<ManifestEntry> words;
  /// Directory the manifest was read from or written to; not serialized.
  std::filesystem::path root;

  const ManifestEntry* find(std::string_view surface) const;
  std::vector<std::string> surfaces() const;
};

/// Header used when the set list cannot supply one (empty archives).
struct ArchiveHeader {
  std::string corpus_id;
  std::size_t dim = 0;
  LayerMode layer_mode;
};

inline constexpr std::string_view kManifestFileName = "manifest";
inline constexpr std::string_view kPayloadExtension = ".f32";

/// Writes one little-endian float32 payload per set plus the manifest. The
/// manifest is written last, so a directory with a manifest is complete.
ArchiveManifest write_archive(std::span<const SiblingSet> sets,
                              const std::filesystem::path& dir,
                              const std::optional<ArchiveHeader>& header = {});

ArchiveManifest read_manifest(const std::filesystem::path& dir);

/// Loads and fully validates one word: byte length, then checksum, then
/// finiteness.
SiblingSet read_sibling_set(const ArchiveManifest& manifest,
                            std::string_view word);

/// Percent-encodes everything outside [A-Za-z0-9_-] so any surface form maps
/// to a portable file name.
std::string payload_file_name(std::string_view surface);

/// FNV-1a over the raw payload bytes as stored on disk.
std::uint64_t payload_checksum(const EmbeddingMatrix& embeddings);

}  // namespace siblingshift
