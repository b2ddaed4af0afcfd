// SPDX-License-Identifier: Apache-2.0
#include "siblingshift/archive.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "detail/binary_io.hpp"
#include "siblingshift/checksum.hpp"
#include "siblingshift/error.hpp"

namespace siblingshift {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::span<const float> values_of(const EmbeddingMatrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return s;
}

json to_json(const ArchiveManifest& m) {
  json words = json::array();
  for (const auto& e : m.words) {
    words.push_back({{"surface", e.surface},
                     {"count", e.count},
                     {"file", e.file},
                     {"checksum", to_hex(e.checksum)}});
  }
  return {{"schema_version", m.schema_version},
          {"corpus_id", m.corpus_id},
          {"dim", m.dim},
          {"layer_mode", m.layer_mode.token()},
          {"checksum_algorithm", "fnv1a64"},
          {"payload", "float32-le-row-major"},
          {"words", std::move(words)}};
}

template <typename T>
T required(const json& j, const char* key, const fs::path& where) {
  if (!j.contains(key)) {
    throw Error(ErrorKind::invalid_argument,
                where.string() + ": manifest field '" + key + "' missing");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::invalid_argument,
                where.string() + ": manifest field '" + key + "': " + e.what());
  }
}

}  // namespace

LayerMode LayerMode::parse(std::string_view token) {
  if (token == "last") return last();
  if (token == "mean-last-four") return mean_last_four();
  return other(std::string(token));
}

std::string LayerMode::token() const {
  switch (kind_) {
    case Kind::last: return "last";
    case Kind::mean_last_four: return "mean-last-four";
    case Kind::other: return label_;
  }
  return label_;
}

void validate(const SiblingSet& set) {
  if (set.count() == 0 || set.dim() == 0) {
    throw Error(ErrorKind::empty_input,
                "sibling set '" + set.word + "' has no rows or no columns");
  }
  if (!set.embeddings.allFinite()) {
    throw Error(ErrorKind::non_finite,
                "sibling set '" + set.word + "' has non-finite entries");
  }
}

const ManifestEntry* ArchiveManifest::find(std::string_view surface) const {
  auto it = std::find_if(words.begin(), words.end(),
                         [&](const ManifestEntry& e) { return e.surface == surface; });
  return it == words.end() ? nullptr : &*it;
}

std::vector<std::string> ArchiveManifest::surfaces() const {
  std::vector<std::string> out;
  out.reserve(words.size());
  for (const auto& e : words) out.push_back(e.surface);
  return out;
}

std::string payload_file_name(std::string_view surface) {
  static constexpr char kDigits[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : surface) {
    if (std::isalnum(c) || c == '_' || c == '-') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kDigits[c >> 4]);
      out.push_back(kDigits[c & 0xf]);
    }
  }
  return out + std::string(kPayloadExtension);
}

std::uint64_t payload_checksum(const EmbeddingMatrix& embeddings) {
  return fnv1a64(detail::to_le_bytes(values_of(embeddings)));
}

ArchiveManifest write_archive(std::span<const SiblingSet> sets,
                              const fs::path& dir,
                              const std::optional<ArchiveHeader>& header) {
  ArchiveManifest manifest;
  if (header) {
    manifest.corpus_id = header->corpus_id;
    manifest.dim = header->dim;
    manifest.layer_mode = header->layer_mode;
  } else if (!sets.empty()) {
    manifest.corpus_id = sets.front().corpus_id;
    manifest.dim = sets.front().dim();
    manifest.layer_mode = sets.front().layer_mode;
  }

  std::set<std::string> seen;
  for (const auto& s : sets) {
    validate(s);
    if (s.dim() != manifest.dim) {
      throw Error(ErrorKind::dimension_mismatch,
                  "word '" + s.word + "' has dim " + std::to_string(s.dim()) +
                      ", archive dim is " + std::to_string(manifest.dim));
    }
    if (s.corpus_id != manifest.corpus_id) {
      throw Error(ErrorKind::invalid_argument,
                  "word '" + s.word + "' belongs to corpus '" + s.corpus_id +
                      "', archive corpus is '" + manifest.corpus_id + "'");
    }
    if (!seen.insert(s.word).second) {
      throw Error(ErrorKind::duplicate_word, "duplicate word '" + s.word + "'");
    }
  }

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
  }

  // Case-folding file systems would merge "Cell.f32" and "cell.f32".
  std::set<std::string> used_files;
  for (const auto& s : sets) {
    std::string file = payload_file_name(s.word);
    for (int k = 1; !used_files.insert(lowercase(file)).second; ++k) {
      file = payload_file_name(s.word + "~" + std::to_string(k));
    }
    const auto bytes = detail::to_le_bytes(values_of(s.embeddings));
    detail::write_file(dir / file, bytes);
    manifest.words.push_back({s.word, s.count(), file, fnv1a64(bytes)});
  }

  detail::write_text_atomically(dir / kManifestFileName, to_json(manifest).dump(2) + "\n");
  manifest.root = dir;
  return manifest;
}

ArchiveManifest read_manifest(const fs::path& dir) {
  const fs::path path = dir / kManifestFileName;
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::io, "cannot open " + path.string());
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::invalid_argument, path.string() + ": " + e.what());
  }

  ArchiveManifest m;
  m.root = dir;
  m.schema_version = required<int>(j, "schema_version", path);
  if (m.schema_version != ArchiveManifest::kSchemaVersion) {
    throw Error(ErrorKind::invalid_argument,
                path.string() + ": unsupported schema_version " +
                    std::to_string(m.schema_version));
  }
  m.corpus_id = required<std::string>(j, "corpus_id", path);
  m.dim = required<std::size_t>(j, "dim", path);
  m.layer_mode = LayerMode::parse(required<std::string>(j, "layer_mode", path));
  if (j.contains("checksum_algorithm") && j["checksum_algorithm"] != "fnv1a64") {
    throw Error(ErrorKind::invalid_argument,
                path.string() + ": unsupported checksum_algorithm");
  }

  std::set<std::string> seen;
  for (const auto& w : required<json>(j, "words", path)) {
    ManifestEntry e;
    e.surface = required<std::string>(w, "surface", path);
    e.count = required<std::size_t>(w, "count", path);
    e.file = required<std::string>(w, "file", path);
    e.checksum = from_hex(required<std::string>(w, "checksum", path));
    const fs::path file(e.file);
    if (e.file.empty() || file.has_parent_path() || file.is_absolute() || e.file == "." ||
        e.file == "..") {
      throw Error(ErrorKind::invalid_argument,
                  path.string() + ": payload file '" + e.file + "' is not a plain file name");
    }
    if (!seen.insert(e.surface).second) {
      throw Error(ErrorKind::duplicate_word,
                  path.string() + ": duplicate word '" + e.surface + "'");
    }
    m.words.push_back(std::move(e));
  }
  if (!m.words.empty() && m.dim == 0) {
    throw Error(ErrorKind::invalid_argument, path.string() + ": dim must be positive");
  }
  return m;
}

SiblingSet read_sibling_set(const ArchiveManifest& manifest, std::string_view word) {
  const ManifestEntry* entry = manifest.find(word);
  if (entry == nullptr) {
    throw Error(ErrorKind::unknown_word,
                "word '" + std::string(word) + "' not in archive " +
                    manifest.root.string());
  }
  if (entry->count == 0) {
    // Extractors record absent targets as zero-count entries.
    throw Error(ErrorKind::empty_input, "word '" + entry->surface + "' has no occurrences in " +
                                            manifest.root.string());
  }
  const fs::path path = manifest.root / entry->file;
  const auto bytes = detail::read_file(path);
  const std::size_t expected = entry->count * manifest.dim * sizeof(float);
  if (bytes.size() != expected) {
    std::ostringstream msg;
    msg << path.string() << ": " << bytes.size() << " bytes, expected "
        << expected << " (" << entry->count << " x " << manifest.dim
        << " float32)";
    throw Error(ErrorKind::truncated, msg.str());
  }
  if (fnv1a64(bytes) != entry->checksum) {
    throw Error(ErrorKind::checksum_mismatch,
                path.string() + ": checksum " + to_hex(fnv1a64(bytes)) +
                    " does not match manifest " + to_hex(entry->checksum));
  }

  SiblingSet set;
  set.word = entry->surface;
  set.corpus_id = manifest.corpus_id;
  set.layer_mode = manifest.layer_mode;
  set.embeddings.resize(static_cast<Eigen::Index>(entry->count),
                        static_cast<Eigen::Index>(manifest.dim));
  detail::from_le_bytes(
      bytes, {set.embeddings.data(), static_cast<std::size_t>(set.embeddings.size())});
  if (!set.embeddings.allFinite()) {
    throw Error(ErrorKind::non_finite,
                path.string() + ": payload contains non-finite values");
  }
  return set;
}

}  // namespace siblingshift
