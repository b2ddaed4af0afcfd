// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "siblingshift/archive.hpp"
#include "siblingshift/distribution.hpp"

namespace siblingshift::fixture {

/// Row-major N x d standard normal draws.
Cloud normal_rows(std::size_t n, std::size_t d, std::mt19937_64& rng, double sigma = 1.0);

SiblingSet make_set(const std::string& word, const std::string& corpus_id, const Cloud& rows);

/// Shifts rows so their float32 column means equal `target` as closely as
/// float32 storage allows.
Cloud recenter(Cloud rows, const Eigen::VectorXd& target);

/// Two corpora sharing a list of stable words, one replacement word (large
/// mean shift) and one addition word (corpus 2 gains remote modes while its
/// mean barely moves).
struct ChangeCorpora {
  std::vector<SiblingSet> corpus1;
  std::vector<SiblingSet> corpus2;
  std::vector<std::string> stable;
  std::string addition = "addition";
  std::string replacement = "replacement";
  std::size_t dim = 0;

  std::vector<std::string> words() const;
};

/// d = 16, N = 200 per corpus. Stable word k has mean drift of max-abs
/// 0.002 (k + 1); the addition word drifts by 0.005.
ChangeCorpora make_change_corpora(std::uint64_t seed = 20240917, std::size_t stable_words = 12);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace siblingshift::fixture
