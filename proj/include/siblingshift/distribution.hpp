// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "siblingshift/archive.hpp"

namespace siblingshift {

/// Row-major M x d block of double-precision points (sampled or raw siblings).
using Cloud = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class CovMode { diag, full };

/// `centered` is the unbiased sample covariance of mean-centered rows.
/// `paper_literal` is (1 / (N (N - 1))) * sum f f^T over the raw rows, with no
/// centering.
enum class Estimator { centered, paper_literal };

std::string_view to_string(CovMode mode);
std::string_view to_string(Estimator estimator);
CovMode parse_cov_mode(std::string_view token);
/// Accepts "centered", "literal" and "paper-literal".
Estimator parse_estimator(std::string_view token);

/// Either a d-vector of variances (diag) or a symmetric d x d matrix (full).
class CovarianceRep {
 public:
  CovarianceRep() = default;
  static CovarianceRep diagonal(Eigen::VectorXd variances,
                                Estimator estimator = Estimator::centered);
  static CovarianceRep full(Eigen::MatrixXd matrix,
                            Estimator estimator = Estimator::centered);
  /// Full matrix together with a k x d row factor R satisfying R^T R ==
  /// matrix. Sampling uses R instead of decomposing the d x d matrix.
  static CovarianceRep full(Eigen::MatrixXd matrix, Eigen::MatrixXd row_factor,
                            Estimator estimator = Estimator::centered);

  CovMode mode() const noexcept { return mode_; }
  Estimator estimator() const noexcept { return estimator_; }
  std::size_t dim() const noexcept;

  /// Only valid in diag mode.
  const Eigen::VectorXd& variances() const;
  /// Only valid in full mode.
  const Eigen::MatrixXd& matrix() const;

  /// The diagonal in either mode.
  Eigen::VectorXd diagonal_entries() const;
  /// Dense d x d view in either mode.
  Eigen::MatrixXd dense() const;

  bool all_finite() const;

  /// Empty unless constructed with a row factor.
  const Eigen::MatrixXd& row_factor() const noexcept { return row_factor_; }

 private:
  CovMode mode_ = CovMode::diag;
  Estimator estimator_ = Estimator::centered;
  Eigen::VectorXd variances_;
  Eigen::MatrixXd matrix_;
  Eigen::MatrixXd row_factor_;
};

struct SiblingDistribution {
  std::string word;
  std::string corpus_id;
  Eigen::VectorXd mean;
  CovarianceRep covariance;
  std::size_t count = 0;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean.size()); }
};

struct SampleConfig {
  std::size_t num_samples = 1000;
  std::uint64_t seed = 0;
  double psd_floor = 1e-8;
};

/// Mean of the rows plus the requested covariance estimate. In full mode
/// with N < d the covariance also carries its N x d row factor.
/// Throws Error(degenerate_count) when N == 1.
SiblingDistribution fit_distribution(const SiblingSet& set, CovMode mode,
                                     Estimator estimator = Estimator::centered);

/// Fallback for single-occurrence words: mean is the lone row, covariance is
/// psd_floor * I.
SiblingDistribution floor_distribution(const SiblingSet& set, CovMode mode,
                                       Estimator estimator, double psd_floor);

/// Symmetrized covariance with every eigenvalue (full) or variance (diag)
/// raised to at least `floor`, together with a factor F such that
/// F F^T equals the repaired matrix.
struct PsdRepair {
  CovarianceRep covariance;
  /// Full mode: d x d factor. Diag mode: d x 1 standard deviations.
  Eigen::MatrixXd factor;
  bool modified = false;
};

PsdRepair repair_psd(const CovarianceRep& covariance, double floor);

/// Draws cfg.num_samples rows from N(mean, repaired covariance) by pushing
/// standard normal draws through the repair factor. Output depends only on
/// the distribution and cfg.
Cloud sample_siblings(const SiblingDistribution& dist, const SampleConfig& cfg);

/// Per-word RNG stream: seed xor FNV-1a(word, corpus_id, role). The role lets
/// both sides of a comparison draw independent streams even when the two
/// archives share a corpus id.
std::uint64_t stream_seed(std::uint64_t seed, std::string_view word,
                          std::string_view corpus_id, unsigned role = 0);

/// Numerical rank: singular values above tol times the largest one. In diag
/// mode this is the count of variances above the same relative threshold.
std::size_t covariance_rank(const SiblingDistribution& dist, double tol = 1e-10);

/// Persisted distribution cache: `index` (JSON header per word: word, dim,
/// mode, estimator, count) plus one float32 little-endian payload per word
/// holding the mean followed by the covariance (d values for diag, d*d
/// row-major for full).
void write_distribution_cache(std::span<const SiblingDistribution> dists,
                              const std::filesystem::path& dir);
std::vector<SiblingDistribution> read_distribution_cache(
    const std::filesystem::path& dir);

}  // namespace siblingshift
