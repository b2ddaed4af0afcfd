// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "siblingshift/archive.hpp"
#include "siblingshift/distribution.hpp"
#include "siblingshift/measures.hpp"

namespace siblingshift {

enum class CloudSource { sampled, raw_apd };
/// full_pipeline: fitted mean and covariance. mean_only: distance between the
/// two mean vectors. identity_cov: sampled clouds from N(mean, I).
enum class Variant { full_pipeline, mean_only, identity_cov };
/// scalar pins the reference kernels, whose accumulation order matches a
/// plain nested loop over (i, j).
enum class KernelPath { automatic, scalar };

std::string_view to_string(CloudSource source);
std::string_view to_string(Variant variant);
std::string_view to_string(KernelPath path);
CloudSource parse_cloud_source(std::string_view token);
/// Accepts "full", "full-pipeline", "mean-only", "identity-cov".
Variant parse_variant(std::string_view token);
KernelPath parse_kernel_path(std::string_view token);

struct ScoreConfig {
  MeasureKind measure = MeasureKind::chebyshev;
  CloudSource cloud = CloudSource::sampled;
  SampleConfig sample;
  CovMode cov_mode = CovMode::full;
  Estimator estimator = Estimator::centered;
  Variant variant = Variant::full_pipeline;
  /// Covariance used inside KL / Jeffrey's. Full matrices are usually
  /// singular at d >> N, so the diagonal is the default.
  CovMode divergence_cov = CovMode::diag;
  KernelPath kernel = KernelPath::automatic;
  /// Threads splitting the rows of one word's cross product.
  unsigned workers = 1;
};

/// Stable textual form of every field that affects scores. Feeds the report
/// fingerprint.
std::string canonical_string(const ScoreConfig& cfg);

/// Throws Error(incompatible_config) for combinations that have no meaning,
/// e.g. a divergence under the mean_only variant.
void check_compatible(MeasureKind measure, const ScoreConfig& cfg);

struct PairwiseOptions {
  KernelPath kernel = KernelPath::automatic;
  unsigned workers = 1;
};

/// Mean of psi(c1_i, c2_j) over the full M1 x M2 cross product, one result
/// per requested distance measure. Each row's partial sum runs over j in
/// order and rows are combined in i order, so the result does not depend on
/// the worker count.
std::vector<double> average_pairwise_distances(std::span<const MeasureKind> measures,
                                               const Cloud& c1, const Cloud& c2,
                                               const PairwiseOptions& opts = {});

double average_pairwise_distance(MeasureKind measure, const Cloud& c1, const Cloud& c2,
                                 const PairwiseOptions& opts = {});

Cloud to_cloud(const SiblingSet& set);

struct WordScore {
  std::vector<double> scores;  // parallel to the requested measures
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  std::vector<std::string> warnings;
};

/// Scores one word for several measures at once. Sampled clouds are drawn
/// once and shared by every distance measure.
WordScore score_word(const SiblingSet& set1, const SiblingSet& set2,
                     std::span<const MeasureKind> measures, const ScoreConfig& cfg);

/// Single-measure form using cfg.measure.
double score_word(const SiblingSet& set1, const SiblingSet& set2, const ScoreConfig& cfg);

/// Scores already fitted distributions with cfg.measure (sampled clouds,
/// closed-form divergence, or the mean-only / identity variants). Raw-APD
/// needs the sibling sets and is rejected here.
double score_distributions(const SiblingDistribution& d1, const SiblingDistribution& d2,
                           const ScoreConfig& cfg);

struct ScoreRow {
  std::string word;
  std::vector<double> scores;  // parallel to ScoreReport::columns
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  std::vector<std::string> warnings;
};

struct WordError {
  std::string word;
  std::string message;
};

struct ScoreReport {
  std::string fingerprint;
  /// "score" for single-measure reports, else one measure token per column.
  std::vector<std::string> columns;
  std::vector<ScoreRow> rows;  // descending by the first column
  std::vector<WordError> errors;
  std::string config;  // canonical_string of the producing config

  /// Index of a column label; throws Error(invalid_argument) if absent.
  std::size_t column_index(std::string_view label) const;
};

/// Scores every word across two archives with up to `word_workers` words in
/// flight. Words missing from either archive (or failing to load) become
/// `errors` entries; the rest of the run continues.
ScoreReport score_corpus_pair(const ArchiveManifest& archive1,
                              const ArchiveManifest& archive2,
                              std::span<const std::string> words,
                              std::span<const MeasureKind> measures,
                              const ScoreConfig& cfg, unsigned word_workers = 1);

ScoreReport score_corpus_pair(const ArchiveManifest& archive1,
                              const ArchiveManifest& archive2,
                              std::span<const std::string> words, const ScoreConfig& cfg,
                              unsigned word_workers = 1);

/// TSV: word, one column per score, n1, n2, warnings (joined with "; ").
void write_report_tsv(const ScoreReport& report, std::ostream& out);
/// JSON document with the fingerprint and config as header fields.
void write_report_json(const ScoreReport& report, std::ostream& out);
ScoreReport read_report_tsv(std::istream& in);
ScoreReport read_report_tsv(const std::filesystem::path& path);

}  // namespace siblingshift
