// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "siblingshift/scoring.hpp"

namespace siblingshift {

struct GoldEntry {
  std::string word;
  double graded_score = 0.0;
  std::optional<bool> changed;
};

struct GoldRanking {
  std::vector<GoldEntry> entries;
};

/// TSV `word<TAB>graded_score[<TAB>changed]`; '#' lines and blank lines are
/// skipped. `changed` accepts 1/0/true/false/yes/no.
GoldRanking parse_gold(std::istream& in);
GoldRanking read_gold(const std::filesystem::path& path);

/// 1-based ranks with ties sharing the average of the positions they span.
/// Descending puts the largest value at rank 1.
std::vector<double> average_ranks(std::span<const double> values, bool descending = true);

/// Pearson correlation of the average-rank vectors.
double spearman(std::span<const double> gold, std::span<const double> predicted);

struct FisherResult {
  double z = 0.0;
  double p = 1.0;  // two-sided
};

/// Compares two correlation coefficients through atanh with standard error
/// sqrt(1/(n1-3) + 1/(n2-3)).
FisherResult fisher_significance(double r1, double r2, std::size_t n1, std::size_t n2);

struct RankRow {
  std::string word;
  double gold_rank = 0.0;
  double predicted_rank = 0.0;
  double gold_score = 0.0;
  double predicted_score = 0.0;
  std::optional<bool> changed;
};

struct EvalResult {
  double spearman = 0.0;
  std::size_t n = 0;
  std::vector<RankRow> ranks;  // in gold order
};

/// Spearman between gold graded scores and one report column, over the words
/// present in both. Ranks are recomputed within that intersection.
EvalResult evaluate(const ScoreReport& report, const GoldRanking& gold,
                    std::size_t column = 0);

void write_eval_tsv(const EvalResult& result, std::ostream& out);
/// Correlation, n, and (when `other` is given) a Fisher significance line.
void write_eval_summary(const EvalResult& result, std::ostream& out,
                        const EvalResult* other = nullptr);

/// Rank table for the mean-only / identity-cov / full-pipeline comparison.
struct AblationRow {
  std::string word;
  double gold_rank = 0.0;
  std::optional<bool> changed;
  std::array<double, 3> ranks{};  // mean-only, identity-cov, full-pipeline
};

struct AblationTable {
  std::vector<AblationRow> rows;  // ascending gold rank
  std::array<double, 3> spearman{};
};

AblationTable build_ablation(const GoldRanking& gold, const ScoreReport& mean_only,
                             const ScoreReport& identity_cov, const ScoreReport& full);

void write_ablation_tsv(const AblationTable& table, std::ostream& out);

}  // namespace siblingshift
