// SPDX-License-Identifier: Apache-2.0
#include "siblingshift/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "siblingshift/error.hpp"

namespace siblingshift {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<bool> parse_flag(const std::string& text, std::size_t line_no) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t == "1" || t == "true" || t == "yes") return true;
  if (t == "0" || t == "false" || t == "no") return false;
  throw Error(ErrorKind::invalid_argument,
              "gold line " + std::to_string(line_no) + ": bad change flag '" + text + "'");
}

}  // namespace

GoldRanking parse_gold(std::istream& in) {
  GoldRanking gold;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;

    std::vector<std::string> fields;
    std::stringstream ss(t);
    for (std::string f; std::getline(ss, f, '\t');) fields.push_back(trim(f));
    if (fields.size() < 2 || fields.size() > 3) {
      throw Error(ErrorKind::invalid_argument,
                  "gold line " + std::to_string(line_no) + ": expected 2 or 3 tab-separated fields");
    }
    GoldEntry e;
    e.word = fields[0];
    const auto& num = fields[1];
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), e.graded_score);
    if (ec != std::errc{} || ptr != num.data() + num.size() || !std::isfinite(e.graded_score)) {
      throw Error(ErrorKind::invalid_argument,
                  "gold line " + std::to_string(line_no) + ": bad graded score '" + num + "'");
    }
    if (fields.size() == 3) e.changed = parse_flag(fields[2], line_no);
    if (!seen.insert(e.word).second) {
      throw Error(ErrorKind::duplicate_word,
                  "gold line " + std::to_string(line_no) + ": duplicate word '" + e.word + "'");
    }
    gold.entries.push_back(std::move(e));
  }
  return gold;
}

GoldRanking read_gold(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::io, "cannot open " + path.string());
  }
  return parse_gold(in);
}

std::vector<double> average_ranks(std::span<const double> values, bool descending) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return descending ? values[a] > values[b] : values[a] < values[b];
  });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 (0-based) share the mean of ranks i+1..j.
    const double shared = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = shared;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> gold, std::span<const double> predicted) {
  if (gold.size() != predicted.size()) {
    throw Error(ErrorKind::dimension_mismatch,
                "spearman inputs have lengths " + std::to_string(gold.size()) + " and " +
                    std::to_string(predicted.size()));
  }
  if (gold.size() < 2) {
    throw Error(ErrorKind::empty_input, "spearman needs at least two pairs");
  }
  const auto rx = average_ranks(gold, true);
  const auto ry = average_ranks(predicted, true);
  const auto n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorKind::constant_input, "spearman is undefined for a constant input");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

FisherResult fisher_significance(double r1, double r2, std::size_t n1, std::size_t n2) {
  if (!(std::abs(r1) < 1.0) || !(std::abs(r2) < 1.0)) {
    throw Error(ErrorKind::invalid_argument, "Fisher transformation needs |r| < 1");
  }
  if (n1 <= 3 || n2 <= 3) {
    throw Error(ErrorKind::invalid_argument, "Fisher transformation needs n > 3");
  }
  if (r1 == r2) return {0.0, 1.0};
  const double se = std::sqrt(1.0 / static_cast<double>(n1 - 3) +
                              1.0 / static_cast<double>(n2 - 3));
  const double z = (std::atanh(r1) - std::atanh(r2)) / se;
  return {z, std::erfc(std::abs(z) / std::sqrt(2.0))};
}

EvalResult evaluate(const ScoreReport& report, const GoldRanking& gold, std::size_t column) {
  if (column >= report.columns.size()) {
    throw Error(ErrorKind::invalid_argument, "report column index out of range");
  }
  std::unordered_map<std::string, double> predicted;
  for (const auto& row : report.rows) predicted.emplace(row.word, row.scores[column]);

  EvalResult result;
  std::vector<double> g, p;
  for (const auto& e : gold.entries) {
    auto it = predicted.find(e.word);
    if (it == predicted.end()) continue;
    RankRow r;
    r.word = e.word;
    r.gold_score = e.graded_score;
    r.predicted_score = it->second;
    r.changed = e.changed;
    result.ranks.push_back(std::move(r));
    g.push_back(e.graded_score);
    p.push_back(it->second);
  }
  if (result.ranks.empty()) {
    throw Error(ErrorKind::empty_input, "no gold word appears in the report");
  }
  const auto gr = average_ranks(g, true);
  const auto pr = average_ranks(p, true);
  for (std::size_t i = 0; i < result.ranks.size(); ++i) {
    result.ranks[i].gold_rank = gr[i];
    result.ranks[i].predicted_rank = pr[i];
  }
  result.n = result.ranks.size();
  result.spearman = spearman(g, p);
  return result;
}

namespace {

std::string rank_text(double r) {
  std::ostringstream s;
  if (r == std::floor(r)) {
    s << static_cast<long long>(r);
  } else {
    s << r;
  }
  return s.str();
}

std::string flag_text(const std::optional<bool>& f) {
  if (!f) return "";
  return *f ? "1" : "0";
}

std::string fixed3(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << v;
  return s.str();
}

}  // namespace

void write_eval_tsv(const EvalResult& result, std::ostream& out) {
  out << "word\tgold_score\tpredicted_score\tgold_rank\tpredicted_rank\tchanged\n";
  for (const auto& r : result.ranks) {
    out << r.word << '\t' << std::setprecision(17) << r.gold_score << '\t'
        << r.predicted_score << '\t' << rank_text(r.gold_rank) << '\t'
        << rank_text(r.predicted_rank) << '\t' << flag_text(r.changed) << '\n';
  }
}

void write_eval_summary(const EvalResult& result, std::ostream& out,
                        const EvalResult* other) {
  out << "spearman\t" << fixed3(result.spearman) << '\n';
  out << "n\t" << result.n << '\n';
  if (other != nullptr) {
    out << "spearman_other\t" << fixed3(other->spearman) << '\n';
    out << "n_other\t" << other->n << '\n';
    if (std::abs(result.spearman) < 1.0 && std::abs(other->spearman) < 1.0 && result.n > 3 &&
        other->n > 3) {
      const auto f = fisher_significance(result.spearman, other->spearman, result.n, other->n);
      out << "fisher_z\t" << fixed3(f.z) << '\n';
      out << "p_value\t" << fixed3(f.p) << '\n';
      out << "significant_at_0.05\t" << (f.p < 0.05 ? "yes" : "no") << '\n';
    } else {
      out << "fisher_z\tundefined\n";
    }
  }
}

AblationTable build_ablation(const GoldRanking& gold, const ScoreReport& mean_only,
                             const ScoreReport& identity_cov, const ScoreReport& full) {
  const std::array<const ScoreReport*, 3> reports{&mean_only, &identity_cov, &full};
  std::array<std::unordered_map<std::string, double>, 3> lookup;
  for (std::size_t v = 0; v < 3; ++v) {
    for (const auto& row : reports[v]->rows) lookup[v].emplace(row.word, row.scores.front());
  }
  GoldRanking common;
  for (const auto& e : gold.entries) {
    if (lookup[0].contains(e.word) && lookup[1].contains(e.word) &&
        lookup[2].contains(e.word)) {
      common.entries.push_back(e);
    }
  }
  if (common.entries.empty()) {
    throw Error(ErrorKind::empty_input, "no gold word appears in all three reports");
  }

  std::vector<double> g;
  for (const auto& e : common.entries) g.push_back(e.graded_score);
  const auto gold_ranks = average_ranks(g, true);

  AblationTable table;
  table.rows.resize(common.entries.size());
  for (std::size_t i = 0; i < common.entries.size(); ++i) {
    table.rows[i].word = common.entries[i].word;
    table.rows[i].gold_rank = gold_ranks[i];
    table.rows[i].changed = common.entries[i].changed;
  }
  for (std::size_t v = 0; v < 3; ++v) {
    std::vector<double> p;
    for (const auto& e : common.entries) p.push_back(lookup[v].at(e.word));
    const auto ranks = average_ranks(p, true);
    for (std::size_t i = 0; i < ranks.size(); ++i) table.rows[i].ranks[v] = ranks[i];
    table.spearman[v] = spearman(g, p);
  }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const AblationRow& a, const AblationRow& b) {
                     return a.gold_rank < b.gold_rank;
                   });
  return table;
}

void write_ablation_tsv(const AblationTable& table, std::ostream& out) {
  out << "word\tgold_rank\tchanged\tmean_only_rank\tidentity_cov_rank\tfull_pipeline_rank\n";
  for (const auto& r : table.rows) {
    out << r.word << '\t' << rank_text(r.gold_rank) << '\t' << flag_text(r.changed);
    for (double rank : r.ranks) out << '\t' << rank_text(rank);
    out << '\n';
  }
  out << "Spearman\t1.000\t";
  for (double s : table.spearman) out << '\t' << fixed3(s);
  out << '\n';
}

}  // namespace siblingshift
