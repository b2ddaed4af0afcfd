// SPDX-License-Identifier: Apache-2.0
#include "siblingshift/scoring.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "siblingshift/checksum.hpp"
#include "siblingshift/error.hpp"
#include "siblingshift/parallel.hpp"

namespace siblingshift {

std::string_view to_string(CloudSource source) {
  return source == CloudSource::sampled ? "sampled" : "raw-apd";
}

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::full_pipeline: return "full-pipeline";
    case Variant::mean_only: return "mean-only";
    case Variant::identity_cov: return "identity-cov";
  }
  return "?";
}

std::string_view to_string(KernelPath path) {
  return path == KernelPath::automatic ? "auto" : "scalar";
}

CloudSource parse_cloud_source(std::string_view t) {
  if (t == "sampled") return CloudSource::sampled;
  if (t == "raw-apd") return CloudSource::raw_apd;
  throw Error(ErrorKind::invalid_argument, "unknown cloud source '" + std::string(t) + "'");
}

Variant parse_variant(std::string_view t) {
  if (t == "full" || t == "full-pipeline") return Variant::full_pipeline;
  if (t == "mean-only") return Variant::mean_only;
  if (t == "identity-cov") return Variant::identity_cov;
  throw Error(ErrorKind::invalid_argument, "unknown variant '" + std::string(t) + "'");
}

KernelPath parse_kernel_path(std::string_view t) {
  if (t == "auto") return KernelPath::automatic;
  if (t == "scalar") return KernelPath::scalar;
  throw Error(ErrorKind::invalid_argument, "unknown kernel path '" + std::string(t) + "'");
}

namespace {

const kernels::KernelTable& kernel_table(KernelPath path) {
  return path == KernelPath::scalar ? kernels::scalar_table() : kernels::active_table();
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::string canonical_string(const ScoreConfig& cfg) {
  std::ostringstream s;
  s << "measure=" << token(cfg.measure) << ";cloud=" << to_string(cfg.cloud)
    << ";samples=" << cfg.sample.num_samples << ";seed=" << cfg.sample.seed
    << ";psd_floor=" << format_double(cfg.sample.psd_floor)
    << ";cov=" << to_string(cfg.cov_mode) << ";estimator=" << to_string(cfg.estimator)
    << ";variant=" << to_string(cfg.variant)
    << ";divergence_cov=" << to_string(cfg.divergence_cov)
    << ";kernel=" << kernels::to_string(kernel_table(cfg.kernel).isa);
  return s.str();
}

void check_compatible(MeasureKind measure, const ScoreConfig& cfg) {
  if (is_divergence(measure) && cfg.variant == Variant::mean_only) {
    throw Error(ErrorKind::incompatible_config,
                std::string(token(measure)) +
                    " compares distributions; the mean-only variant has none");
  }
  if (cfg.sample.num_samples == 0) {
    throw Error(ErrorKind::incompatible_config, "num_samples must be at least 1");
  }
  if (!(cfg.sample.psd_floor > 0.0) || !std::isfinite(cfg.sample.psd_floor)) {
    throw Error(ErrorKind::incompatible_config, "psd_floor must be positive and finite");
  }
}

Cloud to_cloud(const SiblingSet& set) { return set.embeddings.cast<double>(); }

namespace {

// Per-pair evaluation for one measure over two prepared clouds.
struct PreparedPair {
  MeasureKind kind;
  const kernels::KernelTable* table;
  const Cloud* a;
  const Cloud* b;
  std::size_t dim;
  Cloud centered_a, centered_b;
  Eigen::VectorXd norm_a, norm_b;

  PreparedPair(MeasureKind k, const kernels::KernelTable& t, const Cloud& c1, const Cloud& c2)
      : kind(k), table(&t), a(&c1), b(&c2), dim(static_cast<std::size_t>(c1.cols())) {
    if (kind == MeasureKind::cosine) {
      norm_a = norms(c1);
      norm_b = norms(c2);
    } else if (kind == MeasureKind::correlation) {
      center(c1, centered_a, norm_a);
      center(c2, centered_b, norm_b);
      a = &centered_a;
      b = &centered_b;
    }
  }

  Eigen::VectorXd norms(const Cloud& c) const {
    Eigen::VectorXd out(c.rows());
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      const double* r = c.row(i).data();
      out(i) = std::sqrt(table->dot(r, r, dim));
    }
    return out;
  }

  void center(const Cloud& c, Cloud& out, Eigen::VectorXd& n) const {
    out.resize(c.rows(), c.cols());
    n.resize(c.rows());
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      n(i) = centered_norm({c.row(i).data(), dim}, {out.row(i).data(), dim});
    }
  }

  double operator()(Eigen::Index i, Eigen::Index j) const {
    const double* x = a->row(i).data();
    const double* y = b->row(j).data();
    switch (kind) {
      case MeasureKind::bray_curtis: return table->bray_curtis(x, y, dim);
      case MeasureKind::canberra: return table->canberra(x, y, dim);
      case MeasureKind::chebyshev: return table->chebyshev(x, y, dim);
      case MeasureKind::city_block: return table->city_block(x, y, dim);
      case MeasureKind::euclidean: return std::sqrt(table->squared_l2(x, y, dim));
      case MeasureKind::cosine:
      case MeasureKind::correlation:
        return angular_distance(table->dot(x, y, dim), norm_a(i), norm_b(j));
      default: return std::nan("");
    }
  }
};

constexpr Eigen::Index kRowTile = 8;
// 128 rows of d = 768 doubles stay resident in a typical L2.
constexpr Eigen::Index kColTile = 128;

}  // namespace

std::vector<double> average_pairwise_distances(std::span<const MeasureKind> measures,
                                               const Cloud& c1, const Cloud& c2,
                                               const PairwiseOptions& opts) {
  if (c1.cols() != c2.cols()) {
    throw Error(ErrorKind::dimension_mismatch,
                "clouds of dims " + std::to_string(c1.cols()) + " and " +
                    std::to_string(c2.cols()));
  }
  if (c1.rows() == 0 || c2.rows() == 0) {
    throw Error(ErrorKind::empty_input, "pairwise distance over an empty cloud");
  }
  const auto& table = kernel_table(opts.kernel);
  const Eigen::Index m1 = c1.rows();
  const Eigen::Index m2 = c2.rows();
  const auto tiles = static_cast<std::size_t>((m1 + kRowTile - 1) / kRowTile);

  std::vector<double> out;
  out.reserve(measures.size());
  std::vector<double> row_sums(static_cast<std::size_t>(m1));
  for (MeasureKind kind : measures) {
    if (is_divergence(kind)) {
      throw Error(ErrorKind::incompatible_config,
                  std::string(token(kind)) + " is not a vector distance");
    }
    const PreparedPair pair(kind, table, c1, c2);
    std::fill(row_sums.begin(), row_sums.end(), 0.0);
    parallel_for(tiles, std::max(1U, opts.workers), [&](std::size_t tile) {
      const Eigen::Index r0 = static_cast<Eigen::Index>(tile) * kRowTile;
      const Eigen::Index r1 = std::min(m1, r0 + kRowTile);
      for (Eigen::Index j0 = 0; j0 < m2; j0 += kColTile) {
        const Eigen::Index j1 = std::min(m2, j0 + kColTile);
        for (Eigen::Index i = r0; i < r1; ++i) {
          double s = row_sums[static_cast<std::size_t>(i)];
          for (Eigen::Index j = j0; j < j1; ++j) s += pair(i, j);
          row_sums[static_cast<std::size_t>(i)] = s;
        }
      }
    });
    double total = 0.0;
    for (double s : row_sums) total += s;
    out.push_back(total / (static_cast<double>(m1) * static_cast<double>(m2)));
  }
  return out;
}

double average_pairwise_distance(MeasureKind measure, const Cloud& c1, const Cloud& c2,
                                 const PairwiseOptions& opts) {
  return average_pairwise_distances(std::span(&measure, 1), c1, c2, opts).front();
}

namespace {

SiblingDistribution mean_with_identity(const SiblingSet& set) {
  SiblingDistribution dist;
  dist.word = set.word;
  dist.corpus_id = set.corpus_id;
  dist.count = set.count();
  dist.mean = set.embeddings.cast<double>().colwise().mean().transpose();
  dist.covariance =
      CovarianceRep::diagonal(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(set.dim())));
  return dist;
}

SiblingDistribution with_identity(SiblingDistribution dist) {
  dist.covariance = CovarianceRep::diagonal(Eigen::VectorXd::Ones(dist.mean.size()));
  return dist;
}

SiblingDistribution fit_or_floor(const SiblingSet& set, const ScoreConfig& cfg,
                                 std::vector<std::string>& warnings, const char* side) {
  try {
    return fit_distribution(set, cfg.cov_mode, cfg.estimator);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::degenerate_count) throw;
    warnings.push_back(std::string(side) + "=1: covariance replaced by psd_floor*I");
    return floor_distribution(set, cfg.cov_mode, cfg.estimator, cfg.sample.psd_floor);
  }
}

Cloud sample_for(const SiblingDistribution& dist, const ScoreConfig& cfg, unsigned role) {
  SampleConfig sc = cfg.sample;
  sc.seed = stream_seed(cfg.sample.seed, dist.word, dist.corpus_id, role);
  return sample_siblings(dist, sc);
}

// Fills the distance-measure and divergence slots of `scores` from a pair of
// distributions (sampled / mean-only / closed form).
void score_from_distributions(const SiblingDistribution& d1, const SiblingDistribution& d2,
                              std::span<const MeasureKind> measures, const ScoreConfig& cfg,
                              std::span<double> scores) {
  std::vector<MeasureKind> distances;
  for (MeasureKind m : measures) {
    if (!is_divergence(m)) distances.push_back(m);
  }
  std::vector<double> distance_scores;
  if (!distances.empty()) {
    if (cfg.variant == Variant::mean_only) {
      const auto& table = kernel_table(cfg.kernel);
      const auto d = static_cast<std::size_t>(d1.mean.size());
      for (MeasureKind m : distances) {
        distance_scores.push_back(
            distance(m, {d1.mean.data(), d}, {d2.mean.data(), d}, table));
      }
    } else {
      const Cloud c1 = sample_for(d1, cfg, 1);
      const Cloud c2 = sample_for(d2, cfg, 2);
      distance_scores =
          average_pairwise_distances(distances, c1, c2, {cfg.kernel, cfg.workers});
    }
  }
  const DivergenceOptions div_opts{cfg.divergence_cov, cfg.sample.psd_floor};
  std::size_t next_distance = 0;
  for (std::size_t k = 0; k < measures.size(); ++k) {
    scores[k] = is_divergence(measures[k]) ? divergence(measures[k], d1, d2, div_opts)
                                           : distance_scores[next_distance++];
  }
}

}  // namespace

WordScore score_word(const SiblingSet& set1, const SiblingSet& set2,
                     std::span<const MeasureKind> measures, const ScoreConfig& cfg) {
  if (measures.empty()) {
    throw Error(ErrorKind::invalid_argument, "no measures requested");
  }
  for (MeasureKind m : measures) check_compatible(m, cfg);
  validate(set1);
  validate(set2);
  if (set1.dim() != set2.dim()) {
    throw Error(ErrorKind::dimension_mismatch,
                "word '" + set1.word + "' has dims " + std::to_string(set1.dim()) + " and " +
                    std::to_string(set2.dim()));
  }

  WordScore out;
  out.n1 = set1.count();
  out.n2 = set2.count();
  out.scores.assign(measures.size(), 0.0);

  const bool any_divergence = std::any_of(measures.begin(), measures.end(), is_divergence);
  if (cfg.variant == Variant::full_pipeline && cfg.cloud == CloudSource::raw_apd) {
    // Distances run on the actual siblings; only divergences need a fit.
    std::vector<MeasureKind> distances;
    for (MeasureKind m : measures) {
      if (!is_divergence(m)) distances.push_back(m);
    }
    std::vector<double> raw;
    if (!distances.empty()) {
      raw = average_pairwise_distances(distances, to_cloud(set1), to_cloud(set2),
                                       {cfg.kernel, cfg.workers});
    }
    std::optional<SiblingDistribution> d1, d2;
    if (any_divergence) {
      d1 = fit_or_floor(set1, cfg, out.warnings, "n1");
      d2 = fit_or_floor(set2, cfg, out.warnings, "n2");
    }
    const DivergenceOptions div_opts{cfg.divergence_cov, cfg.sample.psd_floor};
    std::size_t next = 0;
    for (std::size_t k = 0; k < measures.size(); ++k) {
      out.scores[k] = is_divergence(measures[k]) ? divergence(measures[k], *d1, *d2, div_opts)
                                                 : raw[next++];
    }
  } else if (cfg.variant == Variant::full_pipeline) {
    const SiblingDistribution d1 = fit_or_floor(set1, cfg, out.warnings, "n1");
    const SiblingDistribution d2 = fit_or_floor(set2, cfg, out.warnings, "n2");
    score_from_distributions(d1, d2, measures, cfg, out.scores);
  } else {
    score_from_distributions(mean_with_identity(set1), mean_with_identity(set2), measures,
                             cfg, out.scores);
  }

  for (std::size_t k = 0; k < measures.size(); ++k) {
    if (!std::isfinite(out.scores[k])) {
      throw Error(ErrorKind::non_finite, "score for '" + set1.word + "' under " +
                                             std::string(token(measures[k])) +
                                             " is not finite");
    }
  }
  return out;
}

double score_word(const SiblingSet& set1, const SiblingSet& set2, const ScoreConfig& cfg) {
  return score_word(set1, set2, std::span(&cfg.measure, 1), cfg).scores.front();
}

double score_distributions(const SiblingDistribution& d1, const SiblingDistribution& d2,
                           const ScoreConfig& cfg) {
  check_compatible(cfg.measure, cfg);
  if (d1.dim() != d2.dim()) {
    throw Error(ErrorKind::dimension_mismatch, "distributions differ in dimension");
  }
  if (cfg.variant == Variant::full_pipeline && cfg.cloud == CloudSource::raw_apd &&
      !is_divergence(cfg.measure)) {
    throw Error(ErrorKind::incompatible_config,
                "raw-apd scoring needs sibling sets, not fitted distributions");
  }
  double score = 0.0;
  if (cfg.variant == Variant::full_pipeline) {
    score_from_distributions(d1, d2, std::span(&cfg.measure, 1), cfg, std::span(&score, 1));
  } else {
    score_from_distributions(with_identity(d1), with_identity(d2), std::span(&cfg.measure, 1),
                             cfg, std::span(&score, 1));
  }
  return score;
}

std::size_t ScoreReport::column_index(std::string_view label) const {
  auto it = std::find(columns.begin(), columns.end(), label);
  if (it == columns.end()) {
    throw Error(ErrorKind::invalid_argument,
                "report has no column '" + std::string(label) + "'");
  }
  return static_cast<std::size_t>(it - columns.begin());
}

ScoreReport score_corpus_pair(const ArchiveManifest& archive1,
                              const ArchiveManifest& archive2,
                              std::span<const std::string> words,
                              std::span<const MeasureKind> measures,
                              const ScoreConfig& cfg, unsigned word_workers) {
  if (measures.empty()) {
    throw Error(ErrorKind::invalid_argument, "no measures requested");
  }
  for (MeasureKind m : measures) check_compatible(m, cfg);
  if (!archive1.words.empty() && !archive2.words.empty() && archive1.dim != archive2.dim) {
    throw Error(ErrorKind::dimension_mismatch,
                "archives have dims " + std::to_string(archive1.dim) + " and " +
                    std::to_string(archive2.dim));
  }

  ScoreReport report;
  report.config = canonical_string(cfg);
  if (measures.size() == 1) {
    report.columns = {"score"};
  } else {
    for (MeasureKind m : measures) report.columns.emplace_back(token(m));
  }

  Fnv1a64 fp;
  fp.update(report.config);
  for (MeasureKind m : measures) {
    fp.update("|");
    fp.update(token(m));
  }
  for (const ArchiveManifest* a : {&archive1, &archive2}) {
    fp.update("|corpus=");
    fp.update(a->corpus_id);
    fp.update(";dim=" + std::to_string(a->dim));
  }
  for (const auto& w : words) {
    fp.update("|" + w);
    for (const ArchiveManifest* a : {&archive1, &archive2}) {
      const ManifestEntry* e = a->find(w);
      fp.update(e ? ":" + to_hex(e->checksum) : std::string(":-"));
    }
  }
  report.fingerprint = to_hex(fp.digest());

  struct Outcome {
    std::optional<WordScore> score;
    std::string error;
  };
  std::vector<Outcome> outcomes(words.size());
  parallel_for(words.size(), std::max(1U, word_workers), [&](std::size_t i) {
    try {
      const SiblingSet s1 = read_sibling_set(archive1, words[i]);
      const SiblingSet s2 = read_sibling_set(archive2, words[i]);
      outcomes[i].score = score_word(s1, s2, measures, cfg);
    } catch (const Error& e) {
      outcomes[i].error = e.what();
    }
  });

  for (std::size_t i = 0; i < words.size(); ++i) {
    if (outcomes[i].score) {
      auto& ws = *outcomes[i].score;
      report.rows.push_back(
          {words[i], std::move(ws.scores), ws.n1, ws.n2, std::move(ws.warnings)});
    } else {
      report.errors.push_back({words[i], outcomes[i].error});
    }
  }
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const ScoreRow& x, const ScoreRow& y) {
                     if (x.scores.front() != y.scores.front()) {
                       return x.scores.front() > y.scores.front();
                     }
                     return x.word < y.word;
                   });
  return report;
}

ScoreReport score_corpus_pair(const ArchiveManifest& archive1,
                              const ArchiveManifest& archive2,
                              std::span<const std::string> words, const ScoreConfig& cfg,
                              unsigned word_workers) {
  return score_corpus_pair(archive1, archive2, words, std::span(&cfg.measure, 1), cfg,
                           word_workers);
}

namespace {

std::vector<std::string> split(std::string_view line, std::string_view sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + sep.size();
  }
}

template <typename T>
T parse_number(const std::string& text, std::size_t line_no) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::invalid_argument,
                "report line " + std::to_string(line_no) + ": bad number '" + text + "'");
  }
  return value;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += sep;
    out += items[i];
  }
  return out;
}

}  // namespace

void write_report_tsv(const ScoreReport& report, std::ostream& out) {
  out << "word";
  for (const auto& c : report.columns) out << '\t' << c;
  out << "\tn1\tn2\twarnings\n";
  for (const auto& row : report.rows) {
    out << row.word;
    for (double s : row.scores) out << '\t' << format_double(s);
    out << '\t' << row.n1 << '\t' << row.n2 << '\t' << join(row.warnings, "; ") << '\n';
  }
}

void write_report_json(const ScoreReport& report, std::ostream& out) {
  using nlohmann::json;
  json rows = json::array();
  for (const auto& row : report.rows) {
    json scores = json::object();
    for (std::size_t k = 0; k < report.columns.size(); ++k) {
      scores[report.columns[k]] = row.scores[k];
    }
    rows.push_back({{"word", row.word},
                    {"scores", std::move(scores)},
                    {"n1", row.n1},
                    {"n2", row.n2},
                    {"warnings", row.warnings}});
  }
  json errors = json::array();
  for (const auto& e : report.errors) {
    errors.push_back({{"word", e.word}, {"error", e.message}});
  }
  const json doc = {{"fingerprint", report.fingerprint},
                    {"config", report.config},
                    {"columns", report.columns},
                    {"rows", std::move(rows)},
                    {"errors", std::move(errors)}};
  out << doc.dump(2) << '\n';
}

ScoreReport read_report_tsv(std::istream& in) {
  ScoreReport report;
  std::string line;
  std::size_t line_no = 0;
  std::size_t n_cols = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto fields = split(line, "\t");
    if (n_cols == 0) {
      if (fields.size() < 5 || fields.front() != "word" || fields[fields.size() - 3] != "n1" ||
          fields[fields.size() - 2] != "n2" || fields.back() != "warnings") {
        throw Error(ErrorKind::invalid_argument,
                    "report header must be: word, <scores...>, n1, n2, warnings");
      }
      report.columns.assign(fields.begin() + 1, fields.end() - 3);
      n_cols = fields.size();
      continue;
    }
    if (fields.size() != n_cols) {
      throw Error(ErrorKind::invalid_argument,
                  "report line " + std::to_string(line_no) + ": expected " +
                      std::to_string(n_cols) + " fields");
    }
    ScoreRow row;
    row.word = fields.front();
    for (std::size_t k = 0; k < report.columns.size(); ++k) {
      row.scores.push_back(parse_number<double>(fields[1 + k], line_no));
    }
    row.n1 = parse_number<std::size_t>(fields[n_cols - 3], line_no);
    row.n2 = parse_number<std::size_t>(fields[n_cols - 2], line_no);
    if (!fields.back().empty()) row.warnings = split(fields.back(), "; ");
    report.rows.push_back(std::move(row));
  }
  if (n_cols == 0) {
    throw Error(ErrorKind::invalid_argument, "report has no header");
  }
  return report;
}

ScoreReport read_report_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::io, "cannot open " + path.string());
  }
  return read_report_tsv(in);
}

}  // namespace siblingshift
