// SPDX-License-Identifier: Apache-2.0
#include "cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "detail/binary_io.hpp"
#include "siblingshift/archive.hpp"
#include "siblingshift/distribution.hpp"
#include "siblingshift/error.hpp"
#include "siblingshift/evaluation.hpp"
#include "siblingshift/measures.hpp"
#include "siblingshift/parallel.hpp"
#include "siblingshift/scoring.hpp"

namespace siblingshift::cli {

namespace fs = std::filesystem;

namespace {

struct RunConfig {
  std::string archive1;
  std::string archive2;
  std::string words;
  std::string gold;
  std::string measure = "chebyshev";
  std::string cov = "full";
  std::string estimator = "centered";
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  std::string variant = "full";
  std::string cloud = "sampled";
  std::string divergence_cov = "diag";
  double psd_floor = 1e-8;
  std::string kernel = "auto";
  unsigned threads = 1;
  std::string out;

  // eval
  std::string report;
  std::string report2;
  std::string column;
  // ablate replay
  std::vector<std::string> reports;
  // rank-analysis
  double rank_tol = 1e-10;
  std::string plot_data;
};

std::vector<std::string> read_word_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open word list " + path.string());
  std::vector<std::string> words;
  for (std::string line; std::getline(in, line);) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    words.push_back(line.substr(b, e - b + 1));
  }
  return words;
}

std::vector<std::string> resolve_words(const RunConfig& rc, const ArchiveManifest& fallback) {
  return rc.words.empty() ? fallback.surfaces() : read_word_list(rc.words);
}

std::vector<MeasureKind> parse_measures(const std::string& text) {
  if (text == "all") return {kAllMeasures.begin(), kAllMeasures.end()};
  std::vector<MeasureKind> out;
  std::stringstream ss(text);
  for (std::string t; std::getline(ss, t, ',');) {
    const MeasureKind m = parse_measure(t);
    if (std::find(out.begin(), out.end(), m) != out.end()) {
      throw Error(ErrorKind::invalid_argument, "measure '" + t + "' listed twice");
    }
    out.push_back(m);
  }
  if (out.empty()) throw Error(ErrorKind::invalid_argument, "no measure given");
  return out;
}

ScoreConfig score_config(const RunConfig& rc, MeasureKind measure) {
  ScoreConfig cfg;
  cfg.measure = measure;
  cfg.cloud = parse_cloud_source(rc.cloud);
  cfg.sample.num_samples = rc.samples;
  cfg.sample.seed = rc.seed;
  cfg.sample.psd_floor = rc.psd_floor;
  cfg.cov_mode = parse_cov_mode(rc.cov);
  cfg.estimator = parse_estimator(rc.estimator);
  cfg.variant = parse_variant(rc.variant);
  cfg.divergence_cov = parse_cov_mode(rc.divergence_cov);
  cfg.kernel = parse_kernel_path(rc.kernel);
  return cfg;
}

/// Writes through `fn` to `path`, or to `fallback` when the path is empty.
void emit(const std::string& path, std::ostream& fallback,
          const std::function<void(std::ostream&)>& fn) {
  if (path.empty()) {
    fn(fallback);
    return;
  }
  std::ostringstream buffer;
  fn(buffer);
  detail::write_text_atomically(path, buffer.str());
}

void report_word_errors(const ScoreReport& report, std::ostream& err) {
  for (const auto& e : report.errors) err << "warning: " << e.word << ": " << e.message << '\n';
}

void write_report(const ScoreReport& report, const RunConfig& rc, std::ostream& out) {
  emit(rc.out, out, [&](std::ostream& o) { write_report_tsv(report, o); });
  if (!rc.out.empty()) {
    emit(rc.out + ".json", out, [&](std::ostream& o) { write_report_json(report, o); });
  }
}

int cmd_fit(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  const ArchiveManifest archive = read_manifest(rc.archive1);
  const CovMode mode = parse_cov_mode(rc.cov);
  const Estimator estimator = parse_estimator(rc.estimator);
  std::vector<SiblingDistribution> dists;
  for (const auto& word : resolve_words(rc, archive)) {
    try {
      const SiblingSet set = read_sibling_set(archive, word);
      if (set.count() == 1) {
        err << "warning: " << word << ": n=1: covariance replaced by psd_floor*I\n";
        dists.push_back(floor_distribution(set, mode, estimator, rc.psd_floor));
      } else {
        dists.push_back(fit_distribution(set, mode, estimator));
      }
    } catch (const Error& e) {
      err << "warning: " << word << ": " << e.what() << '\n';
    }
  }
  write_distribution_cache(dists, rc.out);
  out << "fitted " << dists.size() << " distributions into " << rc.out << '\n';
  return 0;
}

int cmd_score(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  const auto measures = parse_measures(rc.measure);
  const ScoreConfig cfg = score_config(rc, measures.front());
  const ArchiveManifest a1 = read_manifest(rc.archive1);
  const ArchiveManifest a2 = read_manifest(rc.archive2);
  const auto words = resolve_words(rc, a1);
  const unsigned workers = resolve_workers(rc.threads);
  const ScoreReport report = measures.size() == 1
                                 ? score_corpus_pair(a1, a2, words, cfg, workers)
                                 : score_corpus_pair(a1, a2, words, measures, cfg, workers);
  report_word_errors(report, err);
  write_report(report, rc, out);
  err << "fingerprint " << report.fingerprint << '\n';
  return 0;
}

std::size_t pick_column(const ScoreReport& report, const std::string& label) {
  return label.empty() ? 0 : report.column_index(label);
}

int cmd_eval(const RunConfig& rc, std::ostream& out, std::ostream&) {
  const GoldRanking gold = read_gold(rc.gold);
  const ScoreReport report = read_report_tsv(fs::path(rc.report));
  const EvalResult result = evaluate(report, gold, pick_column(report, rc.column));
  std::optional<EvalResult> other;
  if (!rc.report2.empty()) {
    const ScoreReport report2 = read_report_tsv(fs::path(rc.report2));
    other = evaluate(report2, gold, pick_column(report2, rc.column));
  }
  if (!rc.out.empty()) {
    emit(rc.out, out, [&](std::ostream& o) { write_eval_tsv(result, o); });
  }
  write_eval_summary(result, out, other ? &*other : nullptr);
  return 0;
}

int cmd_ablate(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  const GoldRanking gold = read_gold(rc.gold);
  std::vector<ScoreReport> variants;
  std::vector<std::string> replay;
  std::copy_if(rc.reports.begin(), rc.reports.end(), std::back_inserter(replay),
               [](const std::string& p) { return !p.empty(); });
  if (!replay.empty()) {
    if (replay.size() != 3) {
      throw Error(ErrorKind::invalid_argument,
                  "--reports takes three paths: mean-only, identity-cov, full-pipeline");
    }
    for (const auto& path : replay) variants.push_back(read_report_tsv(fs::path(path)));
  } else {
    if (rc.archive1.empty() || rc.archive2.empty()) {
      throw Error(ErrorKind::invalid_argument,
                  "ablate needs --archive1 and --archive2, or --reports");
    }
    const ArchiveManifest a1 = read_manifest(rc.archive1);
    const ArchiveManifest a2 = read_manifest(rc.archive2);
    std::vector<std::string> words;
    if (rc.words.empty()) {
      for (const auto& e : gold.entries) words.push_back(e.word);
    } else {
      words = read_word_list(rc.words);
    }
    const unsigned workers = resolve_workers(rc.threads);
    for (Variant v : {Variant::mean_only, Variant::identity_cov, Variant::full_pipeline}) {
      ScoreConfig cfg = score_config(rc, parse_measure(rc.measure));
      cfg.variant = v;
      variants.push_back(score_corpus_pair(a1, a2, words, cfg, workers));
      report_word_errors(variants.back(), err);
    }
  }
  const AblationTable table = build_ablation(gold, variants[0], variants[1], variants[2]);
  emit(rc.out, out, [&](std::ostream& o) { write_ablation_tsv(table, o); });
  return 0;
}

int cmd_rank_analysis(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  const ArchiveManifest archive = read_manifest(rc.archive1);
  struct Row {
    std::string word;
    std::size_t frequency;
    std::size_t rank;
  };
  std::vector<Row> rows;
  for (const auto& word : resolve_words(rc, archive)) {
    try {
      const SiblingSet set = read_sibling_set(archive, word);
      // A single occurrence has an all-zero centered covariance.
      const std::size_t rank =
          set.count() < 2
              ? 0
              : covariance_rank(fit_distribution(set, CovMode::full, Estimator::centered),
                                rc.rank_tol);
      rows.push_back({word, set.count(), rank});
    } catch (const Error& e) {
      err << "warning: " << word << ": " << e.what() << '\n';
    }
  }
  emit(rc.out, out, [&](std::ostream& o) {
    o << "word\tfrequency\trank\n";
    for (const auto& r : rows) o << r.word << '\t' << r.frequency << '\t' << r.rank << '\n';
  });
  if (!rc.plot_data.empty()) {
    emit(rc.plot_data, out, [&](std::ostream& o) {
      o << "# frequency rank dim=" << archive.dim << '\n';
      for (const auto& r : rows) o << r.frequency << ' ' << r.rank << '\n';
    });
  }
  return 0;
}

void add_scoring_options(CLI::App* app, RunConfig& rc, bool with_variant) {
  app->add_option("--measure", rc.measure,
                  "Measure token, comma-separated tokens, or 'all'")
      ->capture_default_str();
  app->add_option("--cov", rc.cov, "Covariance mode for sampling")
      ->check(CLI::IsMember({"diag", "full"}))
      ->capture_default_str();
  app->add_option("--estimator", rc.estimator, "Covariance estimator")
      ->check(CLI::IsMember({"centered", "literal", "paper-literal"}))
      ->capture_default_str();
  app->add_option("--samples", rc.samples, "Samples drawn per word and corpus")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--seed", rc.seed, "Base RNG seed")->capture_default_str();
  if (with_variant) {
    app->add_option("--variant", rc.variant, "Pipeline variant")
        ->check(CLI::IsMember({"full", "full-pipeline", "mean-only", "identity-cov"}))
        ->capture_default_str();
  }
  app->add_option("--cloud", rc.cloud, "Sampled clouds or the raw sibling sets")
      ->check(CLI::IsMember({"sampled", "raw-apd"}))
      ->capture_default_str();
  app->add_option("--divergence-cov", rc.divergence_cov,
                  "Covariance mode inside KL and Jeffrey's")
      ->check(CLI::IsMember({"diag", "full"}))
      ->capture_default_str();
  app->add_option("--psd-floor", rc.psd_floor, "Eigenvalue floor for covariance repair")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--kernel", rc.kernel, "Distance kernels: auto (SIMD if available) or scalar")
      ->check(CLI::IsMember({"auto", "scalar"}))
      ->capture_default_str();
  app->add_option("--threads", rc.threads, "Word workers (0 = all cores)")
      ->capture_default_str();
}

/// Path validators that let an unset (empty) value through, so a logged
/// config with blank optional paths replays cleanly.
CLI::Validator optional_path(const CLI::Validator& check) {
  return CLI::Validator(
      [check](std::string& value) { return value.empty() ? std::string{} : check(value); },
      check.get_description());
}

CLI::Option* add_archive1(CLI::App* app, RunConfig& rc) {
  return app->add_option("--archive1", rc.archive1, "Sibling archive directory")
      ->check(optional_path(CLI::ExistingDirectory));
}

/// Echoes the resolved options to `err` and, when the command writes a file,
/// next to it as `<out>.run.toml`. `siblingshift --config <file>` replays it.
void log_config(const CLI::App* sub, const RunConfig& rc, std::ostream& err) {
  const std::string text = "[" + sub->get_name() + "]\n" + sub->config_to_str(true, false);
  err << text;
  if (!rc.out.empty()) detail::write_text_atomically(rc.out + ".run.toml", text);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semantic change scoring from sibling-embedding distributions", "siblingshift"};
  app.require_subcommand(1);
  RunConfig rc;

  auto* fit = app.add_subcommand("fit", "Fit per-word Gaussians and write a distribution cache");
  add_archive1(fit, rc)->required();
  fit->add_option("--words", rc.words, "Word list (default: every archive word)")
      ->check(optional_path(CLI::ExistingFile));
  fit->add_option("--cov", rc.cov)->check(CLI::IsMember({"diag", "full"}))->capture_default_str();
  fit->add_option("--estimator", rc.estimator)
      ->check(CLI::IsMember({"centered", "literal", "paper-literal"}))
      ->capture_default_str();
  fit->add_option("--psd-floor", rc.psd_floor)->check(CLI::PositiveNumber)->capture_default_str();
  fit->add_option("--out", rc.out, "Cache directory")->required();

  auto* score = app.add_subcommand("score", "Score words across two archives");
  add_archive1(score, rc)->required();
  score->add_option("--archive2", rc.archive2, "Second sibling archive")
      ->check(optional_path(CLI::ExistingDirectory))
      ->required();
  score->add_option("--words", rc.words, "Word list (default: every word of --archive1)")
      ->check(optional_path(CLI::ExistingFile));
  add_scoring_options(score, rc, true);
  score->add_option("--out", rc.out, "Report TSV (JSON goes to <out>.json); stdout if unset");

  auto* eval = app.add_subcommand("eval", "Spearman correlation of a report against gold");
  eval->add_option("--report", rc.report, "Score report TSV")
      ->check(optional_path(CLI::ExistingFile))
      ->required();
  eval->add_option("--gold", rc.gold, "Gold TSV")->check(optional_path(CLI::ExistingFile))->required();
  eval->add_option("--report2", rc.report2, "Second report for a Fisher significance test")
      ->check(optional_path(CLI::ExistingFile));
  eval->add_option("--column", rc.column, "Report column (default: first)");
  eval->add_option("--out", rc.out, "Per-word rank TSV");

  auto* ablate = app.add_subcommand("ablate", "Mean-only / identity-cov / full-pipeline table");
  ablate->add_option("--gold", rc.gold, "Gold TSV")->check(optional_path(CLI::ExistingFile))->required();
  add_archive1(ablate, rc);
  ablate->add_option("--archive2", rc.archive2)->check(optional_path(CLI::ExistingDirectory));
  ablate->add_option("--words", rc.words, "Word list (default: the gold words)")
      ->check(optional_path(CLI::ExistingFile));
  ablate->add_option("--reports", rc.reports,
                     "Replay three existing reports: mean-only identity-cov full-pipeline")
      ->expected(1, 3)
      ->check(optional_path(CLI::ExistingFile));
  add_scoring_options(ablate, rc, false);
  ablate->add_option("--out", rc.out, "Table TSV; stdout if unset");

  auto* rank = app.add_subcommand("rank-analysis", "Occurrence count vs covariance rank");
  add_archive1(rank, rc)->required();
  rank->add_option("--words", rc.words)->check(optional_path(CLI::ExistingFile));
  rank->add_option("--tol", rc.rank_tol, "Relative singular value threshold")
      ->capture_default_str();
  rank->add_option("--out", rc.out, "TSV; stdout if unset");
  rank->add_option("--plot-data", rc.plot_data, "Whitespace-separated frequency/rank pairs");

  app.set_config("--config", "", "Replay a logged <out>.run.toml");
  for (auto* sub : {fit, score, eval, ablate, rank}) sub->configurable();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  const std::vector<std::pair<CLI::App*, std::function<int()>>> commands{
      {fit, [&] { return cmd_fit(rc, out, err); }},
      {score, [&] { return cmd_score(rc, out, err); }},
      {eval, [&] { return cmd_eval(rc, out, err); }},
      {ablate, [&] { return cmd_ablate(rc, out, err); }},
      {rank, [&] { return cmd_rank_analysis(rc, out, err); }},
  };
  for (const auto& [sub, fn] : commands) {
    if (!sub->parsed()) continue;
    log_config(sub, rc, err);
    try {
      return fn();
    } catch (const Error& e) {
      err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
      return 1;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return 1;
    }
  }
  return 1;
}

}  // namespace siblingshift::cli
