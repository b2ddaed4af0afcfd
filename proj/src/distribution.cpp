// SPDX-License-Identifier: Apache-2.0
#include "siblingshift/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <json.hpp>

#include "detail/binary_io.hpp"
#include "siblingshift/checksum.hpp"
#include "siblingshift/error.hpp"

namespace siblingshift {
namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(CovMode mode) {
  return mode == CovMode::diag ? "diag" : "full";
}

std::string_view to_string(Estimator estimator) {
  return estimator == Estimator::centered ? "centered" : "paper-literal";
}

CovMode parse_cov_mode(std::string_view token) {
  if (token == "diag") return CovMode::diag;
  if (token == "full") return CovMode::full;
  throw Error(ErrorKind::invalid_argument,
              "unknown covariance mode '" + std::string(token) + "'");
}

Estimator parse_estimator(std::string_view token) {
  if (token == "centered") return Estimator::centered;
  if (token == "literal" || token == "paper-literal") return Estimator::paper_literal;
  throw Error(ErrorKind::invalid_argument,
              "unknown estimator '" + std::string(token) + "'");
}

CovarianceRep CovarianceRep::diagonal(Eigen::VectorXd variances, Estimator estimator) {
  CovarianceRep rep;
  rep.mode_ = CovMode::diag;
  rep.estimator_ = estimator;
  rep.variances_ = std::move(variances);
  return rep;
}

CovarianceRep CovarianceRep::full(Eigen::MatrixXd matrix, Estimator estimator) {
  if (matrix.rows() != matrix.cols()) {
    throw Error(ErrorKind::dimension_mismatch, "covariance matrix is not square");
  }
  CovarianceRep rep;
  rep.mode_ = CovMode::full;
  rep.estimator_ = estimator;
  rep.matrix_ = std::move(matrix);
  return rep;
}

CovarianceRep CovarianceRep::full(Eigen::MatrixXd matrix, Eigen::MatrixXd row_factor,
                                  Estimator estimator) {
  if (row_factor.cols() != matrix.cols()) {
    throw Error(ErrorKind::dimension_mismatch, "row factor width differs from covariance");
  }
  CovarianceRep rep = full(std::move(matrix), estimator);
  rep.row_factor_ = std::move(row_factor);
  return rep;
}

std::size_t CovarianceRep::dim() const noexcept {
  return static_cast<std::size_t>(mode_ == CovMode::diag ? variances_.size()
                                                         : matrix_.rows());
}

const Eigen::VectorXd& CovarianceRep::variances() const {
  if (mode_ != CovMode::diag) {
    throw Error(ErrorKind::invalid_argument, "variances() on a full covariance");
  }
  return variances_;
}

const Eigen::MatrixXd& CovarianceRep::matrix() const {
  if (mode_ != CovMode::full) {
    throw Error(ErrorKind::invalid_argument, "matrix() on a diagonal covariance");
  }
  return matrix_;
}

Eigen::VectorXd CovarianceRep::diagonal_entries() const {
  return mode_ == CovMode::diag ? variances_ : Eigen::VectorXd(matrix_.diagonal());
}

Eigen::MatrixXd CovarianceRep::dense() const {
  return mode_ == CovMode::diag ? Eigen::MatrixXd(variances_.asDiagonal()) : matrix_;
}

bool CovarianceRep::all_finite() const {
  return mode_ == CovMode::diag ? variances_.allFinite() : matrix_.allFinite();
}

namespace {

Eigen::MatrixXd to_double(const EmbeddingMatrix& m) { return m.cast<double>(); }

// Gram matrix X^T X, accumulated on the lower triangle and mirrored so the
// result is exactly symmetric.
Eigen::MatrixXd symmetric_gram(const Eigen::MatrixXd& x) {
  const Eigen::Index d = x.cols();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d, d);
  g.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return g;
}

// X^T X / divisor, keeping X / sqrt(divisor) as the row factor when it is
// thinner than the matrix.
CovarianceRep scaled_gram(const Eigen::MatrixXd& x, double divisor, Estimator estimator) {
  Eigen::MatrixXd m = symmetric_gram(x) / divisor;
  if (x.rows() >= x.cols()) return CovarianceRep::full(std::move(m), estimator);
  return CovarianceRep::full(std::move(m), x / std::sqrt(divisor), estimator);
}

// Eigenvalues recomputed from an already repaired matrix land within
// rounding of the floor; treating those as satisfied keeps repair idempotent.
bool below_floor(double min_eigenvalue, double max_abs_eigenvalue, Eigen::Index dim,
                 double floor) {
  const double scale = std::max(max_abs_eigenvalue, floor);
  const double slack = 1e-6 * floor + 64.0 * static_cast<double>(dim) *
                                          std::numeric_limits<double>::epsilon() * scale;
  return min_eigenvalue < floor - slack;
}

// Draws through the thin SVD R = U S V^T. The repaired covariance is
// V diag(l') V^T on span(V) plus f I on its complement, so its symmetric
// square root applied to z is sqrt(f) z + V diag(sqrt(l') - sqrt(f)) V^T z.
Cloud sample_low_rank(const Eigen::MatrixXd& r, const Cloud& z, double floor) {
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeThinV);
  const Eigen::VectorXd lambda = svd.singularValues().array().square();
  const Eigen::MatrixXd& v = svd.matrixV();
  const double top = lambda.size() > 0 ? lambda.maxCoeff() : 0.0;
  // The complement of span(V) is non-empty, so 0 is always an eigenvalue.
  const bool below = below_floor(0.0, top, r.cols(), floor);
  const double f = below ? floor : 0.0;
  const Eigen::VectorXd gain =
      (below ? lambda.cwiseMax(floor) : lambda).cwiseSqrt().array() - std::sqrt(f);
  Cloud out(z.rows(), z.cols());
  out.noalias() = ((z * v) * gain.asDiagonal()) * v.transpose();
  out += std::sqrt(f) * z;
  return out;
}

}  // namespace

SiblingDistribution fit_distribution(const SiblingSet& set, CovMode mode,
                                     Estimator estimator) {
  validate(set);
  const auto n = static_cast<double>(set.count());
  if (set.count() < 2) {
    throw Error(ErrorKind::degenerate_count,
                "word '" + set.word + "' in '" + set.corpus_id +
                    "' has a single sibling; covariance needs at least two");
  }

  const Eigen::MatrixXd x = to_double(set.embeddings);
  SiblingDistribution dist;
  dist.word = set.word;
  dist.corpus_id = set.corpus_id;
  dist.count = set.count();
  dist.mean = x.colwise().mean().transpose();

  if (estimator == Estimator::centered) {
    const Eigen::MatrixXd centered = x.rowwise() - dist.mean.transpose();
    if (mode == CovMode::diag) {
      dist.covariance = CovarianceRep::diagonal(
          centered.array().square().colwise().sum().transpose() / (n - 1.0), estimator);
    } else {
      dist.covariance = scaled_gram(centered, n - 1.0, estimator);
    }
  } else {
    if (mode == CovMode::diag) {
      dist.covariance = CovarianceRep::diagonal(
          x.array().square().colwise().sum().transpose() / (n * (n - 1.0)), estimator);
    } else {
      dist.covariance = scaled_gram(x, n * (n - 1.0), estimator);
    }
  }
  return dist;
}

SiblingDistribution floor_distribution(const SiblingSet& set, CovMode mode,
                                       Estimator estimator, double psd_floor) {
  validate(set);
  SiblingDistribution dist;
  dist.word = set.word;
  dist.corpus_id = set.corpus_id;
  dist.count = set.count();
  dist.mean = to_double(set.embeddings).colwise().mean().transpose();
  const auto d = static_cast<Eigen::Index>(set.dim());
  dist.covariance =
      mode == CovMode::diag
          ? CovarianceRep::diagonal(Eigen::VectorXd::Constant(d, psd_floor), estimator)
          : CovarianceRep::full(Eigen::MatrixXd::Identity(d, d) * psd_floor, estimator);
  return dist;
}

PsdRepair repair_psd(const CovarianceRep& covariance, double floor) {
  if (!(floor >= 0.0)) {
    throw Error(ErrorKind::invalid_argument, "psd floor must be non-negative");
  }
  if (!covariance.all_finite()) {
    throw Error(ErrorKind::non_finite, "covariance has non-finite entries");
  }
  PsdRepair out;
  if (covariance.mode() == CovMode::diag) {
    Eigen::VectorXd v = covariance.variances();
    out.modified = (v.array() < floor).any();
    v = v.cwiseMax(floor);
    out.factor = v.cwiseSqrt();
    out.covariance = CovarianceRep::diagonal(std::move(v), covariance.estimator());
    return out;
  }

  const Eigen::MatrixXd& m = covariance.matrix();
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorKind::non_finite, "eigen decomposition of covariance failed");
  }
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const Eigen::MatrixXd& q = eig.eigenvectors();

  const bool below = lambda.size() > 0 && below_floor(lambda.minCoeff(),
                                                      lambda.cwiseAbs().maxCoeff(),
                                                      lambda.size(), floor);

  Eigen::VectorXd clamped = below ? lambda.cwiseMax(floor) : lambda.cwiseMax(0.0);
  out.factor = q * clamped.cwiseSqrt().asDiagonal();
  if (below) {
    out.modified = true;
    sym = q * clamped.asDiagonal() * q.transpose();
    sym = 0.5 * (sym + sym.transpose()).eval();
  } else {
    out.modified = (sym.array() != m.array()).any();
  }
  out.covariance = CovarianceRep::full(std::move(sym), covariance.estimator());
  return out;
}

Cloud sample_siblings(const SiblingDistribution& dist, const SampleConfig& cfg) {
  if (cfg.num_samples == 0) {
    throw Error(ErrorKind::invalid_argument, "num_samples must be at least 1");
  }
  if (dist.covariance.dim() != dist.dim()) {
    throw Error(ErrorKind::dimension_mismatch,
                "covariance and mean dimensions differ for '" + dist.word + "'");
  }
  const auto m = static_cast<Eigen::Index>(cfg.num_samples);
  const auto d = static_cast<Eigen::Index>(dist.dim());
  const bool low_rank =
      dist.covariance.mode() == CovMode::full && dist.covariance.row_factor().size() > 0;
  if (!(cfg.psd_floor >= 0.0)) {
    throw Error(ErrorKind::invalid_argument, "psd floor must be non-negative");
  }
  const PsdRepair repaired =
      low_rank ? PsdRepair{} : repair_psd(dist.covariance, cfg.psd_floor);
  if (!repaired.factor.allFinite() ||
      (low_rank && !dist.covariance.row_factor().allFinite())) {
    throw Error(ErrorKind::non_finite,
                "covariance of '" + dist.word + "' is non-finite after repair");
  }

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Cloud z(m, d);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = normal(rng);

  Cloud out(m, d);
  if (low_rank) {
    out = sample_low_rank(dist.covariance.row_factor(), z, cfg.psd_floor);
  } else if (dist.covariance.mode() == CovMode::diag) {
    out = (z.array().rowwise() * repaired.factor.col(0).transpose().array()).matrix();
  } else {
    out.noalias() = z * repaired.factor.transpose();
  }
  out.rowwise() += dist.mean.transpose();
  return out;
}

std::uint64_t stream_seed(std::uint64_t seed, std::string_view word,
                          std::string_view corpus_id, unsigned role) {
  Fnv1a64 h;
  h.update(word);
  h.update(std::string_view("\0", 1));
  h.update(corpus_id);
  h.update(std::string_view("\0", 1));
  const auto r = static_cast<std::byte>(role & 0xffU);
  h.update(std::span(&r, 1));
  return seed ^ h.digest();
}

std::size_t covariance_rank(const SiblingDistribution& dist, double tol) {
  Eigen::VectorXd magnitudes;
  if (dist.covariance.mode() == CovMode::diag) {
    magnitudes = dist.covariance.variances().cwiseAbs();
  } else {
    const Eigen::MatrixXd& m = dist.covariance.matrix();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) {
      throw Error(ErrorKind::non_finite, "eigen decomposition of covariance failed");
    }
    // Singular values of a symmetric matrix are its absolute eigenvalues.
    magnitudes = eig.eigenvalues().cwiseAbs();
  }
  if (magnitudes.size() == 0) return 0;
  const double largest = magnitudes.maxCoeff();
  if (!(largest > 0.0)) return 0;
  return static_cast<std::size_t>((magnitudes.array() > tol * largest).count());
}

namespace {

constexpr std::string_view kCacheIndex = "index";

std::vector<float> cache_payload(const SiblingDistribution& dist) {
  std::vector<float> values;
  const auto& cov = dist.covariance;
  values.reserve(dist.dim() + (cov.mode() == CovMode::diag ? dist.dim()
                                                           : dist.dim() * dist.dim()));
  for (double v : dist.mean) values.push_back(static_cast<float>(v));
  if (cov.mode() == CovMode::diag) {
    for (double v : cov.variances()) values.push_back(static_cast<float>(v));
  } else {
    const auto& m = cov.matrix();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        values.push_back(static_cast<float>(m(r, c)));
      }
    }
  }
  return values;
}

}  // namespace

void write_distribution_cache(std::span<const SiblingDistribution> dists,
                              const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
  }
  json entries = json::array();
  std::set<std::string> seen;
  for (const auto& dist : dists) {
    if (!seen.insert(dist.word + '\0' + dist.corpus_id).second) {
      throw Error(ErrorKind::duplicate_word, "duplicate cache entry '" + dist.word + "'");
    }
    if (dist.covariance.dim() != dist.dim()) {
      throw Error(ErrorKind::dimension_mismatch,
                  "covariance and mean dimensions differ for '" + dist.word + "'");
    }
    std::string file = payload_file_name(dist.word);
    file.insert(file.size() - kPayloadExtension.size(), ".dist");
    const auto bytes = detail::to_le_bytes(cache_payload(dist));
    detail::write_file(dir / file, bytes);
    entries.push_back({{"word", dist.word},
                       {"corpus_id", dist.corpus_id},
                       {"dim", dist.dim()},
                       {"mode", to_string(dist.covariance.mode())},
                       {"estimator", to_string(dist.covariance.estimator())},
                       {"count", dist.count},
                       {"file", file},
                       {"checksum", to_hex(fnv1a64(bytes))}});
  }
  const json index = {{"schema_version", 1},
                      {"payload", "float32-le; mean then covariance"},
                      {"entries", std::move(entries)}};
  detail::write_text_atomically(dir / kCacheIndex, index.dump(2) + "\n");
}

std::vector<SiblingDistribution> read_distribution_cache(const fs::path& dir) {
  const auto raw = detail::read_file(dir / kCacheIndex);
  json index;
  try {
    index = json::parse(reinterpret_cast<const char*>(raw.data()),
                        reinterpret_cast<const char*>(raw.data()) + raw.size());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::invalid_argument, (dir / kCacheIndex).string() + ": " + e.what());
  }

  std::vector<SiblingDistribution> out;
  try {
    for (const auto& e : index.at("entries")) {
      SiblingDistribution dist;
      dist.word = e.at("word").get<std::string>();
      dist.corpus_id = e.at("corpus_id").get<std::string>();
      dist.count = e.at("count").get<std::size_t>();
      const auto d = e.at("dim").get<std::size_t>();
      const CovMode mode = parse_cov_mode(e.at("mode").get<std::string>());
      const Estimator est = parse_estimator(e.at("estimator").get<std::string>());
      const fs::path path = dir / e.at("file").get<std::string>();

      const auto bytes = detail::read_file(path);
      const std::size_t n_values = d + (mode == CovMode::diag ? d : d * d);
      if (bytes.size() != n_values * sizeof(float)) {
        throw Error(ErrorKind::truncated, path.string() + ": unexpected payload size");
      }
      if (fnv1a64(bytes) != from_hex(e.at("checksum").get<std::string>())) {
        throw Error(ErrorKind::checksum_mismatch, path.string() + ": checksum mismatch");
      }
      std::vector<float> values(n_values);
      detail::from_le_bytes(bytes, values);

      const auto di = static_cast<Eigen::Index>(d);
      dist.mean.resize(di);
      for (Eigen::Index i = 0; i < di; ++i) dist.mean(i) = values[static_cast<std::size_t>(i)];
      if (mode == CovMode::diag) {
        Eigen::VectorXd v(di);
        for (Eigen::Index i = 0; i < di; ++i) v(i) = values[d + static_cast<std::size_t>(i)];
        dist.covariance = CovarianceRep::diagonal(std::move(v), est);
      } else {
        Eigen::MatrixXd m(di, di);
        for (Eigen::Index r = 0; r < di; ++r) {
          for (Eigen::Index c = 0; c < di; ++c) {
            m(r, c) = values[d + static_cast<std::size_t>(r) * d + static_cast<std::size_t>(c)];
          }
        }
        dist.covariance = CovarianceRep::full(std::move(m), est);
      }
      if (!dist.mean.allFinite() || !dist.covariance.all_finite()) {
        throw Error(ErrorKind::non_finite, path.string() + ": non-finite values");
      }
      out.push_back(std::move(dist));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::invalid_argument, (dir / kCacheIndex).string() + ": " + e.what());
  }
  return out;
}

}  // namespace siblingshift
