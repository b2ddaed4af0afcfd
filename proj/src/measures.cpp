// SPDX-License-Identifier: Apache-2.0
#include "siblingshift/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "siblingshift/error.hpp"

namespace siblingshift {

std::string_view token(MeasureKind kind) {
  switch (kind) {
    case MeasureKind::kl_1_2: return "kl12";
    case MeasureKind::kl_2_1: return "kl21";
    case MeasureKind::jeffreys: return "jeffreys";
    case MeasureKind::bray_curtis: return "braycurtis";
    case MeasureKind::canberra: return "canberra";
    case MeasureKind::chebyshev: return "chebyshev";
    case MeasureKind::city_block: return "cityblock";
    case MeasureKind::correlation: return "correlation";
    case MeasureKind::cosine: return "cosine";
    case MeasureKind::euclidean: return "euclidean";
  }
  return "?";
}

std::string_view display_name(MeasureKind kind) {
  switch (kind) {
    case MeasureKind::kl_1_2: return "KL(C1||C2)";
    case MeasureKind::kl_2_1: return "KL(C2||C1)";
    case MeasureKind::jeffreys: return "Jeff(C1||C2)";
    case MeasureKind::bray_curtis: return "Bray-Curtis";
    case MeasureKind::canberra: return "Canberra";
    case MeasureKind::chebyshev: return "Chebyshev";
    case MeasureKind::city_block: return "City Block";
    case MeasureKind::correlation: return "Correlation";
    case MeasureKind::cosine: return "Cosine";
    case MeasureKind::euclidean: return "Euclidean";
  }
  return "?";
}

MeasureKind parse_measure(std::string_view t) {
  for (MeasureKind kind : kAllMeasures) {
    if (token(kind) == t) return kind;
  }
  throw Error(ErrorKind::invalid_argument, "unknown measure '" + std::string(t) + "'");
}

namespace {

void check_dims(const SiblingDistribution& p, const SiblingDistribution& q) {
  if (p.dim() != q.dim() || p.covariance.dim() != p.dim() ||
      q.covariance.dim() != q.dim()) {
    throw Error(ErrorKind::dimension_mismatch,
                "divergence between distributions of dims " + std::to_string(p.dim()) +
                    " and " + std::to_string(q.dim()));
  }
  if (p.dim() == 0) {
    throw Error(ErrorKind::empty_input, "divergence of zero-dimensional distributions");
  }
}

double kl_diag(const SiblingDistribution& p, const SiblingDistribution& q, double floor) {
  const Eigen::VectorXd v1 = p.covariance.diagonal_entries().cwiseMax(floor);
  const Eigen::VectorXd v2 = q.covariance.diagonal_entries().cwiseMax(floor);
  if (!v1.allFinite() || !v2.allFinite() || !(v2.array() > 0.0).all() ||
      !(v1.array() > 0.0).all()) {
    throw Error(ErrorKind::not_invertible,
                "diagonal covariance has zero or non-finite variances after repair");
  }
  const Eigen::VectorXd delta = q.mean - p.mean;
  const auto d = static_cast<double>(p.dim());
  const double trace = (v1.array() / v2.array()).sum();
  const double log_det_ratio = v1.array().log().sum() - v2.array().log().sum();
  const double quad = (delta.array().square() / v2.array()).sum();
  return 0.5 * (trace - d - log_det_ratio + quad);
}

Eigen::LLT<Eigen::MatrixXd> cholesky(const SiblingDistribution& dist, double floor) {
  const PsdRepair repaired = repair_psd(CovarianceRep::full(dist.covariance.dense()), floor);
  Eigen::LLT<Eigen::MatrixXd> llt(repaired.covariance.matrix());
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::not_invertible,
                "covariance of '" + dist.word + "' is not positive definite after repair");
  }
  return llt;
}

double kl_full(const SiblingDistribution& p, const SiblingDistribution& q, double floor) {
  const auto llt1 = cholesky(p, floor);
  const auto llt2 = cholesky(q, floor);
  const Eigen::MatrixXd l1 = llt1.matrixL();
  const auto l2 = llt2.matrixL();

  // tr(V2^-1 V1) = ||L2^-1 L1||_F^2 and the Mahalanobis term is
  // ||L2^-1 (mu2 - mu1)||^2; neither needs an explicit inverse.
  const Eigen::MatrixXd w = l2.solve(l1);
  const Eigen::VectorXd z = l2.solve(q.mean - p.mean);
  const double log_det1 = 2.0 * llt1.matrixLLT().diagonal().array().log().sum();
  const double log_det2 = 2.0 * llt2.matrixLLT().diagonal().array().log().sum();
  const auto d = static_cast<double>(p.dim());
  return 0.5 * (w.squaredNorm() - d - (log_det1 - log_det2) + z.squaredNorm());
}

}  // namespace

double kl_divergence(const SiblingDistribution& p, const SiblingDistribution& q,
                     const DivergenceOptions& opts) {
  check_dims(p, q);
  const double kl = opts.cov == CovMode::diag ? kl_diag(p, q, opts.psd_floor)
                                               : kl_full(p, q, opts.psd_floor);
  if (!std::isfinite(kl)) {
    throw Error(ErrorKind::non_finite, "KL divergence is not finite for '" + p.word + "'");
  }
  // Identical inputs can round a hair below zero.
  return std::max(kl, 0.0);
}

double jeffreys_divergence(const SiblingDistribution& p, const SiblingDistribution& q,
                           const DivergenceOptions& opts) {
  return 0.5 * kl_divergence(p, q, opts) + 0.5 * kl_divergence(q, p, opts);
}

double divergence(MeasureKind kind, const SiblingDistribution& p,
                  const SiblingDistribution& q, const DivergenceOptions& opts) {
  switch (kind) {
    case MeasureKind::kl_1_2: return kl_divergence(p, q, opts);
    case MeasureKind::kl_2_1: return kl_divergence(q, p, opts);
    case MeasureKind::jeffreys: return jeffreys_divergence(p, q, opts);
    default:
      throw Error(ErrorKind::incompatible_config,
                  std::string(token(kind)) + " is a distance, not a divergence");
  }
}

double angular_distance(double dot, double norm1, double norm2) {
  const bool zero1 = norm1 == 0.0;
  const bool zero2 = norm2 == 0.0;
  if (zero1 && zero2) return 0.0;
  if (zero1 || zero2) return 1.0;
  return 1.0 - dot / (norm1 * norm2);
}

double centered_norm(std::span<const double> w, std::span<double> centered_out) {
  const std::size_t n = w.size();
  if (n == 0) return 0.0;
  double sum = 0.0;
  double raw_sq = 0.0;
  for (double v : w) {
    sum += v;
    raw_sq += v * v;
  }
  const double mean = sum / static_cast<double>(n);
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    centered_out[i] = w[i] - mean;
    sq += centered_out[i] * centered_out[i];
  }
  const double norm = std::sqrt(sq);
  const double residue = 4.0 * static_cast<double>(n) *
                         std::numeric_limits<double>::epsilon() * std::sqrt(raw_sq);
  if (norm <= residue) {
    std::fill(centered_out.begin(), centered_out.end(), 0.0);
    return 0.0;
  }
  return norm;
}

double distance(MeasureKind kind, std::span<const double> w1, std::span<const double> w2) {
  return distance(kind, w1, w2, kernels::active_table());
}

double distance(MeasureKind kind, std::span<const double> w1, std::span<const double> w2,
                const kernels::KernelTable& k) {
  if (w1.size() != w2.size()) {
    throw Error(ErrorKind::dimension_mismatch,
                "distance between vectors of sizes " + std::to_string(w1.size()) + " and " +
                    std::to_string(w2.size()));
  }
  const double* a = w1.data();
  const double* b = w2.data();
  const std::size_t n = w1.size();
  switch (kind) {
    case MeasureKind::bray_curtis: return k.bray_curtis(a, b, n);
    case MeasureKind::canberra: return k.canberra(a, b, n);
    case MeasureKind::chebyshev: return k.chebyshev(a, b, n);
    case MeasureKind::city_block: return k.city_block(a, b, n);
    case MeasureKind::euclidean: return std::sqrt(k.squared_l2(a, b, n));
    case MeasureKind::cosine:
      return angular_distance(k.dot(a, b, n), std::sqrt(k.dot(a, a, n)),
                              std::sqrt(k.dot(b, b, n)));
    case MeasureKind::correlation: {
      std::vector<double> c1(n), c2(n);
      const double n1 = centered_norm(w1, c1);
      const double n2 = centered_norm(w2, c2);
      return angular_distance(k.dot(c1.data(), c2.data(), n), n1, n2);
    }
    default:
      throw Error(ErrorKind::incompatible_config,
                  std::string(token(kind)) + " is a divergence, not a vector distance");
  }
}

}  // namespace siblingshift
