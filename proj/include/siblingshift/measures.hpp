// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <span>
#include <string_view>

#include "siblingshift/distribution.hpp"
#include "siblingshift/kernels.hpp"

namespace siblingshift {

enum class MeasureKind {
  kl_1_2,
  kl_2_1,
  jeffreys,
  bray_curtis,
  canberra,
  chebyshev,
  city_block,
  correlation,
  cosine,
  euclidean,
};

inline constexpr std::array<MeasureKind, 10> kAllMeasures = {
    MeasureKind::kl_1_2,     MeasureKind::kl_2_1,      MeasureKind::jeffreys,
    MeasureKind::bray_curtis, MeasureKind::canberra,   MeasureKind::chebyshev,
    MeasureKind::city_block, MeasureKind::correlation, MeasureKind::cosine,
    MeasureKind::euclidean};

/// Lowercase CLI token: kl12, kl21, jeffreys, braycurtis, ...
std::string_view token(MeasureKind kind);
/// Human-readable label used in tables ("KL(C1||C2)", "Bray-Curtis", ...).
std::string_view display_name(MeasureKind kind);
MeasureKind parse_measure(std::string_view token);

constexpr bool is_divergence(MeasureKind kind) {
  return kind == MeasureKind::kl_1_2 || kind == MeasureKind::kl_2_1 ||
         kind == MeasureKind::jeffreys;
}

struct DivergenceOptions {
  /// diag uses only the variances even when the inputs carry full matrices.
  CovMode cov = CovMode::diag;
  double psd_floor = 1e-8;
};

/// KL(p || q) between Gaussians, with log-determinants from Cholesky factors
/// and q's inverse applied through triangular solves.
double kl_divergence(const SiblingDistribution& p, const SiblingDistribution& q,
                     const DivergenceOptions& opts = {});

/// (KL(p || q) + KL(q || p)) / 2. Exactly symmetric in its arguments.
double jeffreys_divergence(const SiblingDistribution& p, const SiblingDistribution& q,
                           const DivergenceOptions& opts = {});

/// Divergence by kind: kl_1_2 is KL(p || q), kl_2_1 is KL(q || p).
double divergence(MeasureKind kind, const SiblingDistribution& p,
                  const SiblingDistribution& q, const DivergenceOptions& opts = {});

/// One of the seven vector distances. Degenerate denominators resolve to
/// finite values: Canberra drops 0/0 terms; Bray-Curtis gives 0 for equal
/// vectors and 1 otherwise; Cosine and Correlation give 1 when exactly one
/// (centered) vector has zero norm and 0 when both do.
double distance(MeasureKind kind, std::span<const double> w1, std::span<const double> w2);
double distance(MeasureKind kind, std::span<const double> w1, std::span<const double> w2,
                const kernels::KernelTable& table);

/// Finishing rule shared by Cosine and Correlation once the dot product and
/// the two norms are known.
double angular_distance(double dot, double norm1, double norm2);

/// Writes w minus its coordinate mean into centered_out and returns the
/// centered norm. A norm within rounding residue of the uncentered norm (a
/// constant vector) is reported as exactly zero.
double centered_norm(std::span<const double> w, std::span<double> centered_out);

}  // namespace siblingshift
