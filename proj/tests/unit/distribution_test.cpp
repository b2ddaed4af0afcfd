// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cstring>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "siblingshift/distribution.hpp"
#include "siblingshift/error.hpp"

namespace siblingshift {
namespace {

SiblingSet set_from(std::initializer_list<std::initializer_list<double>> rows) {
  Cloud c(static_cast<Eigen::Index>(rows.size()),
          static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index k = 0;
    for (double v : r) c(i, k++) = v;
    ++i;
  }
  return fixture::make_set("w", "c", c);
}

SiblingSet random_set(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return fixture::make_set("w", "c", fixture::normal_rows(n, d, rng));
}

TEST(Fit, IdenticalRowsGiveZeroCovariance) {
  const auto d = fit_distribution(set_from({{1, 2, 3}, {1, 2, 3}}), CovMode::full);
  EXPECT_EQ(d.mean, Eigen::Vector3d(1, 2, 3));
  EXPECT_TRUE(d.covariance.matrix().isZero(0.0));
  EXPECT_EQ(d.count, 2u);
}

TEST(Fit, CenteredHandFixture) {
  const auto d = fit_distribution(set_from({{0, 0}, {2, 0}, {0, 2}}), CovMode::full);
  EXPECT_DOUBLE_EQ(d.mean(0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(d.mean(1), 2.0 / 3.0);
  const auto& v = d.covariance.matrix();
  EXPECT_DOUBLE_EQ(v(0, 0), 4.0 / 3.0);
  EXPECT_DOUBLE_EQ(v(1, 1), 4.0 / 3.0);
  EXPECT_DOUBLE_EQ(v(0, 1), -2.0 / 3.0);
  EXPECT_DOUBLE_EQ(v(1, 0), -2.0 / 3.0);
}

TEST(Fit, LiteralHandFixture) {
  const auto d =
      fit_distribution(set_from({{0, 0}, {2, 0}, {0, 2}}), CovMode::full, Estimator::paper_literal);
  const auto& v = d.covariance.matrix();
  EXPECT_DOUBLE_EQ(v(0, 0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(v(1, 1), 2.0 / 3.0);
  EXPECT_EQ(v(0, 1), 0.0);
  EXPECT_EQ(d.covariance.estimator(), Estimator::paper_literal);
}

TEST(Fit, DiagKeepsOnlyTheDiagonal) {
  const auto set = random_set(20, 6, 3);
  const auto full = fit_distribution(set, CovMode::full);
  const auto diag = fit_distribution(set, CovMode::diag);
  ASSERT_EQ(diag.covariance.mode(), CovMode::diag);
  EXPECT_TRUE(diag.covariance.variances().isApprox(full.covariance.matrix().diagonal(), 1e-12));
}

TEST(Fit, MatchesLoopOracle) {
  const auto set = random_set(37, 9, 11);
  const oracle::Rows rows = set.embeddings.cast<double>();
  for (bool centered : {true, false}) {
    const auto d = fit_distribution(set, CovMode::full,
                                    centered ? Estimator::centered : Estimator::paper_literal);
    EXPECT_TRUE(d.mean.isApprox(oracle::mean(rows), 1e-13));
    EXPECT_TRUE(d.covariance.matrix().isApprox(oracle::covariance(rows, centered), 1e-12));
    EXPECT_TRUE(d.covariance.matrix().isApprox(d.covariance.matrix().transpose(), 0.0));
  }
}

TEST(Fit, RowPermutationInvariant) {
  auto set = random_set(30, 5, 2);
  const auto a = fit_distribution(set, CovMode::full);
  std::vector<int> perm(30);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(9));
  EmbeddingMatrix shuffled(30, 5);
  for (int i = 0; i < 30; ++i) shuffled.row(i) = set.embeddings.row(perm[i]);
  set.embeddings = shuffled;
  const auto b = fit_distribution(set, CovMode::full);
  EXPECT_TRUE(a.mean.isApprox(b.mean, 1e-13));
  EXPECT_TRUE(a.covariance.matrix().isApprox(b.covariance.matrix(), 1e-12));
}

TEST(Fit, SingleRowIsDegenerate) {
  try {
    fit_distribution(set_from({{1, 2}}), CovMode::diag);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate_count);
  }
  const auto f = floor_distribution(set_from({{1, 2}}), CovMode::full, Estimator::centered, 1e-8);
  EXPECT_EQ(f.mean, Eigen::Vector2d(1, 2));
  EXPECT_TRUE(f.covariance.matrix().isApprox(1e-8 * Eigen::Matrix2d::Identity()));
}

TEST(Sample, ZeroCovarianceCollapsesToMean) {
  const auto d = fit_distribution(set_from({{1, -2, 3}, {1, -2, 3}}), CovMode::full);
  const Cloud c = sample_siblings(d, {3, 5, 1e-8});
  ASSERT_EQ(c.rows(), 3);
  for (Eigen::Index i = 0; i < 3; ++i) {
    EXPECT_LE((c.row(i).transpose() - d.mean).cwiseAbs().maxCoeff(), std::sqrt(1e-8) * 10);
  }
}

TEST(Sample, SameSeedSameBits) {
  const auto d = fit_distribution(random_set(40, 8, 4), CovMode::full);
  const Cloud a = sample_siblings(d, {500, 42, 1e-8});
  const Cloud b = sample_siblings(d, {500, 42, 1e-8});
  EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()), 0);
  const Cloud c = sample_siblings(d, {500, 43, 1e-8});
  EXPECT_NE(std::memcmp(a.data(), c.data(), sizeof(double) * a.size()), 0);
}

TEST(Sample, LawOfLargeNumbers) {
  for (CovMode mode : {CovMode::full, CovMode::diag}) {
    const auto d = fit_distribution(set_from({{0, 0}, {2, 0}, {0, 2}}), mode);
    const Cloud c = sample_siblings(d, {100000, 7, 1e-8});
    const oracle::Rows rows = c;
    EXPECT_LE((oracle::mean(rows) - d.mean).cwiseAbs().maxCoeff(), 0.05);
    EXPECT_LE((oracle::covariance(rows, true) - d.covariance.dense()).cwiseAbs().maxCoeff(), 0.05);
  }
}

TEST(Sample, IsotropicSquaredNorm) {
  SiblingDistribution d;
  d.mean = Eigen::VectorXd::Zero(10);
  d.covariance = CovarianceRep::full(2.5 * Eigen::MatrixXd::Identity(10, 10));
  const Cloud c = sample_siblings(d, {100000, 3, 1e-8});
  const double mean_sq = c.rowwise().squaredNorm().mean();
  EXPECT_NEAR(mean_sq, 2.5 * 10, 0.05 * 2.5 * 10);
}

TEST(Sample, RowFactorOnlyWhenThinner) {
  const auto wide = fit_distribution(random_set(4, 9, 8), CovMode::full);
  ASSERT_EQ(wide.covariance.row_factor().rows(), 4);
  EXPECT_TRUE((wide.covariance.row_factor().transpose() * wide.covariance.row_factor())
                  .isApprox(wide.covariance.matrix(), 1e-12));
  EXPECT_EQ(fit_distribution(random_set(9, 9, 8), CovMode::full).covariance.row_factor().size(),
            0);
}

TEST(Sample, RowFactorPathMatchesDenseRepair) {
  // A large floor makes the complement of the row space visible.
  constexpr double kFloor = 0.3;
  for (Estimator est : {Estimator::centered, Estimator::paper_literal}) {
    const auto low = fit_distribution(random_set(4, 7, 9), CovMode::full, est);
    SiblingDistribution dense = low;
    dense.covariance = CovarianceRep::full(low.covariance.matrix(), est);
    ASSERT_GT(low.covariance.row_factor().size(), 0);
    ASSERT_EQ(dense.covariance.row_factor().size(), 0);
    const Eigen::MatrixXd target = repair_psd(dense.covariance, kFloor).covariance.matrix();
    for (const SiblingDistribution* d : std::array<const SiblingDistribution*, 2>{&low, &dense}) {
      const oracle::Rows rows = sample_siblings(*d, {200000, 11, kFloor});
      EXPECT_LE((oracle::covariance(rows, true) - target).cwiseAbs().maxCoeff(),
                0.03 * target.diagonal().maxCoeff());
    }
  }
}

TEST(Repair, FloorsAndIsIdempotent) {
  const auto d = fit_distribution(random_set(4, 10, 5), CovMode::full);
  const auto once = repair_psd(d.covariance, 1e-8);
  EXPECT_TRUE(once.modified);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(once.covariance.matrix());
  EXPECT_GE(eig.eigenvalues().minCoeff(), 1e-8 * (1 - 1e-6) - 1e-14);
  const auto twice = repair_psd(once.covariance, 1e-8);
  EXPECT_FALSE(twice.modified);
  EXPECT_EQ(twice.covariance.matrix(), once.covariance.matrix());
  EXPECT_TRUE((once.factor * once.factor.transpose()).isApprox(once.covariance.matrix(), 1e-9));
}

TEST(Repair, LeavesWellConditionedMatrixAlone) {
  Eigen::Matrix3d m;
  m << 2, 0.5, 0, 0.5, 1, 0.1, 0, 0.1, 3;
  const auto r = repair_psd(CovarianceRep::full(m), 1e-8);
  EXPECT_FALSE(r.modified);
  EXPECT_EQ(r.covariance.matrix(), Eigen::MatrixXd(m));
}

TEST(Repair, DiagFloorsVariances) {
  const auto r = repair_psd(CovarianceRep::diagonal(Eigen::Vector3d(0, 4, 1e-12)), 1e-8);
  EXPECT_TRUE(r.modified);
  EXPECT_EQ(r.covariance.variances(), Eigen::Vector3d(1e-8, 4, 1e-8));
  EXPECT_DOUBLE_EQ(r.factor(1, 0), 2.0);
}

TEST(Rank, FollowsMinOfCountMinusOneAndDim) {
  SiblingDistribution zero;
  zero.mean = Eigen::VectorXd::Zero(4);
  zero.covariance = CovarianceRep::full(Eigen::MatrixXd::Zero(4, 4));
  EXPECT_EQ(covariance_rank(zero), 0u);
  for (std::size_t n : {2u, 3u, 5u, 51u, 100u}) {
    const auto set = random_set(n, 50, n);
    const auto d = fit_distribution(set, CovMode::full);
    EXPECT_EQ(covariance_rank(d), std::min<std::size_t>(n - 1, 50)) << n;
    EXPECT_EQ(oracle::svd_rank(d.covariance.matrix()), covariance_rank(d)) << n;
    const auto lit = fit_distribution(set, CovMode::full, Estimator::paper_literal);
    EXPECT_EQ(covariance_rank(lit), std::min<std::size_t>(n, 50)) << n;
  }
}

TEST(Rank, DiagCountsPositiveVariances) {
  SiblingDistribution d;
  d.mean = Eigen::VectorXd::Zero(4);
  d.covariance = CovarianceRep::diagonal(Eigen::Vector4d(1, 0, 2, 1e-20));
  EXPECT_EQ(covariance_rank(d), 2u);
}

TEST(Seeds, StreamsDifferByWordCorpusAndRole) {
  EXPECT_EQ(stream_seed(1, "cell", "c1", 1), stream_seed(1, "cell", "c1", 1));
  EXPECT_NE(stream_seed(1, "cell", "c1", 1), stream_seed(1, "cell", "c1", 2));
  EXPECT_NE(stream_seed(1, "cell", "c1", 1), stream_seed(1, "cell", "c2", 1));
  EXPECT_NE(stream_seed(1, "cell", "c1", 1), stream_seed(2, "cell", "c1", 1));
  EXPECT_NE(stream_seed(1, "ab", "c", 1), stream_seed(1, "a", "bc", 1));
}

TEST(Cache, RoundTripAtFloatPrecision) {
  fixture::TempDir dir("cache");
  std::vector<SiblingDistribution> dists{fit_distribution(random_set(12, 5, 1), CovMode::full),
                                         fit_distribution(random_set(9, 5, 2), CovMode::diag)};
  dists[1].word = "other word";
  write_distribution_cache(dists, dir.path());
  const auto back = read_distribution_cache(dir.path());
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(back[k].word, dists[k].word);
    EXPECT_EQ(back[k].count, dists[k].count);
    EXPECT_EQ(back[k].covariance.mode(), dists[k].covariance.mode());
    EXPECT_TRUE(back[k].mean.isApprox(dists[k].mean, 1e-6));
    EXPECT_TRUE(back[k].covariance.dense().isApprox(dists[k].covariance.dense(), 1e-6));
  }
}

TEST(Parse, Tokens) {
  EXPECT_EQ(parse_cov_mode("diag"), CovMode::diag);
  EXPECT_EQ(parse_estimator("literal"), Estimator::paper_literal);
  EXPECT_EQ(parse_estimator("paper-literal"), Estimator::paper_literal);
  EXPECT_THROW(parse_cov_mode("dense"), Error);
}

}  // namespace
}  // namespace siblingshift
