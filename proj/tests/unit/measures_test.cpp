// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/LU>

#include "oracles.hpp"
#include "siblingshift/error.hpp"
#include "siblingshift/measures.hpp"

namespace siblingshift {
namespace {

constexpr std::array kDistances = {MeasureKind::bray_curtis, MeasureKind::canberra,
                                   MeasureKind::chebyshev,   MeasureKind::city_block,
                                   MeasureKind::correlation, MeasureKind::cosine,
                                   MeasureKind::euclidean};

using Vec = std::vector<double>;

double dist(MeasureKind k, const Vec& a, const Vec& b) { return distance(k, a, b); }

SiblingDistribution diag_gaussian(Vec mean, Vec var) {
  SiblingDistribution d;
  d.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  d.covariance = CovarianceRep::diagonal(
      Eigen::Map<const Eigen::VectorXd>(var.data(), static_cast<Eigen::Index>(var.size())));
  return d;
}

Vec random_vec(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> z;
  Vec v(d);
  for (auto& x : v) x = z(rng);
  return v;
}

TEST(Distance, HandExamples) {
  EXPECT_DOUBLE_EQ(dist(MeasureKind::chebyshev, {1, 2, 3}, {4, 0, 3}), 3.0);
  EXPECT_DOUBLE_EQ(dist(MeasureKind::cosine, {1, 0}, {0, 1}), 1.0);
  EXPECT_DOUBLE_EQ(dist(MeasureKind::canberra, {1, 1}, {1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(dist(MeasureKind::bray_curtis, {1, 1}, {3, 1}), 1.0 / 3.0);
  EXPECT_EQ(dist(MeasureKind::city_block, {0.3, -7, 2}, {0.3, -7, 2}), 0.0);
  EXPECT_DOUBLE_EQ(dist(MeasureKind::euclidean, {0, 0}, {3, 4}), 5.0);
}

TEST(Distance, DegenerateDenominators) {
  EXPECT_EQ(dist(MeasureKind::canberra, {0, 1}, {0, 3}), 0.5);
  EXPECT_EQ(dist(MeasureKind::canberra, {0, 0}, {0, 0}), 0.0);
  EXPECT_EQ(dist(MeasureKind::bray_curtis, {0, 0}, {0, 0}), 0.0);
  EXPECT_EQ(dist(MeasureKind::bray_curtis, {1, -2}, {-1, 2}), 1.0);
  EXPECT_EQ(dist(MeasureKind::cosine, {0, 0}, {0, 0}), 0.0);
  EXPECT_EQ(dist(MeasureKind::cosine, {0, 0}, {1, 0}), 1.0);
  EXPECT_EQ(dist(MeasureKind::correlation, {2, 2, 2}, {5, 5, 5}), 0.0);
  EXPECT_EQ(dist(MeasureKind::correlation, {0.1, 0.1, 0.1}, {1, 2, 3}), 1.0);
  for (auto k : kDistances) EXPECT_TRUE(std::isfinite(dist(k, {0, 0, 0}, {0, 0, 0})));
}

TEST(Distance, MatchesOracle) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = 1 + static_cast<std::size_t>(t) * 13;
    const Vec a = random_vec(rng, d), b = random_vec(rng, d);
    for (auto k : kDistances) {
      const double expected = oracle::distance(k, a, b);
      EXPECT_NEAR(dist(k, a, b), expected, 1e-9 * std::max(1.0, std::fabs(expected)))
          << token(k) << " d=" << d;
    }
  }
}

TEST(Distance, Properties) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 300; ++t) {
    const Vec x = random_vec(rng, 24), y = random_vec(rng, 24), z = random_vec(rng, 24);
    for (auto k : kDistances) {
      EXPECT_NEAR(dist(k, x, x), 0.0, 1e-12) << token(k);
      EXPECT_EQ(dist(k, x, y), dist(k, y, x)) << token(k);
      EXPECT_GE(dist(k, x, y), 0.0);
    }
    for (auto k : {MeasureKind::euclidean, MeasureKind::city_block, MeasureKind::chebyshev}) {
      EXPECT_LE(dist(k, x, z), dist(k, x, y) + dist(k, y, z) + 1e-12);
    }
    Vec xs = x, ys = y, shifted = x;
    for (auto& v : xs) v *= 3.5;
    for (auto& v : ys) v *= 0.25;
    for (auto& v : shifted) v += 7.0;
    EXPECT_NEAR(dist(MeasureKind::cosine, xs, ys), dist(MeasureKind::cosine, x, y), 1e-12);
    EXPECT_NEAR(dist(MeasureKind::correlation, xs, ys), dist(MeasureKind::correlation, x, y),
                1e-12);
    EXPECT_NEAR(dist(MeasureKind::correlation, shifted, y), dist(MeasureKind::correlation, x, y),
                1e-12);
    double sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double c = dist(MeasureKind::city_block, {x[i]}, {y[i]});
      sq += c * c;
    }
    EXPECT_NEAR(std::pow(dist(MeasureKind::euclidean, x, y), 2), sq, 1e-9 * sq);
  }
}

TEST(Distance, RejectsMismatchAndDivergences) {
  EXPECT_THROW(dist(MeasureKind::cosine, {1, 2}, {1, 2, 3}), Error);
  EXPECT_THROW(dist(MeasureKind::jeffreys, {1}, {1}), Error);
}

TEST(Divergence, OneDimensionalOracles) {
  const auto p = diag_gaussian({0}, {1});
  EXPECT_NEAR(kl_divergence(p, diag_gaussian({1}, {1})), 0.5, 1e-12);
  const auto q = diag_gaussian({0}, {4});
  EXPECT_NEAR(kl_divergence(p, q), std::log(2.0) + 0.125 - 0.5, 1e-12);
  EXPECT_NEAR(kl_divergence(q, p), 2.0 - std::log(2.0) - 0.5 , 1e-12);
  EXPECT_NEAR(jeffreys_divergence(p, q), 0.5625, 1e-12);
  EXPECT_EQ(kl_divergence(p, p), 0.0);
  EXPECT_EQ(jeffreys_divergence(q, q), 0.0);
}

TEST(Divergence, DiagMatchesOracleAndFullAgreesOnDiagonalInputs) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> var(0.2, 3.0);
  for (int t = 0; t < 20; ++t) {
    Vec m1 = random_vec(rng, 6), m2 = random_vec(rng, 6), v1(6), v2(6);
    for (auto& v : v1) v = var(rng);
    for (auto& v : v2) v = var(rng);
    const auto p = diag_gaussian(m1, v1), q = diag_gaussian(m2, v2);
    const double expected = oracle::kl_diag(m1, v1, m2, v2);
    EXPECT_NEAR(kl_divergence(p, q), expected, 1e-10 * expected);
    EXPECT_NEAR(kl_divergence(p, q, {CovMode::full, 1e-8}), expected, 1e-9 * expected);
    EXPECT_EQ(jeffreys_divergence(p, q), jeffreys_divergence(q, p));
    EXPECT_GT(kl_divergence(p, q), 0.0);
    EXPECT_EQ(divergence(MeasureKind::kl_2_1, p, q), kl_divergence(q, p));
  }
}

TEST(Divergence, FullCovarianceAgainstDenseFormula) {
  Eigen::Matrix3d a, b;
  a << 2, 0.3, 0.1, 0.3, 1, -0.2, 0.1, -0.2, 1.5;
  b << 1, -0.4, 0, -0.4, 2, 0.5, 0, 0.5, 3;
  SiblingDistribution p, q;
  p.mean = Eigen::Vector3d(0.1, -1, 2);
  q.mean = Eigen::Vector3d(1, 0.5, 0);
  p.covariance = CovarianceRep::full(a);
  q.covariance = CovarianceRep::full(b);
  const Eigen::Vector3d delta = q.mean - p.mean;
  const double expected =
      0.5 * ((b.inverse() * a).trace() - 3 - std::log(a.determinant() / b.determinant()) +
             delta.dot(b.inverse() * delta));
  EXPECT_NEAR(kl_divergence(p, q, {CovMode::full, 1e-8}), expected, 1e-12);
}

TEST(Divergence, Errors) {
  EXPECT_THROW(kl_divergence(diag_gaussian({0}, {1}), diag_gaussian({0, 0}, {1, 1})), Error);
  EXPECT_THROW(divergence(MeasureKind::cosine, diag_gaussian({0}, {1}), diag_gaussian({0}, {1})),
               Error);
}

TEST(Measures, Tokens) {
  for (auto k : kAllMeasures) EXPECT_EQ(parse_measure(token(k)), k);
  EXPECT_EQ(display_name(MeasureKind::kl_1_2), "KL(C1||C2)");
  EXPECT_THROW(parse_measure("manhattan"), Error);
  EXPECT_TRUE(is_divergence(MeasureKind::jeffreys));
  EXPECT_FALSE(is_divergence(MeasureKind::cosine));
}

}  // namespace
}  // namespace siblingshift
