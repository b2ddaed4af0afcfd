// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"

#include <cstdio>
#include <system_error>

namespace siblingshift::fixture {

Cloud normal_rows(std::size_t n, std::size_t d, std::mt19937_64& rng, double sigma) {
  std::normal_distribution<double> z(0.0, sigma);
  Cloud rows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index k = 0; k < rows.cols(); ++k) rows(i, k) = z(rng);
  }
  return rows;
}

SiblingSet make_set(const std::string& word, const std::string& corpus_id, const Cloud& rows) {
  SiblingSet set;
  set.word = word;
  set.corpus_id = corpus_id;
  set.embeddings = rows.cast<float>();
  return set;
}

Cloud recenter(Cloud rows, const Eigen::VectorXd& target) {
  const Eigen::RowVectorXd shift = target.transpose() - rows.colwise().mean();
  rows.rowwise() += shift;
  return rows;
}

std::vector<std::string> ChangeCorpora::words() const {
  std::vector<std::string> out = stable;
  out.push_back(addition);
  out.push_back(replacement);
  return out;
}

ChangeCorpora make_change_corpora(std::uint64_t seed, std::size_t stable_words) {
  constexpr std::size_t d = 16;
  constexpr std::size_t n = 200;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> base(0.0, 3.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  auto random_mean = [&] {
    Eigen::VectorXd m(d);
    for (std::size_t k = 0; k < d; ++k) m(k) = base(rng);
    return m;
  };
  // Max-abs exactly 1, so the Chebyshev distance between the two means is
  // the drift magnitude itself.
  auto drift_pattern = [&] {
    Eigen::VectorXd p(d);
    for (std::size_t k = 0; k < d; ++k) p(k) = unit(rng);
    p(0) = 1.0;
    return p;
  };

  ChangeCorpora c;
  c.dim = d;
  auto add = [&](const std::string& word, const Cloud& r1, const Cloud& r2) {
    c.corpus1.push_back(make_set(word, "c1", r1));
    c.corpus2.push_back(make_set(word, "c2", r2));
  };

  for (std::size_t k = 0; k < stable_words; ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "stable%02zu", k);
    const Eigen::VectorXd mu = random_mean();
    const Eigen::VectorXd mu2 = mu + 0.002 * static_cast<double>(k + 1) * drift_pattern();
    add(name, recenter(normal_rows(n, d, rng), mu), recenter(normal_rows(n, d, rng), mu2));
    c.stable.emplace_back(name);
  }

  {
    const Eigen::VectorXd mu = random_mean();
    Cloud r2 = normal_rows(n, d, rng);
    for (std::size_t i = n / 2; i < n; ++i) {
      const double offset = i % 2 == 0 ? 4.0 : -4.0;
      for (Eigen::Index k = 0; k < 4; ++k) r2(static_cast<Eigen::Index>(i), k) += offset;
    }
    add(c.addition, recenter(normal_rows(n, d, rng), mu),
        recenter(std::move(r2), mu + 0.005 * drift_pattern()));
  }
  {
    const Eigen::VectorXd mu = random_mean();
    add(c.replacement, recenter(normal_rows(n, d, rng), mu),
        recenter(normal_rows(n, d, rng), mu + random_mean()));
  }
  return c;
}

TempDir::TempDir(const std::string& tag) {
  std::random_device rd;
  char suffix[24];
  std::snprintf(suffix, sizeof suffix, "%08x%08x", rd(), rd());
  path_ = std::filesystem::temp_directory_path() / ("siblingshift-" + tag + "-" + suffix);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace siblingshift::fixture
