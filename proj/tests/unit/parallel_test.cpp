// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "siblingshift/parallel.hpp"

namespace siblingshift {
namespace {

TEST(Parallel, VisitsEveryIndexOnce) {
  for (unsigned workers : {1u, 2u, 7u}) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i].fetch_add(1); });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
}

TEST(Parallel, RethrowsFirstFailure) {
  EXPECT_THROW(parallel_for(100, 4,
                            [](std::size_t i) {
                              if (i == 37) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(Parallel, ThreadCapFromEnvironment) {
  ::setenv("SIBLINGSHIFT_THREADS", "2", 1);
  EXPECT_EQ(resolve_workers(8), 2u);
  EXPECT_EQ(resolve_workers(1), 1u);
  EXPECT_LE(resolve_workers(0), 2u);
  ::unsetenv("SIBLINGSHIFT_THREADS");
  EXPECT_GE(resolve_workers(0), 1u);
  EXPECT_EQ(resolve_workers(3), 3u);
}

}  // namespace
}  // namespace siblingshift
