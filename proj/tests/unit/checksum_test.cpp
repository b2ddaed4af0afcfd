// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "siblingshift/checksum.hpp"
#include "siblingshift/error.hpp"

namespace siblingshift {
namespace {

TEST(Checksum, PublishedFnv1aVectors) {
  EXPECT_EQ(fnv1a64(std::string_view{}), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64(std::string_view{"a"}), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64(std::string_view{"foobar"}), 0x85944171f73967e8ULL);
}

TEST(Checksum, IncrementalMatchesOneShot) {
  Fnv1a64 h;
  h.update(std::string_view{"foo"});
  h.update(std::string_view{"bar"});
  EXPECT_EQ(h.digest(), fnv1a64(std::string_view{"foobar"}));
}

TEST(Checksum, HexRoundTrip) {
  for (std::uint64_t v : {0ULL, 1ULL, 0x85944171f73967e8ULL, ~0ULL}) {
    const std::string hex = to_hex(v);
    EXPECT_EQ(hex.size(), 16u);
    EXPECT_EQ(from_hex(hex), v);
  }
  EXPECT_EQ(to_hex(0xabcULL), "0000000000000abc");
}

TEST(Checksum, BadHexRejected) {
  for (const char* bad : {"", "xyz", "0123456789abcdef0", "000000000000000g"}) {
    try {
      from_hex(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::invalid_argument);
    }
  }
}

}  // namespace
}  // namespace siblingshift
