// SPDX-License-Identifier: Apache-2.0
#include "siblingshift/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <string_view>

namespace siblingshift {

unsigned resolve_workers(unsigned requested) {
  unsigned workers = requested == 0 ? std::max(1U, std::thread::hardware_concurrency())
                                    : requested;
  if (const char* env = std::getenv("SIBLINGSHIFT_THREADS")) {
    std::string_view text(env);
    unsigned cap = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), cap);
    if (ec == std::errc{} && ptr == text.data() + text.size() && cap > 0) {
      workers = std::min(workers, cap);
    }
  }
  return std::max(1U, workers);
}

}  // namespace siblingshift
