// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace siblingshift::cli {

/// Parses argv and runs one subcommand. Returns the process exit code:
/// 0 on success, 1 on a runtime failure, CLI11's code on a usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace siblingshift::cli
