// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

// Pairwise vector kernels over double precision rows. The scalar table is the
// reference; SIMD tables must agree with it to rounding (see
// tests/unit/kernels_test.cpp) and are picked at runtime from what the CPU reports.

namespace siblingshift::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view to_string(Isa isa);
/// "scalar", "avx2", "neon"; "auto" is not an Isa and is rejected here.
Isa parse_isa(std::string_view token);

using PairFn = double (*)(const double* a, const double* b, std::size_t n);

struct KernelTable {
  Isa isa;
  PairFn city_block;      // sum |a - b|
  PairFn squared_l2;      // sum (a - b)^2
  PairFn chebyshev;       // max |a - b|
  PairFn bray_curtis;     // sum |a - b| / sum |a + b|, 0/0 -> 0, x/0 -> 1
  PairFn canberra;        // sum |a - b| / (|a| + |b|), 0/0 terms -> 0
  PairFn dot;             // sum a * b
};

const KernelTable& scalar_table() noexcept;

/// True when the kernel was compiled in and the running CPU supports it.
bool available(Isa isa) noexcept;

/// Throws Error(invalid_argument) when `isa` is not available.
const KernelTable& table(Isa isa);

/// Widest available ISA, unless SIBLINGSHIFT_KERNEL names another one
/// ("scalar", "avx2", "neon"; "auto" or unset means widest).
const KernelTable& active_table();

std::vector<Isa> available_isas();

}  // namespace siblingshift::kernels
