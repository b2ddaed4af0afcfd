// SPDX-License-Identifier: Apache-2.0
#pragma once

// Kept free of C++ standard library headers: the NEON translation unit is
// built for targets where only the compiler's freestanding headers exist.
#include <stddef.h>

namespace siblingshift::kernels::detail {

double city_block_scalar(const double* a, const double* b, size_t n);
double squared_l2_scalar(const double* a, const double* b, size_t n);
double chebyshev_scalar(const double* a, const double* b, size_t n);
double bray_curtis_scalar(const double* a, const double* b, size_t n);
double canberra_scalar(const double* a, const double* b, size_t n);
double dot_scalar(const double* a, const double* b, size_t n);

#if defined(SIBLINGSHIFT_HAVE_AVX2)
double city_block_avx2(const double* a, const double* b, size_t n);
double squared_l2_avx2(const double* a, const double* b, size_t n);
double chebyshev_avx2(const double* a, const double* b, size_t n);
double bray_curtis_avx2(const double* a, const double* b, size_t n);
double canberra_avx2(const double* a, const double* b, size_t n);
double dot_avx2(const double* a, const double* b, size_t n);
#endif

#if defined(SIBLINGSHIFT_HAVE_NEON)
double city_block_neon(const double* a, const double* b, size_t n);
double squared_l2_neon(const double* a, const double* b, size_t n);
double chebyshev_neon(const double* a, const double* b, size_t n);
double bray_curtis_neon(const double* a, const double* b, size_t n);
double canberra_neon(const double* a, const double* b, size_t n);
double dot_neon(const double* a, const double* b, size_t n);
#endif

// Shared finishing rule for Bray-Curtis so every ISA resolves the zero
// denominator identically.
inline double bray_curtis_finish(double num, double den) {
  if (den == 0.0) return num == 0.0 ? 0.0 : 1.0;
  return num / den;
}

}  // namespace siblingshift::kernels::detail
