// SPDX-License-Identifier: Apache-2.0
// Reference kernels. Plain left-to-right accumulation; this file must not be
// built with -ffast-math or any flag that lets the compiler reassociate.
#include "kernel_impl.hpp"

#include <cmath>

namespace siblingshift::kernels::detail {

double city_block_scalar(const double* a, const double* b, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += std::fabs(a[i] - b[i]);
  return acc;
}

double squared_l2_scalar(const double* a, const double* b, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double t = a[i] - b[i];
    acc += t * t;
  }
  return acc;
}

double chebyshev_scalar(const double* a, const double* b, size_t n) {
  double m = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double t = std::fabs(a[i] - b[i]);
    if (t > m) m = t;
  }
  return m;
}

double bray_curtis_scalar(const double* a, const double* b, size_t n) {
  double num = 0.0;
  double den = 0.0;
  for (size_t i = 0; i < n; ++i) {
    num += std::fabs(a[i] - b[i]);
    den += std::fabs(a[i] + b[i]);
  }
  return bray_curtis_finish(num, den);
}

double canberra_scalar(const double* a, const double* b, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double den = std::fabs(a[i]) + std::fabs(b[i]);
    if (den != 0.0) acc += std::fabs(a[i] - b[i]) / den;
  }
  return acc;
}

double dot_scalar(const double* a, const double* b, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace siblingshift::kernels::detail
