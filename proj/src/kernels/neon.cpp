// SPDX-License-Identifier: Apache-2.0
// AArch64 Advanced SIMD kernels, 2 doubles per register. NEON is part of the
// AArch64 baseline, so no runtime probe is needed once this is compiled in.
#include "kernel_impl.hpp"

#include <arm_neon.h>

namespace siblingshift::kernels::detail {

namespace {

inline double abs1(double x) { return x < 0.0 ? -x : x; }

}  // namespace

double city_block_neon(const double* a, const double* b, size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vaddq_f64(acc0, vabdq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    acc1 = vaddq_f64(acc1, vabdq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += abs1(a[i] - b[i]);
  return acc;
}

double squared_l2_neon(const double* a, const double* b, size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float64x2_t d0 = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    const float64x2_t d1 = vsubq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    acc0 = vfmaq_f64(acc0, d0, d0);
    acc1 = vfmaq_f64(acc1, d1, d1);
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) {
    const double t = a[i] - b[i];
    acc += t * t;
  }
  return acc;
}

double chebyshev_neon(const double* a, const double* b, size_t n) {
  float64x2_t m0 = vdupq_n_f64(0.0);
  size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    m0 = vmaxq_f64(m0, vabdq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  }
  double m = vmaxvq_f64(m0);
  for (; i < n; ++i) {
    const double t = abs1(a[i] - b[i]);
    if (t > m) m = t;
  }
  return m;
}

double bray_curtis_neon(const double* a, const double* b, size_t n) {
  float64x2_t num = vdupq_n_f64(0.0);
  float64x2_t den = vdupq_n_f64(0.0);
  size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t va = vld1q_f64(a + i);
    const float64x2_t vb = vld1q_f64(b + i);
    num = vaddq_f64(num, vabdq_f64(va, vb));
    den = vaddq_f64(den, vabsq_f64(vaddq_f64(va, vb)));
  }
  double s_num = vaddvq_f64(num);
  double s_den = vaddvq_f64(den);
  for (; i < n; ++i) {
    s_num += abs1(a[i] - b[i]);
    s_den += abs1(a[i] + b[i]);
  }
  return bray_curtis_finish(s_num, s_den);
}

double canberra_neon(const double* a, const double* b, size_t n) {
  const float64x2_t one = vdupq_n_f64(1.0);
  float64x2_t acc = vdupq_n_f64(0.0);
  size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t va = vld1q_f64(a + i);
    const float64x2_t vb = vld1q_f64(b + i);
    const float64x2_t num = vabdq_f64(va, vb);
    const float64x2_t den = vaddq_f64(vabsq_f64(va), vabsq_f64(vb));
    const float64x2_t safe = vbslq_f64(vceqzq_f64(den), one, den);
    acc = vaddq_f64(acc, vdivq_f64(num, safe));
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double den = abs1(a[i]) + abs1(b[i]);
    if (den != 0.0) s += abs1(a[i] - b[i]) / den;
  }
  return s;
}

double dot_neon(const double* a, const double* b, size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace siblingshift::kernels::detail
