// SPDX-License-Identifier: Apache-2.0
// AVX2 + FMA kernels, 4 doubles per register, two independent accumulators
// per reduction. Built with -mavx2 -mfma; only reached after the dispatcher
// has confirmed CPU support.
#include "kernel_impl.hpp"

#include <immintrin.h>

#include <cmath>

namespace siblingshift::kernels::detail {

namespace {

inline __m256d abs_pd(__m256d x) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), x);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double hmax(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_max_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_max_sd(m, _mm_unpackhi_pd(m, m)));
}

}  // namespace

double city_block_avx2(const double* a, const double* b, size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, abs_pd(_mm256_sub_pd(_mm256_loadu_pd(a + i),
                                                    _mm256_loadu_pd(b + i))));
    acc1 = _mm256_add_pd(acc1, abs_pd(_mm256_sub_pd(_mm256_loadu_pd(a + i + 4),
                                                    _mm256_loadu_pd(b + i + 4))));
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_add_pd(acc0, abs_pd(_mm256_sub_pd(_mm256_loadu_pd(a + i),
                                                    _mm256_loadu_pd(b + i))));
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += std::fabs(a[i] - b[i]);
  return acc;
}

double squared_l2_avx2(const double* a, const double* b, size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double t = a[i] - b[i];
    acc += t * t;
  }
  return acc;
}

double chebyshev_avx2(const double* a, const double* b, size_t n) {
  __m256d m0 = _mm256_setzero_pd();
  __m256d m1 = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    m0 = _mm256_max_pd(m0, abs_pd(_mm256_sub_pd(_mm256_loadu_pd(a + i),
                                                _mm256_loadu_pd(b + i))));
    m1 = _mm256_max_pd(m1, abs_pd(_mm256_sub_pd(_mm256_loadu_pd(a + i + 4),
                                                _mm256_loadu_pd(b + i + 4))));
  }
  for (; i + 4 <= n; i += 4) {
    m0 = _mm256_max_pd(m0, abs_pd(_mm256_sub_pd(_mm256_loadu_pd(a + i),
                                                _mm256_loadu_pd(b + i))));
  }
  double m = hmax(_mm256_max_pd(m0, m1));
  for (; i < n; ++i) {
    const double t = std::fabs(a[i] - b[i]);
    if (t > m) m = t;
  }
  return m;
}

double bray_curtis_avx2(const double* a, const double* b, size_t n) {
  __m256d num = _mm256_setzero_pd();
  __m256d den = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d va = _mm256_loadu_pd(a + i);
    const __m256d vb = _mm256_loadu_pd(b + i);
    num = _mm256_add_pd(num, abs_pd(_mm256_sub_pd(va, vb)));
    den = _mm256_add_pd(den, abs_pd(_mm256_add_pd(va, vb)));
  }
  double s_num = hsum(num);
  double s_den = hsum(den);
  for (; i < n; ++i) {
    s_num += std::fabs(a[i] - b[i]);
    s_den += std::fabs(a[i] + b[i]);
  }
  return bray_curtis_finish(s_num, s_den);
}

double canberra_avx2(const double* a, const double* b, size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d va = _mm256_loadu_pd(a + i);
    const __m256d vb = _mm256_loadu_pd(b + i);
    const __m256d num = abs_pd(_mm256_sub_pd(va, vb));
    const __m256d den = _mm256_add_pd(abs_pd(va), abs_pd(vb));
    // den == 0 implies num == 0, so dividing by 1 there yields the 0 term.
    const __m256d safe = _mm256_blendv_pd(den, one, _mm256_cmp_pd(den, zero, _CMP_EQ_OQ));
    acc = _mm256_add_pd(acc, _mm256_div_pd(num, safe));
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double den = std::fabs(a[i]) + std::fabs(b[i]);
    if (den != 0.0) s += std::fabs(a[i] - b[i]) / den;
  }
  return s;
}

double dot_avx2(const double* a, const double* b, size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace siblingshift::kernels::detail
