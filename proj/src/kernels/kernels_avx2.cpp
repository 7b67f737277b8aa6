// Copyright 2026 The membed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "membed/kernels.hpp"

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#define MEMBED_HAVE_AVX2_BUILD 1
#include <immintrin.h>
#else
#define MEMBED_HAVE_AVX2_BUILD 0
#endif

namespace membed::kernels {

#if MEMBED_HAVE_AVX2_BUILD

namespace {

#define MEMBED_AVX2 __attribute__((target("avx2,fma")))

// Two complex doubles per register: [re0, im0, re1, im1].
MEMBED_AVX2 inline __m256d cmul_bcast(__m256d a, __m256d br, __m256d bi) {
  const __m256d a_swap = _mm256_permute_pd(a, 0b0101);
  return _mm256_fmaddsub_pd(a, br, _mm256_mul_pd(a_swap, bi));
}

MEMBED_AVX2 void cgemv_avx2(int rows, int cols, const cplx* a, int lda, const cplx* x, cplx* y) {
  auto* yd = reinterpret_cast<double*>(y);
  for (int i = 0; i < rows; ++i) y[i] = 0.0;
  const int pairs = rows / 2;
  for (int j = 0; j < cols; ++j) {
    const auto* col = reinterpret_cast<const double*>(a + static_cast<long>(j) * lda);
    const __m256d br = _mm256_set1_pd(x[j].real());
    const __m256d bi = _mm256_set1_pd(x[j].imag());
    for (int p = 0; p < pairs; ++p) {
      const __m256d av = _mm256_loadu_pd(col + 4 * p);
      const __m256d yv = _mm256_loadu_pd(yd + 4 * p);
      _mm256_storeu_pd(yd + 4 * p, _mm256_add_pd(yv, cmul_bcast(av, br, bi)));
    }
    if (rows & 1) {
      const cplx* c = a + static_cast<long>(j) * lda;
      y[rows - 1] += c[rows - 1] * x[j];
    }
  }
}

MEMBED_AVX2 void caxpy_avx2(int n, cplx alpha, const cplx* x, cplx* y) {
  auto* yd = reinterpret_cast<double*>(y);
  const auto* xd = reinterpret_cast<const double*>(x);
  const __m256d br = _mm256_set1_pd(alpha.real());
  const __m256d bi = _mm256_set1_pd(alpha.imag());
  const int pairs = n / 2;
  for (int p = 0; p < pairs; ++p) {
    const __m256d xv = _mm256_loadu_pd(xd + 4 * p);
    const __m256d yv = _mm256_loadu_pd(yd + 4 * p);
    _mm256_storeu_pd(yd + 4 * p, _mm256_add_pd(yv, cmul_bcast(xv, br, bi)));
  }
  if (n & 1) y[n - 1] += alpha * x[n - 1];
}

MEMBED_AVX2 cplx cdotc_avx2(int n, const cplx* x, const cplx* y) {
  const auto* xd = reinterpret_cast<const double*>(x);
  const auto* yd = reinterpret_cast<const double*>(y);
  // straight = [xr*yr, xi*yi, ...], crossed = [xr*yi, xi*yr, ...]
  __m256d straight = _mm256_setzero_pd();
  __m256d crossed = _mm256_setzero_pd();
  const int pairs = n / 2;
  for (int p = 0; p < pairs; ++p) {
    const __m256d xv = _mm256_loadu_pd(xd + 4 * p);
    const __m256d yv = _mm256_loadu_pd(yd + 4 * p);
    straight = _mm256_fmadd_pd(xv, yv, straight);
    crossed = _mm256_fmadd_pd(xv, _mm256_permute_pd(yv, 0b0101), crossed);
  }
  alignas(32) double s[4];
  alignas(32) double c[4];
  _mm256_store_pd(s, straight);
  _mm256_store_pd(c, crossed);
  cplx acc((s[0] + s[1]) + (s[2] + s[3]), (c[0] - c[1]) + (c[2] - c[3]));
  if (n & 1) acc += std::conj(x[n - 1]) * y[n - 1];
  return acc;
}

#undef MEMBED_AVX2

}  // namespace

const KernelTable* avx2_table() {
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  static const KernelTable table{"avx2", cgemv_avx2, caxpy_avx2, cdotc_avx2};
  return supported ? &table : nullptr;
}

#else

const KernelTable* avx2_table() { return nullptr; }

#endif

}  // namespace membed::kernels
