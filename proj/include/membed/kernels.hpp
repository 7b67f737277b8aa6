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

#pragma once

// Complex inner-loop kernels for the propagation and gradient hot paths.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant. The variant is chosen once at runtime from CPUID; setting
// the environment variable MEMBED_SIMD=scalar forces the reference path.
// Complex numbers are interleaved (re, im) doubles.

#include <complex>
#include <string_view>

namespace membed::kernels {

using cplx = std::complex<double>;

struct KernelTable {
  std::string_view name;
  // y = A x, A column-major rows x cols with leading dimension lda.
  void (*cgemv)(int rows, int cols, const cplx* a, int lda, const cplx* x, cplx* y);
  // y += alpha x
  void (*caxpy)(int n, cplx alpha, const cplx* x, cplx* y);
  // sum_i conj(x_i) y_i
  cplx (*cdotc)(int n, const cplx* x, const cplx* y);
};

const KernelTable& scalar_table();
// nullptr when the build or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table();
const KernelTable& active();

// Overrides runtime selection (tests, benchmarks). Passing nullptr restores it.
void set_active(const KernelTable* table);

inline void cgemv(int rows, int cols, const cplx* a, int lda, const cplx* x, cplx* y) {
  active().cgemv(rows, cols, a, lda, x, y);
}
inline void caxpy(int n, cplx alpha, const cplx* x, cplx* y) { active().caxpy(n, alpha, x, y); }
inline cplx cdotc(int n, const cplx* x, const cplx* y) { return active().cdotc(n, x, y); }

}  // namespace membed::kernels
