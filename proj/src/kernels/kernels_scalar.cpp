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

namespace membed::kernels {

namespace {

void cgemv_scalar(int rows, int cols, const cplx* a, int lda, const cplx* x, cplx* y) {
  for (int i = 0; i < rows; ++i) y[i] = 0.0;
  for (int j = 0; j < cols; ++j) {
    const cplx xj = x[j];
    const cplx* col = a + static_cast<long>(j) * lda;
    for (int i = 0; i < rows; ++i) y[i] += col[i] * xj;
  }
}

void caxpy_scalar(int n, cplx alpha, const cplx* x, cplx* y) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

cplx cdotc_scalar(int n, const cplx* x, const cplx* y) {
  cplx acc = 0.0;
  for (int i = 0; i < n; ++i) acc += std::conj(x[i]) * y[i];
  return acc;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", cgemv_scalar, caxpy_scalar, cdotc_scalar};
  return table;
}

}  // namespace membed::kernels
