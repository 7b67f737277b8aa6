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

#include <cstdlib>
#include <random>
#include <vector>

#include "doctest.h"
#include "membed/kernels.hpp"

using membed::kernels::cplx;
namespace k = membed::kernels;

namespace {

std::vector<cplx> random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::vector<cplx> v(n);
  for (auto& x : v) {
    const double re = normal(rng);
    const double im = normal(rng);
    x = cplx(re, im);
  }
  return v;
}

double max_abs_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("scalar cgemv matches a naive loop") {
    std::mt19937_64 rng(1);
    const int rows = 5, cols = 7, lda = 6;
    const auto a = random_vector(lda * cols, rng);
    const auto x = random_vector(cols, rng);
    std::vector<cplx> y(rows), ref(rows, cplx(0.0));
    k::scalar_table().cgemv(rows, cols, a.data(), lda, x.data(), y.data());
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) ref[i] += a[j * lda + i] * x[j];
    CHECK(max_abs_diff(y, ref) < 1e-13);
  }

  TEST_CASE("scalar caxpy and cdotc") {
    std::mt19937_64 rng(2);
    const auto x = random_vector(9, rng);
    auto y = random_vector(9, rng);
    const auto y0 = y;
    const cplx alpha(0.3, -1.2);
    k::scalar_table().caxpy(9, alpha, x.data(), y.data());
    cplx dot(0.0);
    for (int i = 0; i < 9; ++i) {
      CHECK(std::abs(y[i] - (y0[i] + alpha * x[i])) < 1e-14);
      dot += std::conj(x[i]) * y0[i];
    }
    CHECK(std::abs(k::scalar_table().cdotc(9, x.data(), y0.data()) - dot) < 1e-13);
  }

  TEST_CASE("AVX2 variants agree with the scalar reference on odd and even sizes") {
    const k::KernelTable* simd = k::avx2_table();
    if (simd == nullptr) {
      MESSAGE("AVX2 kernels unavailable on this machine; equivalence not exercised");
      return;
    }
    std::mt19937_64 rng(3);
    for (int rows : {1, 2, 3, 7, 16, 33}) {
      for (int cols : {1, 4, 5, 17}) {
        const int lda = rows + 1;
        const auto a = random_vector(lda * cols, rng);
        const auto x = random_vector(cols, rng);
        std::vector<cplx> ys(rows), yv(rows);
        k::scalar_table().cgemv(rows, cols, a.data(), lda, x.data(), ys.data());
        simd->cgemv(rows, cols, a.data(), lda, x.data(), yv.data());
        CHECK(max_abs_diff(ys, yv) < 1e-12);
      }
    }
    for (int n : {0, 1, 2, 3, 8, 15, 64, 257}) {
      const auto x = random_vector(n, rng);
      auto ys = random_vector(n, rng);
      auto yv = ys;
      const cplx alpha(-0.7, 0.4);
      k::scalar_table().caxpy(n, alpha, x.data(), ys.data());
      simd->caxpy(n, alpha, x.data(), yv.data());
      CHECK(max_abs_diff(ys, yv) < 1e-13);
      const cplx ds = k::scalar_table().cdotc(n, x.data(), ys.data());
      const cplx dv = simd->cdotc(n, x.data(), ys.data());
      CHECK(std::abs(ds - dv) <= 1e-12 * (1.0 + std::abs(ds)));
    }
  }

  TEST_CASE("set_active overrides and restores the selection") {
    const std::string_view original = k::active().name;
    k::set_active(&k::scalar_table());
    CHECK(k::active().name == k::scalar_table().name);
    k::set_active(nullptr);
    CHECK(k::active().name == original);
  }

  TEST_CASE("runtime selection honours the environment override") {
    const char* env = std::getenv("MEMBED_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") {
      CHECK(k::active().name == k::scalar_table().name);
    } else if (k::avx2_table() != nullptr) {
      CHECK(k::active().name == k::avx2_table()->name);
    }
  }
}
