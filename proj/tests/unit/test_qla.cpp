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

#include <array>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "membed/errors.hpp"
#include "membed/qla.hpp"
#include "oracles.hpp"

using namespace membed;

namespace {

CMatrix random_matrix(int r, int c, Rng& rng) {
  std::normal_distribution<double> normal;
  CMatrix m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      m(i, j) = cplx(re, im);
    }
  return m;
}

double max_diff(const CMatrix& a, const CMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("qla") {
  TEST_CASE("kron of identities and of sigma_x with sigma_z") {
    CHECK(max_diff(qla::kron(qla::identity(2), qla::identity(2)), qla::identity(4)) == 0.0);
    const CMatrix k = qla::kron(qla::pauli_x(), qla::pauli_z());
    CHECK(max_diff(k.block(0, 0, 2, 2), CMatrix::Zero(2, 2)) == 0.0);
    CHECK(max_diff(k.block(0, 2, 2, 2), qla::pauli_z()) == 0.0);
    CHECK(max_diff(k.block(2, 0, 2, 2), qla::pauli_z()) == 0.0);
    CHECK(max_diff(k.block(2, 2, 2, 2), CMatrix::Zero(2, 2)) == 0.0);
  }

  TEST_CASE("kron matches the index formula and is associative") {
    Rng rng(11);
    const CMatrix a = random_matrix(3, 3, rng);
    const CMatrix b = random_matrix(3, 3, rng);
    const CMatrix c = random_matrix(2, 3, rng);
    CHECK(max_diff(qla::kron(a, b), oracle::kron(a, b)) == 0.0);
    CHECK(max_diff(qla::kron(qla::kron(a, b), c), qla::kron(a, qla::kron(b, c))) < 1e-14);
  }

  TEST_CASE("ptrace of products, Bell states and random bipartite states") {
    Rng rng(12);
    const CMatrix ra = qla::random_density(2, rng);
    const CMatrix rb = qla::random_density(3, rng);
    const std::array<int, 2> dims{2, 3};
    const std::array<int, 1> keep_a{0};
    const std::array<int, 1> keep_b{1};
    CHECK(max_diff(qla::ptrace(qla::kron(ra, rb), dims, keep_a), ra * rb.trace()) < 1e-13);
    CHECK(max_diff(qla::ptrace(qla::kron(ra, rb), dims, keep_b), rb * ra.trace()) < 1e-13);

    CVector bell = CVector::Zero(4);
    bell[0] = bell[3] = 1.0 / std::sqrt(2.0);
    const std::array<int, 2> qq{2, 2};
    CHECK(max_diff(qla::ptrace(qla::projector(bell), qq, keep_a), qla::identity(2) / 2.0) < 1e-15);
    CHECK(max_diff(qla::ptrace(qla::projector(bell), qq, keep_b), qla::identity(2) / 2.0) < 1e-15);

    const CMatrix rho = qla::random_density(6, rng);
    CHECK(max_diff(qla::ptrace(rho, dims, keep_a), oracle::trace_second(rho, 2, 3)) < 1e-14);
    CHECK(max_diff(qla::ptrace(rho, dims, keep_b), oracle::trace_first(rho, 2, 3)) < 1e-14);
  }

  TEST_CASE("ptrace of the middle factor of three") {
    Rng rng(13);
    const CMatrix a = qla::random_density(2, rng);
    const CMatrix b = qla::random_density(3, rng);
    const CMatrix c = qla::random_density(2, rng);
    const std::array<int, 3> dims{2, 3, 2};
    const std::array<int, 2> keep{0, 2};
    CHECK(max_diff(qla::ptrace(qla::kron(qla::kron(a, b), c), dims, keep), qla::kron(a, c)) < 1e-13);
  }

  TEST_CASE("herm_eig on sigma_z, 2x2 closed form and random reconstruction") {
    const SpectralDecomposition z = qla::herm_eig(qla::pauli_z());
    CHECK(z.values[0] == doctest::Approx(-1.0));
    CHECK(z.values[1] == doctest::Approx(1.0));
    CHECK(std::abs(z.vectors(1, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(z.vectors(0, 1)) == doctest::Approx(1.0));

    CMatrix h(2, 2);
    h << 0.7, cplx(0.2, -0.4), cplx(0.2, 0.4), -1.3;
    const double mean = (0.7 - 1.3) / 2.0;
    const double rad = std::sqrt(std::pow((0.7 + 1.3) / 2.0, 2) + 0.2 * 0.2 + 0.4 * 0.4);
    const SpectralDecomposition s2 = qla::herm_eig(h);
    CHECK(s2.values[0] == doctest::Approx(mean - rad).epsilon(1e-14));
    CHECK(s2.values[1] == doctest::Approx(mean + rad).epsilon(1e-14));

    Rng rng(14);
    const CMatrix r = qla::random_hermitian(8, rng);
    const SpectralDecomposition s = qla::herm_eig(r);
    const CMatrix rebuilt = s.vectors * s.values.cast<cplx>().asDiagonal() * s.vectors.adjoint();
    CHECK(max_diff(rebuilt, r) < 1e-12);
    CHECK((s.vectors.adjoint() * s.vectors - qla::identity(8)).norm() < 1e-12);
  }

  TEST_CASE("herm_eig rejects non-Hermitian input") {
    CMatrix m = qla::pauli_x();
    m(0, 1) = 2.0;
    CHECK_THROWS_AS(qla::herm_eig(m), DataError);
  }

  TEST_CASE("expm_unitary special cases, Taylor oracle and group property") {
    CHECK(max_diff(qla::expm_unitary(qla::herm_eig(CMatrix::Zero(3, 3)), 1.7), qla::identity(3)) < 1e-15);
    const CMatrix u = qla::expm_unitary(qla::herm_eig(qla::pauli_z()), std::numbers::pi / 2);
    CHECK(std::abs(u(0, 0) - cplx(0.0, -1.0)) < 1e-15);
    CHECK(std::abs(u(1, 1) - cplx(0.0, 1.0)) < 1e-15);

    Rng rng(15);
    const CMatrix h = qla::random_hermitian(6, rng);
    const SpectralDecomposition s = qla::herm_eig(h);
    const double t = 0.05;
    CHECK(max_diff(qla::expm_unitary(s, t), oracle::expm(cplx(0.0, -t) * h)) < 1e-12);
    const CMatrix u1 = qla::expm_unitary(s, 0.3);
    CHECK(qla::is_unitary(u1, 1e-12));
    CHECK(max_diff(u1 * qla::expm_unitary(s, 0.9), qla::expm_unitary(s, 1.2)) < 1e-10);
  }

  TEST_CASE("logm_principal special cases and round trip") {
    CHECK(qla::logm_principal(qla::identity(3)).cwiseAbs().maxCoeff() < 1e-15);
    CMatrix d = CMatrix::Zero(2, 2);
    d(0, 0) = std::exp(0.3);
    d(1, 1) = std::exp(-0.5);
    const CMatrix l = qla::logm_principal(d);
    CHECK(std::abs(l(0, 0) - 0.3) < 1e-14);
    CHECK(std::abs(l(1, 1) + 0.5) < 1e-14);

    Rng rng(16);
    const CMatrix gen = 0.1 * random_matrix(9, 9, rng);
    const CMatrix m = oracle::expm(gen);
    const CMatrix back = qla::expm(qla::logm_principal(m));
    CHECK(max_diff(back, m) / m.cwiseAbs().maxCoeff() < 1e-8);
    CHECK(max_diff(qla::logm_principal(m), gen) < 1e-8);
  }

  TEST_CASE("logm_principal fails on the branch cut") {
    CMatrix m = qla::identity(2);
    m(1, 1) = -0.5;
    CHECK_THROWS_AS(qla::logm_principal(m), NumericalError);
    m(1, 1) = 0.0;
    CHECK_THROWS_AS(qla::logm_principal(m), NumericalError);
  }

  TEST_CASE("trace_norm cases and eigenvalue oracle") {
    CHECK(qla::trace_norm(CMatrix::Zero(3, 3)) == 0.0);
    CHECK(qla::trace_norm(qla::pauli_x()) == doctest::Approx(2.0).epsilon(1e-14));
    Rng rng(17);
    const CMatrix a = random_matrix(4, 4, rng);
    const Eigen::SelfAdjointEigenSolver<CMatrix> es(a.adjoint() * a);
    const double expected = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    CHECK(qla::trace_norm(a) == doctest::Approx(expected).epsilon(1e-12));
    const CMatrix b = random_matrix(4, 4, rng);
    CHECK(qla::trace_norm(a + b) <= qla::trace_norm(a) + qla::trace_norm(b) + 1e-12);
    const CVector v = qla::haar_random_pure_state(4, rng);
    CHECK(qla::trace_norm(-2.0 * qla::projector(v)) == doctest::Approx(2.0).epsilon(1e-12));
  }

  TEST_CASE("Haar pure states: normalization, determinism, isotropy") {
    Rng a(18), b(18);
    const CVector va = qla::haar_random_pure_state(5, a);
    CHECK(std::abs(va.norm() - 1.0) < 1e-15);
    CHECK(max_diff(va, qla::haar_random_pure_state(5, b)) == 0.0);
    Rng c(19);
    CHECK(std::abs(std::abs(qla::haar_random_pure_state(1, c)[0]) - 1.0) < 1e-15);

    Rng rng(20);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    const int samples = 10000;
    for (int k = 0; k < samples; ++k) {
      const CVector v = qla::haar_random_pure_state(2, rng);
      const CMatrix r = qla::projector(v);
      mean += Eigen::Vector3d(2.0 * r(0, 1).real(), -2.0 * r(0, 1).imag(), (r(0, 0) - r(1, 1)).real()) / samples;
    }
    CHECK(mean.norm() < 0.05);
  }

  TEST_CASE("column stacking: vec(A X B) = (B^T kron A) vec(X)") {
    Rng rng(21);
    const CMatrix a = random_matrix(3, 3, rng);
    const CMatrix x = random_matrix(3, 3, rng);
    const CMatrix b = random_matrix(3, 3, rng);
    CHECK((qla::vec(a * x * b) - qla::kron(b.transpose(), a) * qla::vec(x)).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(max_diff(qla::unvec(qla::vec(x), 3), x) == 0.0);
  }

  TEST_CASE("DimSpec") {
    const DimSpec d = DimSpec::make(2, 2);
    CHECK(d.d_a == 16);
    CHECK(d.d_total() == 64);
    DimSpec bad = d;
    bad.d_a = 15;
    CHECK_THROWS_AS(bad.validate(), DimensionError);
  }
}
