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

#include "doctest.h"
#include "membed/assess.hpp"
#include "membed/embedding.hpp"
#include "membed/errors.hpp"
#include "oracles.hpp"

using namespace membed;

namespace {

MarkovianEmbedding random_model(int d_s, int d_er, double scale, Rng& rng, double tau = 1.0) {
  const DimSpec dims = DimSpec::make(d_s, d_er);
  return MarkovianEmbedding(dims, tau, scale * qla::random_hermitian(dims.d_total(), rng),
                            qla::random_density(dims.d_ser(), rng), default_ancilla_state(dims.d_a));
}

CMatrix unitary_of(const MarkovianEmbedding& m) {
  return oracle::expm(cplx(0.0, -m.tau()) * m.hamiltonian());
}

double max_diff(const CMatrix& a, const CMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("embedding") {
  TEST_CASE("constructor validates invariants") {
    const DimSpec dims = DimSpec::make(2, 1);
    const CMatrix rho = qla::identity(2) / 2.0;
    const CMatrix ra = default_ancilla_state(4);
    CHECK_NOTHROW(MarkovianEmbedding(dims, 1.0, CMatrix::Zero(8, 8), rho, ra));
    CMatrix bad_h = CMatrix::Zero(8, 8);
    bad_h(0, 1) = 1.0;
    CHECK_THROWS(MarkovianEmbedding(dims, 1.0, bad_h, rho, ra));
    CHECK_THROWS_AS(MarkovianEmbedding(dims, 1.0, CMatrix::Zero(6, 6), rho, ra), DimensionError);
    CHECK_THROWS(MarkovianEmbedding(dims, 1.0, CMatrix::Zero(8, 8), 2.0 * rho, ra));
    CHECK_THROWS(MarkovianEmbedding(dims, 1.0, CMatrix::Zero(8, 8), rho, qla::identity(4) / 4.0));
    CHECK_THROWS(MarkovianEmbedding(dims, 0.0, CMatrix::Zero(8, 8), rho, ra));
  }

  TEST_CASE("factorized Hamiltonian gives unitary conjugation") {
    Rng rng(1);
    const DimSpec dims = DimSpec::make(2, 2);
    const CMatrix h_ser = qla::random_hermitian(4, rng);
    const MarkovianEmbedding m(dims, 0.7, qla::kron(h_ser, qla::identity(dims.d_a)), qla::random_density(4, rng),
                               default_ancilla_state(dims.d_a));
    const CMatrix u = oracle::expm(cplx(0.0, -0.7) * h_ser);
    const CMatrix rho = qla::random_density(4, rng);
    const CMatrix e = qla::random_hermitian(4, rng);
    CHECK(max_diff(apply_channel(m, rho), u * rho * u.adjoint()) < 1e-12);
    CHECK(max_diff(apply_dual(m, e), u.adjoint() * e * u) < 1e-12);
  }

  TEST_CASE("apply_channel matches the dilation and a Kraus oracle") {
    Rng rng(2);
    const MarkovianEmbedding m = random_model(2, 1, 0.8, rng);
    const CMatrix u = unitary_of(m);
    const CMatrix rho = qla::random_density(2, rng);
    const CMatrix out = apply_channel(m, rho);
    CHECK(max_diff(out, oracle::dilated_channel(u, rho, m.rho_a())) < 1e-12);
    // Kraus operators from the blocks of U against the ancilla |0>.
    CMatrix kraus_sum = CMatrix::Zero(2, 2);
    for (int a = 0; a < 4; ++a) {
      CMatrix k(2, 2);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) k(i, j) = u(i * 4 + a, j * 4);
      kraus_sum += k * rho * k.adjoint();
    }
    CHECK(max_diff(out, kraus_sum) < 1e-12);
    CHECK(std::abs(out.trace() - 1.0) < 1e-12);
    CHECK(qla::min_eigenvalue(out) > -1e-12);
    CHECK(std::abs(apply_channel(m, qla::identity(2) / 2.0).trace() - 1.0) < 1e-12);
  }

  TEST_CASE("apply_channel rejects the wrong side") {
    Rng rng(3);
    const MarkovianEmbedding m = random_model(2, 1, 0.5, rng);
    CHECK_THROWS_AS(apply_channel(m, qla::identity(3) / 3.0), DimensionError);
    CHECK_THROWS_AS(apply_dual(m, qla::identity(4)), DimensionError);
  }

  TEST_CASE("dual channel is unital and adjoint to the channel") {
    Rng rng(4);
    const MarkovianEmbedding m = random_model(2, 2, 0.05, rng);
    const Dilation dil = Dilation::build(m);
    CHECK(max_diff(apply_dual(m, qla::identity(4)), qla::identity(4)) < 1e-12);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const CMatrix rho = qla::random_density(4, rng);
      const CMatrix e = qla::random_hermitian(4, rng);
      const cplx lhs = (dil.apply(rho) * e).trace();
      const cplx rhs = (rho * dil.apply_dual(e)).trace();
      worst = std::max(worst, std::abs(lhs - rhs));
    }
    CHECK(worst < 1e-12);
  }

  TEST_CASE("Dilation agrees with the direct channel evaluation") {
    Rng rng(5);
    const MarkovianEmbedding m = random_model(2, 2, 0.05, rng);
    const Dilation dil = Dilation::build(m);
    const CMatrix rho = qla::random_density(4, rng);
    const CMatrix e = qla::random_hermitian(4, rng);
    CHECK(max_diff(dil.apply(rho), apply_channel(m, rho)) < 1e-12);
    CHECK(max_diff(dil.apply_dual(e), apply_dual(m, e)) < 1e-12);
    CHECK(max_diff(dil.superop, superoperator_matrix(m)) < 1e-12);
  }

  TEST_CASE("superoperator matrix: identity channel, matrix units, trace preservation") {
    const DimSpec dims = DimSpec::make(2, 1);
    const MarkovianEmbedding id(dims, 1.0, CMatrix::Zero(8, 8), qla::identity(2) / 2.0, default_ancilla_state(4));
    CHECK(max_diff(superoperator_matrix(id), qla::identity(4)) < 1e-14);

    Rng rng(6);
    const MarkovianEmbedding m = random_model(2, 2, 0.4, rng);
    const CMatrix s = superoperator_matrix(m);
    double worst = 0.0;
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 4; ++i) {
        CMatrix unit = CMatrix::Zero(4, 4);
        unit(i, j) = 1.0;
        worst = std::max(worst, (s * qla::vec(unit) - qla::vec(apply_channel(m, unit))).cwiseAbs().maxCoeff());
      }
    CHECK(worst < 1e-12);
    const CVector vid = qla::vec(qla::identity(4));
    CHECK((s.adjoint() * vid - vid).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("generator: identity, Hamiltonian limit, round trip") {
    const DimSpec dims = DimSpec::make(2, 1);
    const MarkovianEmbedding id(dims, 1.0, CMatrix::Zero(8, 8), qla::identity(2) / 2.0, default_ancilla_state(4));
    CHECK(extract_generator(id).matrix().cwiseAbs().maxCoeff() < 1e-12);

    Rng rng(7);
    CMatrix h = qla::random_hermitian(2, rng);
    h *= 1.0 / qla::max_abs_eigenvalue_hermitian(h);
    const double tau = 0.9;
    const MarkovianEmbedding unitary(dims, tau, qla::kron(h, qla::identity(4)), qla::identity(2) / 2.0,
                                     default_ancilla_state(4));
    const CMatrix expected =
        cplx(0.0, -1.0) * (qla::kron(qla::identity(2), h) - qla::kron(h.transpose(), qla::identity(2)));
    CHECK(max_diff(extract_generator(unitary).matrix(), expected) < 1e-10);

    const MarkovianEmbedding m = random_model(2, 2, 0.05, rng);
    const GeneratorSuperoperator gen = extract_generator(m);
    const CMatrix s = superoperator_matrix(m);
    CHECK((gen.propagator(m.tau()) - s).norm() / s.norm() < 1e-8);
    CHECK((oracle::expm(m.tau() * gen.matrix()) - s).norm() / s.norm() < 1e-8);
  }

  TEST_CASE("generator rejects the branch cut") {
    const DimSpec dims = DimSpec::make(2, 1);
    // sigma_z conjugation with tau |H| = pi/2 puts eigenvalue -1 on the superoperator.
    const MarkovianEmbedding flip(dims, std::acos(-1.0) / 2.0, qla::kron(qla::pauli_z(), qla::identity(4)),
                                  qla::identity(2) / 2.0, default_ancilla_state(4));
    CHECK_THROWS_AS(extract_generator(flip), NumericalError);
  }

  TEST_CASE("composition: k applications equal exp(k tau L)") {
    Rng rng(8);
    const MarkovianEmbedding m = random_model(2, 2, 0.05, rng);
    const GeneratorSuperoperator gen = extract_generator(m);
    CMatrix rho = qla::random_density(4, rng);
    const CMatrix rho0 = rho;
    for (int k = 1; k <= 10; ++k) {
      rho = apply_channel(m, rho);
      CHECK(max_diff(propagate(gen, rho0, k * m.tau()), rho) < 1e-8);
    }
  }

  TEST_CASE("equilibrium state of a unital channel is maximally mixed") {
    Rng rng(9);
    const DimSpec dims = DimSpec::make(2, 2);
    // U = (sum_a V_a (x) |a><a|)(I (x) F) with F|0> uniform: a mixture of unitaries.
    CMatrix controlled = CMatrix::Zero(dims.d_total(), dims.d_total());
    for (int a = 0; a < dims.d_a; ++a) {
      const CMatrix v = oracle::expm(cplx(0.0, -0.5) * qla::random_hermitian(4, rng));
      controlled += qla::kron(v, qla::projector(CVector::Unit(dims.d_a, a)));
    }
    CMatrix f = CMatrix::Zero(dims.d_a, dims.d_a);
    for (int j = 0; j < dims.d_a; ++j)
      for (int k = 0; k < dims.d_a; ++k) f(j, k) = std::polar(1.0 / 4.0, 2.0 * std::acos(-1.0) * j * k / dims.d_a);
    const CMatrix u = controlled * qla::kron(qla::identity(4), f);
    const CMatrix h = qla::hermitian_part(cplx(0.0, 1.0) * qla::logm_principal(u));
    const MarkovianEmbedding m(dims, 1.0, h, qla::identity(4) / 4.0, default_ancilla_state(dims.d_a));
    const CMatrix s = superoperator_matrix(m);
    const CVector vid = qla::vec(qla::identity(4));
    REQUIRE((s * vid - vid).cwiseAbs().maxCoeff() < 1e-12);
    const CMatrix er = equilibrium_er_state(extract_generator(m), dims);
    CHECK(max_diff(er, qla::identity(2) / 2.0) < 1e-8);
  }

  TEST_CASE("equilibrium state with an attracting pure fixed point matches power iteration") {
    Rng rng(10);
    const DimSpec dims = DimSpec::make(2, 1);
    // Partial swap of S with the |0> ancilla: amplitude damping towards |0>, conjugated by a unitary.
    CMatrix swap = CMatrix::Zero(8, 8);
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) swap(a * 4 + s, s * 4 + a) = 1.0;
    for (int s = 0; s < 2; ++s)
      for (int a = 2; a < 4; ++a) swap(s * 4 + a, s * 4 + a) = 1.0;
    const CMatrix v = qla::random_unitary(2, rng);
    const CMatrix w = qla::kron(v, qla::identity(4));
    const CMatrix h = w * (0.4 * swap) * w.adjoint();
    const MarkovianEmbedding m(dims, 1.0, h, qla::identity(2) / 2.0, default_ancilla_state(4));
    const GeneratorSuperoperator gen = extract_generator(m);
    const CMatrix fixed = stationary_state(gen, 2);
    CMatrix power = qla::identity(2) / 2.0;
    for (int k = 0; k < 2000; ++k) power = apply_channel(m, power);
    CHECK(max_diff(fixed, power) < 1e-8);
    CHECK((gen.matrix() * qla::vec(fixed)).norm() < 1e-8);
    CHECK(std::abs(qla::trace_norm(fixed) - 1.0) < 1e-8);
  }

  TEST_CASE("degenerate fixed points are reported") {
    const DimSpec dims = DimSpec::make(2, 2);
    const MarkovianEmbedding id(dims, 1.0, CMatrix::Zero(64, 64), qla::identity(4) / 4.0, default_ancilla_state(16));
    CHECK_THROWS_AS(equilibrium_er_state(extract_generator(id), dims), NumericalError);
    // a one-dimensional reservoir has a trivial marginal whatever the fixed points
    const DimSpec one = DimSpec::make(2, 1);
    const MarkovianEmbedding id1(one, 1.0, CMatrix::Zero(8, 8), qla::identity(2) / 2.0, default_ancilla_state(4));
    CHECK(equilibrium_er_state(extract_generator(id1), one) == qla::identity(1));
  }

  TEST_CASE("predict_dynamics: t = 0, decoupled reservoir, normalization") {
    Rng rng(11);
    const DimSpec dims = DimSpec::make(2, 2);
    const CMatrix h_s = qla::random_hermitian(2, rng) * 0.5;
    const MarkovianEmbedding m(dims, 1.0, qla::kron(h_s, qla::identity(2 * dims.d_a)), qla::identity(4) / 4.0,
                               default_ancilla_state(dims.d_a));
    const CMatrix rho_s0 = qla::random_density(2, rng);
    const CMatrix rho_er0 = qla::random_density(2, rng);
    const std::vector<double> times{0.0, 1.0, 2.0, 3.0};
    const auto states = predict_dynamics(m, rho_s0, rho_er0, times);
    CHECK(max_diff(states[0], rho_s0) < 1e-14);
    for (std::size_t k = 1; k < times.size(); ++k) {
      const CMatrix u = oracle::expm(cplx(0.0, -times[k]) * h_s);
      CHECK(max_diff(states[k], u * rho_s0 * u.adjoint()) < 1e-8);
    }

    const MarkovianEmbedding r = random_model(2, 2, 0.05, rng);
    const auto traj = predict_dynamics(r, rho_s0, rho_er0, {0.0, 0.5, 1.7, 4.0});
    for (const auto& s : traj) {
      CHECK(std::abs(s.trace() - 1.0) < 1e-8);
      CHECK(qla::min_eigenvalue(s) > -1e-8);
    }
    CHECK_THROWS(predict_dynamics(r, rho_s0, rho_er0, {1.0, 0.5}));
  }

  TEST_CASE("Choi matrices of random channels are PSD") {
    Rng rng(12);
    const MarkovianEmbedding m = random_model(2, 2, 0.5, rng);
    const ChoiMatrix c = choi_of_superoperator(superoperator_matrix(m), ChoiSource::learned, 1.0);
    CHECK(qla::min_eigenvalue(c.omega) >= -1e-10);
  }
}
