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

// The learnable Markovian embedding: a Stinespring-dilated channel on S+ER,
// its dual, its superoperator and generator, and semigroup propagation.

#include <vector>

#include "membed/qla.hpp"

namespace membed {

// Effective Hamiltonian on S (x) ER (x) A plus the fixed states. Immutable once
// constructed; the constructor checks every invariant.
class MarkovianEmbedding {
 public:
  MarkovianEmbedding(DimSpec dims, double tau, CMatrix h, CMatrix rho0_ser, CMatrix rho_a);

  const DimSpec& dims() const { return dims_; }
  double tau() const { return tau_; }
  const CMatrix& hamiltonian() const { return h_; }
  const CMatrix& rho0_ser() const { return rho0_ser_; }
  const CMatrix& rho_a() const { return rho_a_; }

  // Same model with a new Hamiltonian (symmetrized).
  MarkovianEmbedding with_hamiltonian(const CMatrix& h) const;

 private:
  DimSpec dims_;
  double tau_;
  CMatrix h_;
  CMatrix rho0_ser_;
  CMatrix rho_a_;
};

// |0><0| on the ancilla.
CMatrix default_ancilla_state(int d_a);

// Everything derived from one spectral decomposition of H: the isometry
// W = U (I (x) |chi>), the Kraus operators K_a = (I (x) <a|) U (I (x) |chi>) with |chi> the ancilla
// support vector, and the column-stacking superoperator sum_a conj(K_a) (x) K_a.
struct Dilation {
  SpectralDecomposition spectrum;
  CMatrix isometry;  // N x d_SER
  CVector ancilla;
  std::vector<CMatrix> kraus;
  CMatrix superop;
  CMatrix superop_dual;  // superop^dagger: the Heisenberg-picture map

  static Dilation build(const MarkovianEmbedding& model);

  int d_ser() const { return kraus.empty() ? 0 : static_cast<int>(kraus.front().rows()); }
  CMatrix apply(const CMatrix& rho) const;
  CMatrix apply_dual(const CMatrix& effect) const;
};

// tr_A[U (rho (x) rho_A) U^dagger]
CMatrix apply_channel(const MarkovianEmbedding& model, const CMatrix& rho);
// tr_A[U^dagger (effect (x) I_A) U (I (x) rho_A)]
CMatrix apply_dual(const MarkovianEmbedding& model, const CMatrix& effect);
CMatrix superoperator_matrix(const MarkovianEmbedding& model);

// L = (1/tau) ln Phi on column-stacked density matrices, kept together with its
// eigendecomposition so exp(t L) is cheap for any t.
class GeneratorSuperoperator {
 public:
  // Diagonalizes `matrix`; throws NumericalError if it is near-defective.
  GeneratorSuperoperator(CMatrix matrix, double tau);

  const CMatrix& matrix() const { return matrix_; }
  double tau() const { return tau_; }
  // exp(t L)
  CMatrix propagator(double t) const;

 private:
  CMatrix matrix_;
  double tau_;
  CMatrix modes_;
  CMatrix modes_inv_;
  CVector rates_;
};

GeneratorSuperoperator extract_generator(const MarkovianEmbedding& model);
GeneratorSuperoperator generator_from_superoperator(const CMatrix& superop, double tau);

// Stationary state of exp(tau L) on S+ER (requires a unique fixed point).
CMatrix stationary_state(const GeneratorSuperoperator& gen, int d_ser);
// tr_S of the stationary state.
CMatrix equilibrium_er_state(const GeneratorSuperoperator& gen, const DimSpec& dims);

// exp(t L)[rho], Hermitian part.
CMatrix propagate(const GeneratorSuperoperator& gen, const CMatrix& rho, double t);

// rho_S(t) = tr_ER[exp(t L)[rho_S0 (x) rho_ER0]] for every t (ascending, >= 0).
std::vector<CMatrix> predict_dynamics(const MarkovianEmbedding& model, const CMatrix& rho_s0,
                                      const CMatrix& rho_er0, const std::vector<double>& times);
std::vector<CMatrix> predict_dynamics(const GeneratorSuperoperator& gen, const DimSpec& dims,
                                      const CMatrix& rho_s0, const CMatrix& rho_er0,
                                      const std::vector<double>& times);

// tr_ER of an S (x) ER operator.
CMatrix trace_out_er(const CMatrix& m, const DimSpec& dims);

}  // namespace membed
