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

// Dense complex linear algebra for small Hilbert spaces.
//
// Operators are Eigen::MatrixXcd (column-major, interleaved re/im). Vectorization
// is column stacking throughout the library: vec(A)[c * rows + r] = A(r, c), so
// vec(A X B) = (B^T kron A) vec(X) and vec is a reinterpretation of Eigen storage.

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace membed {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using Rng = std::mt19937_64;

// Subsystem dimensions of a Markovian embedding: system S, effective reservoir
// ER and the Stinespring ancilla A with d_a = (d_s * d_er)^2.
struct DimSpec {
  int d_s = 2;
  int d_er = 1;
  int d_a = 4;

  static DimSpec make(int d_s, int d_er);

  int d_ser() const { return d_s * d_er; }
  int d_total() const { return d_s * d_er * d_a; }
  void validate() const;

  friend bool operator==(const DimSpec&, const DimSpec&) = default;
};

// H = sum_k values[k] |psi_k><psi_k|, eigenvalues ascending, vectors as columns.
struct SpectralDecomposition {
  RVector values;
  CMatrix vectors;

  int size() const { return static_cast<int>(values.size()); }
};

namespace qla {

CMatrix kron(const CMatrix& a, const CMatrix& b);

// Reduced operator on the subsystems listed in `keep` (in their original order).
// Subsystem 0 is the most significant index factor.
CMatrix ptrace(const CMatrix& m, std::span<const int> dims, std::span<const int> keep);

// Hermitian eigendecomposition. The input is symmetrized as (h + h^dagger)/2
// after checking Hermiticity to 1e-10 (relative to the largest entry).
SpectralDecomposition herm_eig(const CMatrix& h);

// sum_k exp(-i lambda_k t) |psi_k><psi_k|
CMatrix expm_unitary(const SpectralDecomposition& spec, double t);

// Principal matrix logarithm through the eigendecomposition. Throws
// NumericalError when an eigenvalue sits within 1e-10 of the closed negative
// real axis or when the eigenvector matrix has condition number above 1e10.
CMatrix logm_principal(const CMatrix& m);

// General matrix exponential (scaling and squaring).
CMatrix expm(const CMatrix& m);

// Sum of singular values.
double trace_norm(const CMatrix& a);

// d x 1 Haar-random unit vector.
CVector haar_random_pure_state(int d, Rng& rng);

// Column stacking and its inverse.
CVector vec(const CMatrix& a);
CMatrix unvec(const CVector& v, int rows);

CMatrix dagger(const CMatrix& a);
CMatrix hermitian_part(const CMatrix& a);
bool is_hermitian(const CMatrix& a, double tol);
bool is_unitary(const CMatrix& a, double tol);
double min_eigenvalue(const CMatrix& hermitian);
double max_abs_eigenvalue_hermitian(const CMatrix& hermitian);

// |v><v|
CMatrix projector(const CVector& v);

// Gaussian Hermitian matrix (G + G^dagger)/2 with G_ij ~ N(0,1) + i N(0,1).
CMatrix random_hermitian(int d, Rng& rng);
// Mixed state from a Ginibre matrix: G G^dagger / tr.
CMatrix random_density(int d, Rng& rng);
// Haar unitary (QR of a Ginibre matrix with phase fix).
CMatrix random_unitary(int d, Rng& rng);

CMatrix pauli_x();
CMatrix pauli_y();
CMatrix pauli_z();
CMatrix identity(int d);

}  // namespace qla
}  // namespace membed
