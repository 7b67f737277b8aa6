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

#include "membed/qla.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "membed/errors.hpp"

namespace membed {

DimSpec DimSpec::make(int d_s, int d_er) {
  DimSpec d{d_s, d_er, d_s * d_er * d_s * d_er};
  d.validate();
  return d;
}

void DimSpec::validate() const {
  if (d_s < 1 || d_er < 1 || d_a < 1) throw DimensionError("DimSpec: all dimensions must be >= 1");
  if (d_a != d_ser() * d_ser()) {
    std::ostringstream os;
    os << "DimSpec: d_a must equal (d_s*d_er)^2 = " << d_ser() * d_ser() << ", got " << d_a;
    throw DimensionError(os.str());
  }
}

namespace qla {

namespace {

double max_abs(const CMatrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

void require_square(const CMatrix& m, const char* who) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << who << ": expected a square matrix, got " << m.rows() << "x" << m.cols();
    throw DimensionError(os.str());
  }
}

}  // namespace

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  const Eigen::Index rb = b.rows(), cb = b.cols();
  CMatrix out(a.rows() * rb, a.cols() * cb);
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) out.block(i * rb, j * cb, rb, cb) = a(i, j) * b;
  return out;
}

CMatrix ptrace(const CMatrix& m, std::span<const int> dims, std::span<const int> keep) {
  require_square(m, "ptrace");
  const int n_sub = static_cast<int>(dims.size());
  long total = 1;
  for (int d : dims) {
    if (d < 1) throw DimensionError("ptrace: subsystem dimensions must be >= 1");
    total *= d;
  }
  if (total != m.rows()) {
    std::ostringstream os;
    os << "ptrace: product of dims (" << total << ") does not match matrix side " << m.rows();
    throw DimensionError(os.str());
  }
  std::vector<bool> kept(n_sub, false);
  for (int k : keep) {
    if (k < 0 || k >= n_sub) throw DimensionError("ptrace: keep index out of range");
    kept[k] = true;
  }

  // strides of the full index, most significant subsystem first
  std::vector<long> stride(n_sub, 1);
  for (int s = n_sub - 2; s >= 0; --s) stride[s] = stride[s + 1] * dims[s + 1];

  long d_keep = 1, d_trace = 1;
  for (int s = 0; s < n_sub; ++s) (kept[s] ? d_keep : d_trace) *= dims[s];

  // Offsets into the full index for every kept multi-index and every traced one.
  auto offsets = [&](bool want_kept, long count) {
    std::vector<long> off(count, 0);
    for (long idx = 0; idx < count; ++idx) {
      long rem = idx, o = 0;
      for (int s = n_sub - 1; s >= 0; --s) {
        if (kept[s] != want_kept) continue;
        o += (rem % dims[s]) * stride[s];
        rem /= dims[s];
      }
      off[idx] = o;
    }
    return off;
  };
  const auto keep_off = offsets(true, d_keep);
  const auto trace_off = offsets(false, d_trace);

  CMatrix out = CMatrix::Zero(d_keep, d_keep);
  for (long c = 0; c < d_keep; ++c)
    for (long r = 0; r < d_keep; ++r) {
      cplx acc = 0.0;
      for (long t : trace_off) acc += m(keep_off[r] + t, keep_off[c] + t);
      out(r, c) = acc;
    }
  return out;
}

SpectralDecomposition herm_eig(const CMatrix& h) {
  require_square(h, "herm_eig");
  const double scale = std::max(1.0, max_abs(h));
  if (max_abs(h - h.adjoint()) > 1e-10 * scale)
    throw DataError("herm_eig: input is not Hermitian within 1e-10");
  const CMatrix sym = hermitian_part(h);
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(sym);
  if (solver.info() != Eigen::Success)
    throw NumericalError("herm_eig: tridiagonal QR iteration did not converge within the iteration cap");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

CMatrix expm_unitary(const SpectralDecomposition& spec, double t) {
  CVector phases(spec.size());
  for (int k = 0; k < spec.size(); ++k) phases[k] = std::exp(cplx(0.0, -spec.values[k] * t));
  return spec.vectors * phases.asDiagonal() * spec.vectors.adjoint();
}

CMatrix logm_principal(const CMatrix& m) {
  require_square(m, "logm_principal");
  Eigen::ComplexEigenSolver<CMatrix> solver(m);
  if (solver.info() != Eigen::Success) throw NumericalError("logm_principal: eigensolver did not converge");
  const CVector& mu = solver.eigenvalues();
  const CMatrix& p = solver.eigenvectors();

  for (Eigen::Index k = 0; k < mu.size(); ++k) {
    const cplx z = mu[k];
    const double dist = z.real() >= 0.0 ? std::abs(z) : std::abs(z.imag());
    if (dist <= 1e-10) {
      std::ostringstream os;
      os.precision(17);
      os << "logm_principal: eigenvalue " << z.real() << (z.imag() < 0 ? "" : "+") << z.imag()
         << "i lies within 1e-10 of the branch cut (closed negative real axis)";
      throw NumericalError(os.str());
    }
  }
  Eigen::JacobiSVD<CMatrix> svd(p);
  const auto& sv = svd.singularValues();
  const double cond = sv[sv.size() - 1] > 0 ? sv[0] / sv[sv.size() - 1] : INFINITY;
  if (!(cond <= 1e10)) {
    std::ostringstream os;
    os << "logm_principal: eigenvector matrix is near-defective (condition number " << cond << ")";
    throw NumericalError(os.str());
  }
  CVector logs(mu.size());
  for (Eigen::Index k = 0; k < mu.size(); ++k) logs[k] = std::log(mu[k]);
  return p * logs.asDiagonal() * p.partialPivLu().inverse();
}

CMatrix expm(const CMatrix& m) {
  require_square(m, "expm");
  return m.exp();
}

double trace_norm(const CMatrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(a);
  return svd.singularValues().sum();
}

CVector haar_random_pure_state(int d, Rng& rng) {
  if (d < 1) throw DimensionError("haar_random_pure_state: d must be >= 1");
  std::normal_distribution<double> normal;
  CVector v(d);
  for (int i = 0; i < d; ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    v[i] = cplx(re, im);
  }
  return v / v.norm();
}

CVector vec(const CMatrix& a) { return Eigen::Map<const CVector>(a.data(), a.size()); }

CMatrix unvec(const CVector& v, int rows) {
  if (rows <= 0 || v.size() % rows != 0) throw DimensionError("unvec: length not divisible by rows");
  return Eigen::Map<const CMatrix>(v.data(), rows, v.size() / rows);
}

CMatrix dagger(const CMatrix& a) { return a.adjoint(); }

CMatrix hermitian_part(const CMatrix& a) { return 0.5 * (a + a.adjoint()); }

bool is_hermitian(const CMatrix& a, double tol) {
  return a.rows() == a.cols() && max_abs(a - a.adjoint()) <= tol;
}

bool is_unitary(const CMatrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  return max_abs(a.adjoint() * a - CMatrix::Identity(a.rows(), a.cols())) <= tol;
}

double min_eigenvalue(const CMatrix& hermitian) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian_part(hermitian), Eigen::EigenvaluesOnly);
  return solver.eigenvalues()[0];
}

double max_abs_eigenvalue_hermitian(const CMatrix& hermitian) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian_part(hermitian), Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  return std::max(std::abs(ev[0]), std::abs(ev[ev.size() - 1]));
}

CMatrix projector(const CVector& v) { return v * v.adjoint(); }

CMatrix random_hermitian(int d, Rng& rng) {
  std::normal_distribution<double> normal;
  CMatrix g(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = cplx(re, im);
    }
  return hermitian_part(g);
}

CMatrix random_density(int d, Rng& rng) {
  std::normal_distribution<double> normal;
  CMatrix g(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = cplx(re, im);
    }
  CMatrix rho = g * g.adjoint();
  return hermitian_part(rho / rho.trace());
}

CMatrix random_unitary(int d, Rng& rng) {
  std::normal_distribution<double> normal;
  CMatrix g(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = cplx(re, im);
    }
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ();
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < d; ++k) {
    const double a = std::abs(r(k, k));
    if (a > 0) q.col(k) *= r(k, k) / a;
  }
  return q;
}

CMatrix pauli_x() {
  CMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

CMatrix pauli_y() {
  CMatrix m(2, 2);
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}

CMatrix pauli_z() {
  CMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

CMatrix identity(int d) { return CMatrix::Identity(d, d); }

}  // namespace qla
}  // namespace membed
