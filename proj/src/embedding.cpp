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

#include "membed/embedding.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "membed/errors.hpp"
#include "membed/kernels.hpp"

namespace membed {

namespace {

void require_side(const CMatrix& m, int side, const char* what) {
  if (m.rows() != side || m.cols() != side) {
    std::ostringstream os;
    os << what << ": expected " << side << "x" << side << ", got " << m.rows() << "x" << m.cols();
    throw DimensionError(os.str());
  }
}

void require_density(const CMatrix& rho, const char* what) {
  if (!qla::is_hermitian(rho, 1e-10)) throw DataError(std::string(what) + " is not Hermitian");
  if (std::abs(rho.trace() - 1.0) > 1e-10) throw DataError(std::string(what) + " does not have unit trace");
  if (qla::min_eigenvalue(rho) < -1e-10) throw DataError(std::string(what) + " is not positive semidefinite");
}

}  // namespace

MarkovianEmbedding::MarkovianEmbedding(DimSpec dims, double tau, CMatrix h, CMatrix rho0_ser, CMatrix rho_a)
    : dims_(dims), tau_(tau), h_(std::move(h)), rho0_ser_(std::move(rho0_ser)), rho_a_(std::move(rho_a)) {
  dims_.validate();
  if (!(tau_ > 0.0) || !std::isfinite(tau_)) throw DataError("MarkovianEmbedding: tau must be positive");
  require_side(h_, dims_.d_total(), "MarkovianEmbedding: H");
  require_side(rho0_ser_, dims_.d_ser(), "MarkovianEmbedding: rho0_ser");
  require_side(rho_a_, dims_.d_a, "MarkovianEmbedding: rho_a");
  if (!h_.allFinite()) throw DataError("MarkovianEmbedding: H has non-finite entries");
  const double scale = std::max(1.0, h_.cwiseAbs().maxCoeff());
  if ((h_ - h_.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw DataError("MarkovianEmbedding: H is not Hermitian");
  h_ = qla::hermitian_part(h_);
  require_density(rho0_ser_, "MarkovianEmbedding: rho0_ser");
  require_density(rho_a_, "MarkovianEmbedding: rho_a");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho_a_, Eigen::EigenvaluesOnly);
  if (dims_.d_a > 1 && es.eigenvalues()[dims_.d_a - 2] > 1e-10)
    throw DataError("MarkovianEmbedding: rho_a must be a pure state");
}

MarkovianEmbedding MarkovianEmbedding::with_hamiltonian(const CMatrix& h) const {
  return MarkovianEmbedding(dims_, tau_, qla::hermitian_part(h), rho0_ser_, rho_a_);
}

CMatrix default_ancilla_state(int d_a) {
  CMatrix r = CMatrix::Zero(d_a, d_a);
  r(0, 0) = 1.0;
  return r;
}

Dilation Dilation::build(const MarkovianEmbedding& model) {
  const DimSpec& dims = model.dims();
  const int d = dims.d_ser();
  const int da = dims.d_a;
  Dilation out;
  out.spectrum = qla::herm_eig(model.hamiltonian());

  const SpectralDecomposition anc = qla::herm_eig(model.rho_a());
  out.ancilla = anc.vectors.col(da - 1);

  // W = U (I (x) |chi>) = V e^{-i lambda tau} (V^dagger (I (x) |chi>)), an N x d isometry.
  const int n = dims.d_total();
  CMatrix embed = CMatrix::Zero(n, d);
  for (int j = 0; j < d; ++j) embed.col(j).segment(j * da, da) = out.ancilla;
  CMatrix proj = out.spectrum.vectors.adjoint() * embed;
  for (int k = 0; k < n; ++k) proj.row(k) *= std::exp(cplx(0.0, -out.spectrum.values[k] * model.tau()));
  out.isometry = out.spectrum.vectors * proj;
  const CMatrix& w = out.isometry;

  out.kraus.assign(da, CMatrix(d, d));
  for (int a = 0; a < da; ++a)
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i) out.kraus[a](i, j) = w(i * da + a, j);

  out.superop = CMatrix::Zero(d * d, d * d);
  for (const CMatrix& k : out.kraus) out.superop += qla::kron(k.conjugate(), k);
  out.superop_dual = out.superop.adjoint();
  return out;
}

CMatrix Dilation::apply(const CMatrix& rho) const {
  const int d = d_ser();
  require_side(rho, d, "apply_channel: rho");
  CMatrix out(d, d);
  kernels::cgemv(d * d, d * d, superop.data(), d * d, rho.data(), out.data());
  return out;
}

CMatrix Dilation::apply_dual(const CMatrix& effect) const {
  const int d = d_ser();
  require_side(effect, d, "apply_dual: effect");
  CMatrix out(d, d);
  kernels::cgemv(d * d, d * d, superop_dual.data(), d * d, effect.data(), out.data());
  return out;
}

CMatrix apply_channel(const MarkovianEmbedding& model, const CMatrix& rho) {
  require_side(rho, model.dims().d_ser(), "apply_channel: rho");
  return Dilation::build(model).apply(rho);
}

CMatrix apply_dual(const MarkovianEmbedding& model, const CMatrix& effect) {
  require_side(effect, model.dims().d_ser(), "apply_dual: effect");
  return Dilation::build(model).apply_dual(effect);
}

CMatrix superoperator_matrix(const MarkovianEmbedding& model) { return Dilation::build(model).superop; }

GeneratorSuperoperator::GeneratorSuperoperator(CMatrix matrix, double tau) : matrix_(std::move(matrix)), tau_(tau) {
  if (matrix_.rows() != matrix_.cols()) throw DimensionError("GeneratorSuperoperator: matrix must be square");
  Eigen::ComplexEigenSolver<CMatrix> es(matrix_);
  if (es.info() != Eigen::Success) throw NumericalError("GeneratorSuperoperator: eigensolver did not converge");
  modes_ = es.eigenvectors();
  rates_ = es.eigenvalues();
  Eigen::JacobiSVD<CMatrix> svd(modes_);
  const auto& sv = svd.singularValues();
  const double cond = sv[sv.size() - 1] > 0 ? sv[0] / sv[sv.size() - 1] : INFINITY;
  if (!(cond <= 1e10)) {
    std::ostringstream os;
    os << "GeneratorSuperoperator: near-defective generator (condition number " << cond << ")";
    throw NumericalError(os.str());
  }
  modes_inv_ = modes_.partialPivLu().inverse();
}

CMatrix GeneratorSuperoperator::propagator(double t) const {
  if (t == 0.0) return CMatrix::Identity(matrix_.rows(), matrix_.cols());
  CVector e(rates_.size());
  for (Eigen::Index k = 0; k < rates_.size(); ++k) e[k] = std::exp(t * rates_[k]);
  return modes_ * e.asDiagonal() * modes_inv_;
}

GeneratorSuperoperator generator_from_superoperator(const CMatrix& superop, double tau) {
  return GeneratorSuperoperator(qla::logm_principal(superop) / tau, tau);
}

GeneratorSuperoperator extract_generator(const MarkovianEmbedding& model) {
  return generator_from_superoperator(superoperator_matrix(model), model.tau());
}

CMatrix stationary_state(const GeneratorSuperoperator& gen, int d_ser) {
  const CMatrix phi = gen.propagator(gen.tau());
  if (phi.rows() != d_ser * d_ser) throw DimensionError("stationary_state: generator size mismatch");
  Eigen::ComplexEigenSolver<CMatrix> es(phi, false);
  std::vector<double> moduli(es.eigenvalues().size());
  for (std::size_t k = 0; k < moduli.size(); ++k) moduli[k] = std::abs(es.eigenvalues()[k]);
  std::sort(moduli.rbegin(), moduli.rend());
  if (moduli.size() > 1 && !(moduli[1] < 1.0 - 1e-8)) {
    std::ostringstream os;
    os.precision(12);
    os << "equilibrium state is not unique; eigenvalue moduli:";
    for (double m : moduli) os << ' ' << m;
    throw NumericalError(os.str());
  }
  const CMatrix shifted = phi - CMatrix::Identity(phi.rows(), phi.cols());
  Eigen::JacobiSVD<CMatrix> svd(shifted, Eigen::ComputeFullV);
  CVector v = svd.matrixV().col(phi.cols() - 1);
  CMatrix rho = qla::unvec(v, d_ser);
  const cplx tr = rho.trace();
  if (std::abs(tr) < 1e-12) throw NumericalError("equilibrium state: fixed point is traceless");
  rho = qla::hermitian_part(rho / tr);
  const double residual = (gen.matrix() * qla::vec(rho)).norm();
  if (!(residual < 1e-8)) {
    std::ostringstream os;
    os << "equilibrium state: fixed-point residual " << residual << " exceeds 1e-8";
    throw NumericalError(os.str());
  }
  return rho;
}

CMatrix equilibrium_er_state(const GeneratorSuperoperator& gen, const DimSpec& dims) {
  if (dims.d_er == 1) return qla::identity(1);
  const CMatrix rho = stationary_state(gen, dims.d_ser());
  const std::array<int, 2> sub{dims.d_s, dims.d_er};
  const std::array<int, 1> keep{1};
  return qla::hermitian_part(qla::ptrace(rho, sub, keep));
}

CMatrix propagate(const GeneratorSuperoperator& gen, const CMatrix& rho, double t) {
  const int d = static_cast<int>(rho.rows());
  return qla::hermitian_part(qla::unvec(gen.propagator(t) * qla::vec(rho), d));
}

CMatrix trace_out_er(const CMatrix& m, const DimSpec& dims) {
  const std::array<int, 2> sub{dims.d_s, dims.d_er};
  const std::array<int, 1> keep{0};
  return qla::ptrace(m, sub, keep);
}

std::vector<CMatrix> predict_dynamics(const GeneratorSuperoperator& gen, const DimSpec& dims,
                                      const CMatrix& rho_s0, const CMatrix& rho_er0,
                                      const std::vector<double>& times) {
  require_side(rho_s0, dims.d_s, "predict_dynamics: rho_s0");
  require_side(rho_er0, dims.d_er, "predict_dynamics: rho_er0");
  const CMatrix joint = qla::kron(rho_s0, rho_er0);
  std::vector<CMatrix> out;
  out.reserve(times.size());
  double prev = 0.0;
  for (double t : times) {
    if (!(t >= prev)) throw DataError("predict_dynamics: times must be ascending and non-negative");
    prev = t;
    if (t == 0.0) {
      out.push_back(rho_s0);
      continue;
    }
    out.push_back(qla::hermitian_part(trace_out_er(propagate(gen, joint, t), dims)));
  }
  return out;
}

std::vector<CMatrix> predict_dynamics(const MarkovianEmbedding& model, const CMatrix& rho_s0,
                                      const CMatrix& rho_er0, const std::vector<double>& times) {
  return predict_dynamics(extract_generator(model), model.dims(), rho_s0, rho_er0, times);
}

}  // namespace membed
