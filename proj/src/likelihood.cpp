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

#include "membed/likelihood.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "membed/errors.hpp"
#include "membed/kernels.hpp"

namespace membed {

namespace {

void check_compatible(const DimSpec& dims, const Dataset& data) {
  if (data.d_s != dims.d_s) {
    std::ostringstream os;
    os << "dataset d_s = " << data.d_s << " does not match model d_s = " << dims.d_s;
    throw DimensionError(os.str());
  }
}

// (<phi| (x) I_ER) y (|phi> (x) I_ER)
CMatrix compress(const CMatrix& y, const CVector& phi, int d_er) {
  const int d_s = static_cast<int>(phi.size());
  CMatrix sigma = CMatrix::Zero(d_er, d_er);
  for (int s2 = 0; s2 < d_s; ++s2) {
    if (phi[s2] == cplx(0.0)) continue;
    for (int s1 = 0; s1 < d_s; ++s1) {
      if (phi[s1] == cplx(0.0)) continue;
      sigma += (std::conj(phi[s1]) * phi[s2]) * y.block(s1 * d_er, s2 * d_er, d_er, d_er);
    }
  }
  return sigma;
}

CVector outcome_vector(const MeasurementRecord& r) { return r.basis.col(r.outcome); }

}  // namespace

double PropagationCache::merged_log_likelihood(std::size_t m) const {
  const double overlap = (forward[m].cwiseProduct(backward[m].transpose())).sum().real();
  return std::log(overlap) + forward_log_scale[m] + backward_log_scale[m];
}

PropagationCache forward_pass(const Dilation& channel, const CMatrix& rho0, const DimSpec& dims,
                              const Dataset& data) {
  check_compatible(dims, data);
  const int d = dims.d_ser();
  const std::size_t n = data.size();
  PropagationCache cache;
  cache.forward.reserve(n + 1);
  cache.forward_log_scale.reserve(n + 1);
  cache.forward.push_back(rho0);
  cache.forward_log_scale.push_back(0.0);

  CMatrix evolved(d, d);
  for (std::size_t i = 0; i < n; ++i) {
    const CMatrix& prev = cache.forward.back();
    kernels::cgemv(d * d, d * d, channel.superop.data(), d * d, prev.data(), evolved.data());
    const CVector phi = outcome_vector(data.records[i]);
    const CMatrix sigma = compress(evolved, phi, dims.d_er);
    const double prob = sigma.trace().real();
    if (!(prob > 1e-300) || !std::isfinite(prob)) {
      std::ostringstream os;
      os << "model assigns probability zero to the observed outcome at step " << data.records[i].step;
      throw ZeroProbabilityError(static_cast<std::size_t>(data.records[i].step), os.str());
    }
    cache.forward.push_back(qla::hermitian_part(qla::kron(qla::projector(phi), sigma / prob)));
    cache.forward_log_scale.push_back(cache.forward_log_scale.back() + std::log(prob));
  }
  return cache;
}

PropagationCache forward_pass(const MarkovianEmbedding& model, const Dataset& data) {
  return forward_pass(Dilation::build(model), model.rho0_ser(), model.dims(), data);
}

void backward_pass(const Dilation& channel, const DimSpec& dims, const Dataset& data, PropagationCache& cache) {
  check_compatible(dims, data);
  const int d = dims.d_ser();
  const std::size_t n = data.size();
  cache.backward.assign(n + 1, CMatrix());
  cache.backward_log_scale.assign(n + 1, 0.0);
  cache.backward[n] = CMatrix::Identity(d, d);

  CMatrix pulled(d, d);
  for (std::size_t i = n; i >= 1; --i) {
    const CVector phi = outcome_vector(data.records[i - 1]);
    const CMatrix sandwiched = qla::kron(qla::projector(phi), compress(cache.backward[i], phi, dims.d_er));
    kernels::cgemv(d * d, d * d, channel.superop_dual.data(), d * d, sandwiched.data(), pulled.data());
    const CMatrix effect = qla::hermitian_part(pulled);
    const double norm = qla::max_abs_eigenvalue_hermitian(effect);
    if (!(norm > 1e-300) || !std::isfinite(norm)) {
      std::ostringstream os;
      os << "backward effect vanished at step " << data.records[i - 1].step;
      throw ZeroProbabilityError(static_cast<std::size_t>(data.records[i - 1].step), os.str());
    }
    cache.backward[i - 1] = effect / norm;
    cache.backward_log_scale[i - 1] = cache.backward_log_scale[i] + std::log(norm);
  }
}

PropagationCache backward_pass(const MarkovianEmbedding& model, const Dataset& data) {
  PropagationCache cache;
  backward_pass(Dilation::build(model), model.dims(), data, cache);
  return cache;
}

PropagationCache build_cache(const Dilation& channel, const MarkovianEmbedding& model, const Dataset& data) {
  PropagationCache cache = forward_pass(channel, model.rho0_ser(), model.dims(), data);
  backward_pass(channel, model.dims(), data, cache);
  return cache;
}

double log_likelihood(const MarkovianEmbedding& model, const Dataset& data) {
  return forward_pass(model, data).log_likelihood();
}

namespace {

// f(a, b) = (exp(-i a tau) - exp(-i b tau)) / (a - b), evaluated as
// -i tau exp(-i (a+b) tau / 2) sinc((a-b) tau / 2); the limit -i tau exp(-i a tau)
// applies within the relative degeneracy threshold.
cplx divided_difference(double a, double b, double tau) {
  if (std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a))) return cplx(0.0, -tau) * std::exp(cplx(0.0, -a * tau));
  const double x = 0.5 * (a - b) * tau;
  return cplx(0.0, -tau) * std::exp(cplx(0.0, -0.5 * (a + b) * tau)) * (std::sin(x) / x);
}

CMatrix divided_difference_matrix(const SpectralDecomposition& spec, double tau) {
  const int n = spec.size();
  CMatrix f(n, n);
  for (int l = 0; l < n; ++l)
    for (int k = 0; k < n; ++k) f(k, l) = divided_difference(spec.values[k], spec.values[l], tau);
  return f;
}

}  // namespace

CMatrix unitary_derivative(const SpectralDecomposition& spec, int mu, int nu, double tau) {
  const int n = spec.size();
  if (mu < 0 || mu >= n || nu < 0 || nu >= n) throw DimensionError("unitary_derivative: index out of range");
  const CMatrix& v = spec.vectors;
  // (V^dagger |mu><nu| V)_{kl} = conj(V_{mu k}) V_{nu l}
  const CMatrix c = v.row(mu).adjoint() * v.row(nu);
  return v * divided_difference_matrix(spec, tau).cwiseProduct(c) * v.adjoint();
}

GradientMatrix log_likelihood_gradient(const Dilation& channel, const MarkovianEmbedding& model,
                                       const Dataset& data, const PropagationCache& cache,
                                       std::span<const std::size_t> batch) {
  const DimSpec& dims = model.dims();
  const int d = dims.d_ser();
  const int dd = d * d;
  const int da = dims.d_a;
  const int big = dims.d_total();
  const std::size_t n = data.size();
  if (cache.forward.size() != n + 1 || cache.backward.size() != n + 1)
    throw DataError("log_likelihood_gradient: cache does not match the dataset");
  if (batch.empty()) throw DataError("log_likelihood_gradient: empty batch");

  // Z = sum_m kron(B_m^T, rho_m) / s_m, so that vec(rho_m K_a^dagger B_m) = Z_m vec(K_a^dagger).
  CMatrix z = CMatrix::Zero(dd, dd);
  CMatrix evolved(d, d);
  for (std::size_t m : batch) {
    if (m < 1 || m > n) throw DataError("log_likelihood_gradient: batch index out of range");
    const CMatrix& rho = cache.forward[m - 1];
    const CVector phi = outcome_vector(data.records[m - 1]);
    const CMatrix b = qla::kron(qla::projector(phi), compress(cache.backward[m], phi, dims.d_er));
    kernels::cgemv(dd, dd, channel.superop.data(), dd, rho.data(), evolved.data());
    const double s = kernels::cdotc(dd, b.data(), evolved.data()).real();
    if (!(s > 0.0)) {
      std::ostringstream os;
      os << "log_likelihood_gradient: sandwich value vanishes at step " << data.records[m - 1].step;
      throw ZeroProbabilityError(static_cast<std::size_t>(data.records[m - 1].step), os.str());
    }
    const double w = 1.0 / s;
    // column (j' d + j) of kron(B^T, rho) is kron(B^T[:, j'], rho[:, j]) = kron(B[j', :]^T, rho[:, j])
    for (int jp = 0; jp < d; ++jp)
      for (int j = 0; j < d; ++j) {
        cplx* col = z.data() + static_cast<long>(jp * d + j) * dd;
        for (int ip = 0; ip < d; ++ip)
          kernels::caxpy(d, w * b(jp, ip), rho.data() + static_cast<long>(j) * d, col + ip * d);
      }
  }
  z *= static_cast<double>(n) / static_cast<double>(batch.size());

  // R (d x N): R[:, i' da + a] = (rho K_a^dagger B)[:, i'] summed over the batch.
  CMatrix r(d, big);
  CMatrix ra(d, d);
  for (int a = 0; a < da; ++a) {
    const CMatrix kdag = channel.kraus[a].adjoint();
    kernels::cgemv(dd, dd, z.data(), dd, kdag.data(), ra.data());
    for (int ip = 0; ip < d; ++ip) r.col(ip * da + a) = ra.col(ip);
  }
  // M = (I_d (x) |chi>) R; only V^dagger M V is needed.
  const CMatrix& v = channel.spectrum.vectors;
  CMatrix vdag_j(big, d);  // V^dagger (I (x) |chi>)
  {
    CMatrix j_anc = CMatrix::Zero(big, d);
    for (int i = 0; i < d; ++i) j_anc.block(i * da, i, da, 1) = channel.ancilla;
    vdag_j.noalias() = v.adjoint() * j_anc;
  }
  const CMatrix m_rot = vdag_j * (r * v);
  const CMatrix f = divided_difference_matrix(channel.spectrum, model.tau());
  const CMatrix g_half = v.conjugate() * f.cwiseProduct(m_rot.transpose()) * v.transpose();
  return {g_half + g_half.adjoint()};
}

GradientMatrix log_likelihood_gradient(const MarkovianEmbedding& model, const Dataset& data,
                                       const PropagationCache& cache, std::span<const std::size_t> batch) {
  return log_likelihood_gradient(Dilation::build(model), model, data, cache, batch);
}

GradientMatrix log_likelihood_gradient(const MarkovianEmbedding& model, const Dataset& data) {
  const Dilation channel = Dilation::build(model);
  const PropagationCache cache = build_cache(channel, model, data);
  std::vector<std::size_t> all(data.size());
  for (std::size_t m = 0; m < all.size(); ++m) all[m] = m + 1;
  return log_likelihood_gradient(channel, model, data, cache, all);
}

void check_continuation(const Dataset& train, const Dataset& validation) {
  if (train.provenance.seed != validation.provenance.seed ||
      train.provenance.config_hash != validation.provenance.config_hash)
    throw DataError("validation set comes from a different trajectory than the training set");
  if (train.d_s != validation.d_s || train.tau != validation.tau)
    throw DataError("validation set has a different d_s or tau than the training set");
  if (!train.records.empty() && !validation.records.empty() &&
      validation.records.front().step != train.records.back().step + 1)
    throw DataError("validation set does not continue the training set");
}

double conditional_validation_ll(const Dilation& channel, const MarkovianEmbedding& model, const Dataset& train,
                                 const Dataset& validation) {
  if (validation.size() == 0) throw DataError("conditional_validation_ll: empty validation set");
  check_continuation(train, validation);
  const PropagationCache prefix = forward_pass(channel, model.rho0_ser(), model.dims(), train);
  return forward_pass(channel, prefix.forward.back(), model.dims(), validation).log_likelihood() /
         static_cast<double>(validation.size());
}

Dataset sample_trajectory(const MarkovianEmbedding& model, std::size_t n, Rng& rng, std::uint64_t seed_tag) {
  const DimSpec& dims = model.dims();
  if (dims.d_s != 2) throw DimensionError("sample_trajectory: qubit systems only");
  const Dilation channel = Dilation::build(model);
  Dataset out;
  out.tau = model.tau();
  out.d_s = dims.d_s;
  out.provenance.seed = seed_tag;
  out.provenance.config_hash = "embedding";
  CMatrix rho = model.rho0_ser();
  const CMatrix id_er = qla::identity(dims.d_er);
  for (std::size_t i = 1; i <= n; ++i) {
    rho = channel.apply(rho);
    SampledMeasurement m = sample_measurement(qla::hermitian_part(trace_out_er(rho, dims)), rng);
    m.record.step = static_cast<long>(i);
    const CMatrix e = qla::kron(m.projector, id_er);
    rho = e * rho * e;
    const double p = rho.trace().real();
    if (!(p > 0.0)) throw NumericalError("sample_trajectory: sampled a zero-probability outcome");
    rho = qla::hermitian_part(rho / p);
    out.records.push_back(std::move(m.record));
  }
  return out;
}

double conditional_validation_ll(const MarkovianEmbedding& model, const Dataset& train, const Dataset& validation) {
  return conditional_validation_ll(Dilation::build(model), model, train, validation);
}

void write_increments_csv(const PropagationCache& cache, const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out.precision(17);
  out << "step,log_p_increment,log_p_cumulative\n";
  for (std::size_t i = 1; i < cache.forward_log_scale.size(); ++i)
    out << data.records[i - 1].step << ',' << cache.forward_log_scale[i] - cache.forward_log_scale[i - 1] << ','
        << cache.forward_log_scale[i] << '\n';
}

}  // namespace membed
