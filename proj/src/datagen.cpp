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

#include "membed/datagen.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <deque>
#include <sstream>

#include "membed/errors.hpp"
#include "membed/rng.hpp"

namespace membed {

namespace {

CMatrix kron3(const CMatrix& a, const CMatrix& b, const CMatrix& c) { return qla::kron(qla::kron(a, b), c); }

CMatrix ket0_density() {
  CMatrix r = CMatrix::Zero(2, 2);
  r(0, 0) = 1.0;
  return r;
}

void require_density(const CMatrix& rho, int side, const char* what) {
  if (rho.rows() != side || rho.cols() != side) throw DimensionError(std::string(what) + ": wrong size");
  if (!qla::is_hermitian(rho, 1e-10) || std::abs(rho.trace() - 1.0) > 1e-10 || qla::min_eigenvalue(rho) < -1e-10)
    throw DataError(std::string(what) + " is not a valid density matrix");
}

// Kraus operators of rho -> tr_R[U (rho (x) rho_R) U^dagger] on S (x) S1.
std::vector<CMatrix> collision_kraus(const CollisionModelConfig& cfg) {
  const CMatrix u = qla::expm_unitary(qla::herm_eig(cfg.hamiltonian), cfg.delta_t);
  const SpectralDecomposition env = qla::herm_eig(cfg.rho_r);
  std::vector<CMatrix> kraus;
  for (int c = 0; c < 2; ++c) {
    const double w = env.values[c];
    if (w <= 0.0) continue;
    for (int b = 0; b < 2; ++b) {
      CMatrix k = CMatrix::Zero(4, 4);
      for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) {
          cplx acc = 0.0;
          for (int e = 0; e < 2; ++e) acc += u(2 * i + b, 2 * j + e) * env.vectors(e, c);
          k(i, j) = std::sqrt(w) * acc;
        }
      kraus.push_back(k);
    }
  }
  return kraus;
}

}  // namespace

CMatrix default_collision_hamiltonian() {
  const CMatrix i2 = qla::identity(2), x = qla::pauli_x(), y = qla::pauli_y(), z = qla::pauli_z();
  return kron3(z, i2, i2) + kron3(x, i2, i2) + kron3(i2, z, i2) + kron3(i2, x, i2) + kron3(z, z, i2) +
         0.3 * kron3(i2, z, z) + 0.3 * kron3(i2, y, y) + 0.3 * kron3(i2, x, x);
}

CollisionModelConfig CollisionModelConfig::defaults() {
  CollisionModelConfig cfg;
  cfg.hamiltonian = default_collision_hamiltonian();
  cfg.delta_t = 0.2;
  cfg.collisions_per_period = 5;
  cfg.rho_r = ket0_density();
  cfg.rho_ss1_0 = qla::kron(ket0_density(), ket0_density());
  return cfg;
}

void CollisionModelConfig::validate() const {
  if (hamiltonian.rows() != 8 || hamiltonian.cols() != 8)
    throw DimensionError("collision model: Hamiltonian must be 8x8 on S (x) S1 (x) R");
  if (!qla::is_hermitian(hamiltonian, 1e-10)) throw DataError("collision model: Hamiltonian is not Hermitian");
  if (!(delta_t >= 0.0) || !std::isfinite(delta_t)) throw ConfigError("collision model: delta_t must be >= 0");
  if (collisions_per_period < 1) throw ConfigError("collision model: collisions_per_period must be >= 1");
  require_density(rho_r, 2, "collision model: rho_R");
  require_density(rho_ss1_0, 4, "collision model: rho_SS1(0)");
}

std::string CollisionModelConfig::hash() const {
  std::ostringstream os;
  os.precision(17);
  auto dump = [&](const CMatrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) os << m(i, j).real() << ',' << m(i, j).imag() << ';';
  };
  dump(hamiltonian);
  os << '|' << delta_t << '|' << collisions_per_period << '|';
  dump(rho_r);
  dump(rho_ss1_0);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(os.str())));
  return buf;
}

CMatrix collision_step(const CMatrix& rho_ss1, const CollisionModelConfig& cfg) {
  if (rho_ss1.rows() != 4 || rho_ss1.cols() != 4) throw DimensionError("collision_step: rho must be 4x4");
  const CMatrix u = qla::expm_unitary(qla::herm_eig(cfg.hamiltonian), cfg.delta_t);
  const CMatrix big = u * qla::kron(rho_ss1, cfg.rho_r) * u.adjoint();
  const std::array<int, 3> dims{2, 2, 2};
  const std::array<int, 2> keep{0, 1};
  return qla::hermitian_part(qla::ptrace(big, dims, keep));
}

CollisionModel::CollisionModel(CollisionModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  step_superop_ = CMatrix::Zero(16, 16);
  for (const CMatrix& k : collision_kraus(cfg_)) step_superop_ += qla::kron(k.conjugate(), k);
  period_superop_ = CMatrix::Identity(16, 16);
  for (int c = 0; c < cfg_.collisions_per_period; ++c) period_superop_ = step_superop_ * period_superop_;
}

CMatrix CollisionModel::collide(const CMatrix& rho_ss1) const {
  return qla::hermitian_part(qla::unvec(step_superop_ * qla::vec(rho_ss1), 4));
}

CMatrix CollisionModel::period(const CMatrix& rho_ss1) const {
  CMatrix rho = rho_ss1;
  for (int c = 0; c < cfg_.collisions_per_period; ++c) rho = collide(rho);
  return rho;
}

void Dataset::validate() const {
  if (d_s < 1) throw DataError("dataset: d_s must be >= 1");
  if (!(tau > 0.0)) throw DataError("dataset: tau must be positive");
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (i > 0 && r.step != records[i - 1].step + 1) {
      std::ostringstream os;
      os << "dataset: step " << r.step << " does not follow step " << records[i - 1].step;
      throw DataError(os.str());
    }
    if (r.step < 1) throw DataError("dataset: steps start at 1");
    if (r.basis.rows() != d_s || r.basis.cols() != d_s) throw DataError("dataset: basis has wrong size");
    if (!qla::is_unitary(r.basis, 1e-10)) throw DataError("dataset: basis is not unitary");
    if (r.outcome < 0 || r.outcome >= d_s) throw DataError("dataset: outcome out of range");
  }
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& data, std::size_t count) {
  if (count > data.size()) throw DataError("split_dataset: count exceeds dataset size");
  Dataset a{{}, data.tau, data.d_s, data.provenance};
  Dataset b = a;
  a.records.assign(data.records.begin(), data.records.begin() + count);
  b.records.assign(data.records.begin() + count, data.records.end());
  return {std::move(a), std::move(b)};
}

Dataset concatenate(const Dataset& first, const Dataset& second) {
  if (first.d_s != second.d_s || first.tau != second.tau) throw DataError("concatenate: incompatible datasets");
  if (!first.records.empty() && !second.records.empty() &&
      second.records.front().step != first.records.back().step + 1)
    throw DataError("concatenate: second dataset does not continue the first");
  Dataset out = first;
  out.records.insert(out.records.end(), second.records.begin(), second.records.end());
  return out;
}

CMatrix bloch_direction_basis(double x, double y, double z) {
  CVector plus(2);
  if (z >= 0.0) {
    const double nrm = std::sqrt(2.0 * (1.0 + z));
    plus << cplx(1.0 + z, 0.0) / nrm, cplx(x, y) / nrm;
  } else {
    const double nrm = std::sqrt(2.0 * (1.0 - z));
    plus << cplx(x, -y) / nrm, cplx(1.0 - z, 0.0) / nrm;
  }
  plus /= plus.norm();
  CMatrix basis(2, 2);
  basis.col(0) = plus;
  basis(0, 1) = -std::conj(plus[1]);
  basis(1, 1) = std::conj(plus[0]);
  return basis;
}

SampledMeasurement measure_in_basis(const CMatrix& rho_s, const CMatrix& basis, Rng& rng) {
  const int d = static_cast<int>(basis.cols());
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double u = uniform(rng);
  double cumulative = 0.0;
  int outcome = d - 1;
  for (int k = 0; k < d; ++k) {
    const double p = std::max(0.0, (basis.col(k).adjoint() * rho_s * basis.col(k))(0, 0).real());
    cumulative += p;
    if (u < cumulative) {
      outcome = k;
      break;
    }
  }
  MeasurementRecord rec{1, basis, outcome};
  CMatrix proj = rec.projector();
  return {std::move(rec), std::move(proj)};
}

SampledMeasurement sample_measurement(const CMatrix& rho_s, Rng& rng) {
  if (rho_s.rows() != 2 || rho_s.cols() != 2) throw DimensionError("sample_measurement: qubit state expected");
  std::normal_distribution<double> normal;
  double x = normal(rng);
  double y = normal(rng);
  double z = normal(rng);
  const double r = std::sqrt(x * x + y * y + z * z);
  x /= r;
  y /= r;
  z /= r;
  return measure_in_basis(rho_s, bloch_direction_basis(x, y, z), rng);
}

Dataset generate_trajectory(const CollisionModelConfig& cfg, std::size_t n, Rng& rng, std::uint64_t seed_tag) {
  if (n < 1) throw ConfigError("generate_trajectory: n must be >= 1");
  const CollisionModel model(cfg);
  Dataset out;
  out.tau = cfg.tau();
  out.d_s = 2;
  out.provenance = {seed_tag, cfg.hash()};
  out.records.reserve(n);

  const std::array<int, 2> dims{2, 2};
  const std::array<int, 1> keep_s{0};
  CMatrix rho = cfg.rho_ss1_0;
  for (std::size_t i = 1; i <= n; ++i) {
    rho = model.period(rho);
    const CMatrix rho_s = qla::ptrace(rho, dims, keep_s);
    SampledMeasurement m = sample_measurement(rho_s, rng);
    m.record.step = static_cast<long>(i);

    // collapse: |phi><phi| (x) rho_S1 / tr, rho_S1 = (<phi| (x) I) rho (|phi> (x) I)
    const CVector phi = m.record.basis.col(m.record.outcome);
    CMatrix bra = CMatrix::Zero(2, 4);
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) bra(a, 2 * s + a) = std::conj(phi[s]);
    CMatrix rho_s1 = bra * rho * bra.adjoint();
    const double p = rho_s1.trace().real();
    if (!(p > 0.0)) throw NumericalError("generate_trajectory: sampled a zero-probability outcome");
    rho = qla::hermitian_part(qla::kron(m.projector, rho_s1 / p));
    out.records.push_back(std::move(m.record));
  }
  return out;
}

ExactReference exact_reference_dynamics(const CollisionModelConfig& cfg, const std::vector<int>& times) {
  const CollisionModel model(cfg);
  const std::array<int, 2> dims{2, 2};
  const std::array<int, 1> keep_s{0};
  const std::array<int, 1> keep_s1{1};
  const CMatrix rho_s1 = qla::ptrace(cfg.rho_ss1_0, dims, keep_s1);

  ExactReference out;
  int max_t = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < 0 || (k > 0 && times[k] < times[k - 1]))
      throw DataError("exact_reference_dynamics: times must be ascending and non-negative");
    max_t = std::max(max_t, times[k]);
  }

  // Columns: propagated |i><j| (x) rho_S1 for the channel, plus the state itself.
  std::array<CMatrix, 4> basis_in;
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i) {
      CMatrix e = CMatrix::Zero(2, 2);
      e(i, j) = 1.0;
      basis_in[j * 2 + i] = qla::kron(e, rho_s1);
    }
  CMatrix state = cfg.rho_ss1_0;
  std::size_t next = 0;
  for (int t = 0; t <= max_t && next < times.size(); ++t) {
    while (next < times.size() && times[next] == t) {
      out.times.push_back(t);
      out.states.push_back(qla::hermitian_part(qla::ptrace(state, dims, keep_s)));
      CMatrix chan(4, 4);
      for (int c = 0; c < 4; ++c) chan.col(c) = qla::vec(qla::ptrace(basis_in[c], dims, keep_s));
      out.channels.push_back(chan);
      ++next;
    }
    state = model.period(state);
    for (auto& b : basis_in) b = qla::unvec(model.period_superop() * qla::vec(b), 4);
  }
  return out;
}

CMatrix collision_equilibrium_s1(const CollisionModelConfig& cfg) {
  const CollisionModel model(cfg);
  const CMatrix shifted = model.period_superop() - CMatrix::Identity(16, 16);
  Eigen::JacobiSVD<CMatrix> svd(shifted, Eigen::ComputeFullV);
  CMatrix rho = qla::unvec(svd.matrixV().col(15), 4);
  rho = qla::hermitian_part(rho / rho.trace());
  const std::array<int, 2> dims{2, 2};
  const std::array<int, 1> keep_s1{1};
  return qla::hermitian_part(qla::ptrace(rho, dims, keep_s1));
}

CollisionModelConfig equilibrium_start(const CollisionModelConfig& cfg, const CMatrix& rho_s0) {
  if (rho_s0.rows() != 2 || rho_s0.cols() != 2) throw DimensionError("equilibrium_start: rho_s0 must be 2x2");
  CollisionModelConfig out = cfg;
  out.rho_ss1_0 = qla::kron(rho_s0, collision_equilibrium_s1(cfg));
  out.validate();
  return out;
}

OverfitResult overfit_oracle(const Dataset& records, const CMatrix& rho_s0) {
  const std::size_t total = records.size();
  if (total < 2 || total % 2 != 0) throw DataError("overfit_oracle: records must split into two equal halves");
  const std::size_t n = total / 2;
  const int d = records.d_s;
  if (rho_s0.rows() != d || rho_s0.cols() != d) throw DimensionError("overfit_oracle: rho_s0 has wrong size");

  std::deque<CMatrix> env;
  for (std::size_t i = 0; i < n; ++i) env.push_back(records.records[i].projector());

  OverfitResult out;
  CMatrix sys = rho_s0;
  double val_ll = 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    // W = SHIFT . SWAP: S takes E1, E1..En rotate, old S becomes En.
    CMatrix incoming = std::move(env.front());
    env.pop_front();
    env.push_back(std::move(sys));
    sys = std::move(incoming);

    const CVector phi = records.records[i].basis.col(records.records[i].outcome);
    const double p = (phi.adjoint() * sys * phi)(0, 0).real();
    const double lp = p > 0.0 ? std::log(p) : -INFINITY;
    if (i < n)
      out.train_log_likelihood += lp;
    else
      val_ll += lp;
    sys = qla::projector(phi);
  }
  out.validation_ll_per_step = val_ll / static_cast<double>(n);
  return out;
}

}  // namespace membed
