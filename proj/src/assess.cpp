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

#include "membed/assess.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "membed/errors.hpp"

namespace membed {

const char* to_string(ChoiSource source) {
  switch (source) {
    case ChoiSource::learned:
      return "learned";
    case ChoiSource::exact:
      return "exact";
    case ChoiSource::tomographic:
      return "tomographic";
    case ChoiSource::other:
      break;
  }
  return "other";
}

namespace {

int side_root(Eigen::Index side) {
  const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(side))));
  if (static_cast<Eigen::Index>(d) * d != side) throw DimensionError("matrix side is not a perfect square");
  return d;
}

CMatrix partial_trace_output(const CMatrix& omega, int d) {
  const std::array<int, 2> dims{d, d};
  const std::array<int, 1> keep{1};
  return qla::ptrace(omega, dims, keep);
}

}  // namespace

int ChoiMatrix::d_s() const { return side_root(omega.rows()); }

void ChoiMatrix::check_cptp(double psd_tol, double tp_tol) const {
  const int d = d_s();
  std::ostringstream os;
  if (!qla::is_hermitian(omega, 1e-10)) os << "not Hermitian; ";
  if (std::abs(omega.trace() - cplx(1.0)) > tp_tol) os << "trace " << omega.trace().real() << " != 1; ";
  const double lmin = qla::min_eigenvalue(qla::hermitian_part(omega));
  if (lmin < -psd_tol) os << "min eigenvalue " << lmin << "; ";
  const double tp = (partial_trace_output(omega, d) - qla::identity(d) / d).cwiseAbs().maxCoeff();
  if (tp > tp_tol) os << "partial trace deviates from I/d by " << tp << "; ";
  if (!os.str().empty()) throw NumericalError("Choi matrix (t = " + std::to_string(time) + ") is not CPTP: " + os.str());
}

CMatrix ChoiMatrix::superoperator() const {
  const int d = d_s();
  CMatrix s(d * d, d * d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i)
      for (int op = 0; op < d; ++op)
        for (int o = 0; o < d; ++o) s(op * d + o, j * d + i) = static_cast<double>(d) * omega(o * d + i, op * d + j);
  return s;
}

CMatrix ChoiMatrix::apply(const CMatrix& rho) const {
  const int d = d_s();
  if (rho.rows() != d || rho.cols() != d) throw DimensionError("ChoiMatrix::apply: state has wrong size");
  return qla::unvec(superoperator() * qla::vec(rho), d);
}

ChoiMatrix choi_of_superoperator(const CMatrix& superop, ChoiSource source, double time) {
  const int d = side_root(superop.rows());
  if (superop.cols() != superop.rows()) throw DimensionError("choi_of_superoperator: superoperator must be square");
  ChoiMatrix c;
  c.omega.resize(d * d, d * d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i)
      for (int op = 0; op < d; ++op)
        for (int o = 0; o < d; ++o) c.omega(o * d + i, op * d + j) = superop(op * d + o, j * d + i) / static_cast<double>(d);
  c.source = source;
  c.time = time;
  return c;
}

ChoiMatrix choi_of_map(const ChannelEvaluator& channel, int d_s, ChoiSource source, double time) {
  if (d_s < 1) throw DimensionError("choi_of_map: d_s must be >= 1");
  CMatrix s(d_s * d_s, d_s * d_s);
  for (int j = 0; j < d_s; ++j)
    for (int i = 0; i < d_s; ++i) {
      CMatrix e = CMatrix::Zero(d_s, d_s);
      e(i, j) = 1.0;
      const CMatrix out = channel(e);
      if (out.rows() != d_s || out.cols() != d_s) throw DimensionError("choi_of_map: channel output has wrong size");
      s.col(j * d_s + i) = qla::vec(out);
    }
  return choi_of_superoperator(s, source, time);
}

std::vector<CMatrix> system_channels(const GeneratorSuperoperator& gen, const DimSpec& dims, const CMatrix& rho_er0,
                                     const std::vector<double>& times) {
  const int d = dims.d_s;
  const int dd = dims.d_ser() * dims.d_ser();
  if (rho_er0.rows() != dims.d_er || rho_er0.cols() != dims.d_er)
    throw DimensionError("system_channels: rho_er0 has wrong size");
  if (gen.matrix().rows() != dd) throw DimensionError("system_channels: generator size mismatch");
  CMatrix embed(dd, d * d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) {
      CMatrix e = CMatrix::Zero(d, d);
      e(i, j) = 1.0;
      embed.col(j * d + i) = qla::vec(qla::kron(e, rho_er0));
    }
  std::vector<CMatrix> out;
  out.reserve(times.size());
  double prev = 0.0;
  for (double t : times) {
    if (!(t >= prev)) throw DataError("system_channels: times must be ascending and non-negative");
    prev = t;
    if (t == 0.0) {
      out.push_back(CMatrix::Identity(d * d, d * d));
      continue;
    }
    const CMatrix y = gen.propagator(t) * embed;
    CMatrix s(d * d, d * d);
    for (int c = 0; c < d * d; ++c)
      s.col(c) = qla::vec(trace_out_er(qla::unvec(y.col(c), dims.d_ser()), dims));
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ChoiMatrix> dynamics_maps(const GeneratorSuperoperator& gen, const DimSpec& dims, const CMatrix& rho_er0,
                                      const std::vector<double>& times) {
  const std::vector<CMatrix> supers = system_channels(gen, dims, rho_er0, times);
  std::vector<ChoiMatrix> out;
  out.reserve(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    ChoiMatrix c = choi_of_superoperator(supers[k], ChoiSource::learned, times[k]);
    c.omega = qla::hermitian_part(c.omega);
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<ChoiMatrix> dynamics_maps(const MarkovianEmbedding& model, const CMatrix& rho_er0,
                                      const std::vector<double>& times) {
  return dynamics_maps(extract_generator(model), model.dims(), rho_er0, times);
}

std::vector<ChoiMatrix> equilibrium_dynamics_maps(const MarkovianEmbedding& model, const std::vector<double>& times) {
  const GeneratorSuperoperator gen = extract_generator(model);
  return dynamics_maps(gen, model.dims(), equilibrium_er_state(gen, model.dims()), times);
}

std::vector<ChoiMatrix> exact_equilibrium_maps(const CollisionModelConfig& cfg, const std::vector<int>& times) {
  return exact_maps(exact_reference_dynamics(equilibrium_start(cfg, qla::projector(CVector::Unit(2, 0))), times));
}

std::vector<ChoiMatrix> exact_maps(const ExactReference& reference) {
  std::vector<ChoiMatrix> out;
  out.reserve(reference.times.size());
  for (std::size_t k = 0; k < reference.times.size(); ++k) {
    ChoiMatrix c = choi_of_superoperator(reference.channels[k], ChoiSource::exact, reference.times[k]);
    c.omega = qla::hermitian_part(c.omega);
    out.push_back(std::move(c));
  }
  return out;
}

double choi_error(const ChoiMatrix& a, const ChoiMatrix& b) {
  if (a.omega.rows() != b.omega.rows()) throw DimensionError("choi_error: Choi matrices of different size");
  return 0.5 * qla::trace_norm(a.omega - b.omega);
}

double average_choi_error(const std::vector<ChoiMatrix>& a, const std::vector<ChoiMatrix>& b) {
  if (a.size() != b.size() || a.empty()) throw DataError("average_choi_error: lists must be non-empty and equally long");
  double total = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::abs(a[k].time - b[k].time) > 1e-9 * std::max(1.0, std::abs(a[k].time))) {
      std::ostringstream os;
      os << "average_choi_error: time mismatch at index " << k << " (" << a[k].time << " vs " << b[k].time << ")";
      throw DataError(os.str());
    }
    total += choi_error(a[k], b[k]);
  }
  return total / static_cast<double>(a.size());
}

TomographyDesign TomographyDesign::qubit(long shots) {
  TomographyDesign d;
  CVector v(2);
  const double r = 1.0 / std::sqrt(2.0);
  std::array<CVector, 4> states;
  states[0] = CVector::Unit(2, 0);
  states[1] = CVector::Unit(2, 1);
  v << r, r;
  states[2] = v;
  v << r, cplx(0.0, r);
  states[3] = v;
  for (const auto& s : states) {
    const CMatrix p = qla::projector(s);
    d.inputs.push_back(p);
    d.effects.push_back(0.25 * p);
    d.effects.push_back(0.25 * (qla::identity(2) - p));
  }
  d.shots = shots;
  return d;
}

void TomographyDesign::validate() const {
  if (inputs.empty() || effects.empty()) throw ConfigError("tomography design needs inputs and effects");
  const int d = static_cast<int>(effects.front().rows());
  CMatrix sum = CMatrix::Zero(d, d);
  for (const auto& f : effects) {
    if (f.rows() != d || f.cols() != d) throw DimensionError("tomography design: effects of different size");
    if (qla::min_eigenvalue(qla::hermitian_part(f)) < -1e-12) throw ConfigError("tomography design: effect is not PSD");
    sum += f;
  }
  if ((sum - qla::identity(d)).cwiseAbs().maxCoeff() > 1e-12) throw ConfigError("tomography design: effects do not sum to I");
  for (const auto& rho : inputs)
    if (rho.rows() != d || std::abs(rho.trace() - cplx(1.0)) > 1e-12)
      throw ConfigError("tomography design: input is not a density matrix");
  if (shots < 1) throw ConfigError("tomography design: shots must be >= 1");
}

TomographyCounts simulate_tomography_counts(const ChannelEvaluator& channel, const TomographyDesign& design, Rng& rng) {
  design.validate();
  const std::size_t nj = design.inputs.size();
  const std::size_t nk = design.effects.size();
  std::vector<std::discrete_distribution<int>> outcome;
  for (const auto& rho : design.inputs) {
    const CMatrix out = channel(rho);
    std::vector<double> p(nk);
    for (std::size_t k = 0; k < nk; ++k) p[k] = std::max(0.0, (out * design.effects[k]).trace().real());
    outcome.emplace_back(p.begin(), p.end());
  }
  std::uniform_int_distribution<std::size_t> pick(0, nj - 1);
  TomographyCounts counts = TomographyCounts::Zero(static_cast<Eigen::Index>(nj), static_cast<Eigen::Index>(nk));
  for (long s = 0; s < design.shots; ++s) {
    const std::size_t j = pick(rng);
    counts(static_cast<Eigen::Index>(j), outcome[j](rng)) += 1.0;
  }
  return counts;
}

namespace {

// F_k (x) rho_j^T, so that tr[C A_jk] = tr[Phi(rho_j) F_k] for C = d omega.
std::vector<CMatrix> design_operators(const TomographyDesign& design) {
  std::vector<CMatrix> ops;
  for (const auto& rho : design.inputs)
    for (const auto& f : design.effects) ops.push_back(qla::kron(f, rho.transpose()));
  return ops;
}

double per_shot_log_likelihood(const CMatrix& c, const std::vector<CMatrix>& ops, const TomographyCounts& counts,
                               double total) {
  const Eigen::Index nk = counts.cols();
  double ll = 0.0;
  for (Eigen::Index j = 0; j < counts.rows(); ++j)
    for (Eigen::Index k = 0; k < nk; ++k) {
      const double n = counts(j, k);
      if (n == 0.0) continue;
      const double p = (c.cwiseProduct(ops[j * nk + k].transpose())).sum().real();
      if (!(p > 0.0)) return -INFINITY;
      ll += n * std::log(p);
    }
  return ll / total;
}

}  // namespace

Eigen::MatrixXd tomography_probabilities(const ChoiMatrix& choi, const TomographyDesign& design) {
  Eigen::MatrixXd p(design.inputs.size(), design.effects.size());
  for (std::size_t j = 0; j < design.inputs.size(); ++j) {
    const CMatrix out = choi.apply(design.inputs[j]);
    for (std::size_t k = 0; k < design.effects.size(); ++k) p(j, k) = (out * design.effects[k]).trace().real();
  }
  return p;
}

double tomography_log_likelihood(const ChoiMatrix& choi, const TomographyCounts& counts,
                                 const TomographyDesign& design) {
  const Eigen::MatrixXd p = tomography_probabilities(choi, design);
  if (p.rows() != counts.rows() || p.cols() != counts.cols()) throw DimensionError("tomography: counts shape mismatch");
  double ll = 0.0;
  for (Eigen::Index j = 0; j < p.rows(); ++j)
    for (Eigen::Index k = 0; k < p.cols(); ++k) {
      if (counts(j, k) == 0.0) continue;
      if (!(p(j, k) > 0.0)) return -INFINITY;
      ll += counts(j, k) * std::log(p(j, k));
    }
  return ll;
}

TomographyFit tomography_mle(const TomographyCounts& counts, const TomographyDesign& design, int max_iterations,
                             double tol) {
  if (design.inputs.empty() || design.effects.empty()) throw ConfigError("tomography_mle: empty design");
  if (counts.rows() != static_cast<Eigen::Index>(design.inputs.size()) ||
      counts.cols() != static_cast<Eigen::Index>(design.effects.size()))
    throw DimensionError("tomography_mle: counts shape does not match the design");
  if ((counts.array() < 0.0).any()) throw DataError("tomography_mle: negative counts");
  const double total = counts.sum();
  if (!(total > 0.0)) throw DataError("tomography_mle: all counts are zero");

  const int d = static_cast<int>(design.effects.front().rows());
  const int dd = d * d;
  const std::vector<CMatrix> ops = design_operators(design);
  const Eigen::Index nk = counts.cols();

  CMatrix c = CMatrix::Identity(dd, dd) / static_cast<double>(d);  // completely depolarizing, tr_out = I
  double ll = per_shot_log_likelihood(c, ops, counts, total);
  const double start_ll = ll;
  double mu = 1.0;
  int iter = 0;
  for (; iter < max_iterations; ++iter) {
    CMatrix r = CMatrix::Zero(dd, dd);
    for (Eigen::Index j = 0; j < counts.rows(); ++j)
      for (Eigen::Index k = 0; k < nk; ++k) {
        const double n = counts(j, k);
        if (n == 0.0) continue;
        const CMatrix& a = ops[j * nk + k];
        const double p = (c.cwiseProduct(a.transpose())).sum().real();
        r += (n / total / p) * a;
      }
    bool accepted = false;
    double gain = 0.0;
    while (mu > 1e-14) {
      const CMatrix rm = CMatrix::Identity(dd, dd) + mu * r;
      const CMatrix x = qla::hermitian_part(rm * c * rm);
      const SpectralDecomposition lam = qla::herm_eig(partial_trace_output(x, d));
      if (lam.values.minCoeff() <= 0.0) {
        mu *= 0.25;
        continue;
      }
      const CMatrix inv_sqrt =
          lam.vectors * lam.values.cwiseInverse().cwiseSqrt().cast<cplx>().asDiagonal() * lam.vectors.adjoint();
      const CMatrix norm = qla::kron(qla::identity(d), inv_sqrt);
      const CMatrix next = qla::hermitian_part(norm * x * norm);
      const double next_ll = per_shot_log_likelihood(next, ops, counts, total);
      if (next_ll >= ll) {
        gain = next_ll - ll;
        c = next;
        ll = next_ll;
        accepted = true;
        mu = std::min(mu * 2.0, 1e6);
        break;
      }
      mu *= 0.25;
    }
    if (!accepted || gain < tol) break;
  }
  if (iter >= max_iterations)
    throw NumericalError("tomography_mle: no convergence within " + std::to_string(max_iterations) + " iterations");

  TomographyFit fit;
  fit.choi.omega = c / static_cast<double>(d);
  fit.choi.source = ChoiSource::tomographic;
  fit.log_likelihood = ll * total;
  fit.start_log_likelihood = start_ll * total;
  fit.iterations = iter + 1;
  return fit;
}

void ControlEvent::validate() const {
  if (!(time >= 0.0) || !std::isfinite(time)) throw ConfigError("control event time must be finite and >= 0");
  if (gate.rows() != gate.cols() || !qla::is_unitary(gate, 1e-10)) throw ConfigError("control gate must be unitary");
}

std::vector<CMatrix> predict_with_control(const GeneratorSuperoperator& gen, const DimSpec& dims,
                                          const CMatrix& rho_s0, const CMatrix& rho_er0,
                                          const std::vector<ControlEvent>& events, const std::vector<double>& times) {
  for (std::size_t e = 0; e < events.size(); ++e) {
    events[e].validate();
    if (events[e].gate.rows() != dims.d_s) throw DimensionError("predict_with_control: gate has wrong size");
    if (e > 0 && !(events[e].time > events[e - 1].time))
      throw ConfigError("predict_with_control: event times must be strictly increasing");
  }
  if (rho_s0.rows() != dims.d_s || rho_er0.rows() != dims.d_er)
    throw DimensionError("predict_with_control: initial states have wrong size");
  const int d = dims.d_ser();
  CMatrix state = qla::kron(rho_s0, rho_er0);
  double now = 0.0;
  std::size_t next = 0;
  auto advance = [&](double t) {
    if (t > now) {
      state = qla::hermitian_part(qla::unvec(gen.propagator(t - now) * qla::vec(state), d));
      now = t;
    }
  };
  std::vector<CMatrix> out;
  out.reserve(times.size());
  double prev = 0.0;
  for (double t : times) {
    if (!(t >= prev)) throw DataError("predict_with_control: times must be ascending and non-negative");
    prev = t;
    while (next < events.size() && events[next].time <= t) {
      advance(events[next].time);
      const CMatrix v = qla::kron(events[next].gate, qla::identity(dims.d_er));
      state = qla::hermitian_part(v * state * v.adjoint());
      ++next;
    }
    advance(t);
    out.push_back(qla::hermitian_part(trace_out_er(state, dims)));
  }
  return out;
}

std::vector<CMatrix> predict_with_control(const MarkovianEmbedding& model, const CMatrix& rho_s0,
                                          const CMatrix& rho_er0, const std::vector<ControlEvent>& events,
                                          const std::vector<double>& times) {
  return predict_with_control(extract_generator(model), model.dims(), rho_s0, rho_er0, events, times);
}

namespace {

const ChoiMatrix* find_map(const std::vector<ChoiMatrix>& maps, double t) {
  for (const auto& m : maps)
    if (std::abs(m.time - t) <= 1e-9 * std::max(1.0, std::abs(t))) return &m;
  return nullptr;
}

CMatrix superop_at(const std::vector<ChoiMatrix>& maps, double t, int d) {
  if (const ChoiMatrix* m = find_map(maps, t)) return m->superoperator();
  if (t == 0.0) return CMatrix::Identity(d * d, d * d);
  std::ostringstream os;
  os << "concatenation_prediction: no map supplied for t = " << t;
  throw DataError(os.str());
}

}  // namespace

ConcatenationTrajectory concatenation_prediction(const std::vector<ChoiMatrix>& maps, const ControlEvent& event,
                                                 const CMatrix& rho_s0, const std::vector<double>& times,
                                                 double condition_cap) {
  event.validate();
  const int d = static_cast<int>(rho_s0.rows());
  if (event.gate.rows() != d) throw DimensionError("concatenation_prediction: gate has wrong size");
  const CMatrix phi_m = superop_at(maps, event.time, d);
  Eigen::JacobiSVD<CMatrix> svd(phi_m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cond = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : INFINITY;
  if (!(cond <= condition_cap)) {
    std::ostringstream os;
    os << "concatenation_prediction: intermediate map at t = " << event.time << " is singular (condition number "
       << cond << ")";
    throw NumericalError(os.str());
  }
  const CVector rho0 = qla::vec(rho_s0);
  const CMatrix at_gate = qla::unvec(phi_m * rho0, d);
  const CVector kicked = qla::vec(event.gate * at_gate * event.gate.adjoint());
  const CVector pulled_back = svd.solve(kicked);

  ConcatenationTrajectory out;
  for (double t : times) {
    const CMatrix phi_l = superop_at(maps, t, d);
    const CMatrix rho = t < event.time ? qla::unvec(phi_l * rho0, d) : qla::unvec(phi_l * pulled_back, d);
    const CMatrix h = qla::hermitian_part(rho);
    const double lmin = qla::min_eigenvalue(h);
    out.times.push_back(t);
    out.states.push_back(h);
    out.min_eigenvalues.push_back(lmin);
    out.positive.push_back(lmin >= -1e-10);
  }
  return out;
}

std::vector<CMatrix> exact_controlled_dynamics(const CollisionModelConfig& cfg, int event_period, const CMatrix& gate,
                                               const std::vector<int>& times) {
  if (gate.rows() != 2 || !qla::is_unitary(gate, 1e-10)) throw ConfigError("exact_controlled_dynamics: gate must be a qubit unitary");
  if (event_period < 0) throw ConfigError("exact_controlled_dynamics: event period must be >= 0");
  const CollisionModel model(cfg);
  const std::array<int, 2> dims{2, 2};
  const std::array<int, 1> keep_s{0};
  const CMatrix v = qla::kron(gate, qla::identity(2));
  CMatrix state = cfg.rho_ss1_0;
  std::vector<CMatrix> out;
  int now = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < now || times[k] < 0) throw DataError("exact_controlled_dynamics: times must be ascending and >= 0");
    while (now < times[k]) {
      if (now == event_period) state = v * state * v.adjoint();
      state = model.period(state);
      ++now;
    }
    CMatrix s = state;
    if (now == event_period) s = v * state * v.adjoint();
    out.push_back(qla::hermitian_part(qla::ptrace(s, dims, keep_s)));
  }
  return out;
}

std::vector<double> trace_distance_trajectory(const std::vector<CMatrix>& a, const std::vector<CMatrix>& b) {
  if (a.size() != b.size()) throw DataError("trace_distance_trajectory: trajectories of different length");
  std::vector<double> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = 0.5 * qla::trace_norm(a[k] - b[k]);
  return out;
}

bool is_non_monotonic(const std::vector<double>& values, double tol) {
  for (std::size_t k = 1; k < values.size(); ++k)
    if (values[k] - values[k - 1] > tol) return true;
  return false;
}

}  // namespace membed
