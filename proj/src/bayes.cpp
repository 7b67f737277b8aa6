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

#include "membed/bayes.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "membed/errors.hpp"
#include "membed/rng.hpp"
#include "membed/train.hpp"

namespace membed {

namespace {

Eigen::Index real_count(int n) { return n + static_cast<Eigen::Index>(n) * (n - 1) / 2; }
Eigen::Index imag_count(int n) { return static_cast<Eigen::Index>(n) * (n - 1) / 2; }

}  // namespace

void VariationalPosterior::validate() const {
  dims.validate();
  const int n = dims.d_total();
  if (kappa.size() != real_count(n) || sigma.size() != real_count(n) || varkappa.size() != imag_count(n) ||
      varsigma.size() != imag_count(n))
    throw DimensionError("variational posterior: parameter arrays do not match the dimensions");
  if (!(sigma.array() > 0.0).all() || !(varsigma.array() > 0.0).all())
    throw NumericalError("variational posterior: standard deviations must be positive");
  if (!kappa.allFinite() || !varkappa.allFinite() || !sigma.allFinite() || !varsigma.allFinite())
    throw NumericalError("variational posterior: non-finite parameters");
}

RVector VariationalPosterior::mean_params() const {
  RVector p(kappa.size() + varkappa.size());
  p << kappa, varkappa;
  return p;
}

RVector VariationalPosterior::std_params() const {
  RVector p(sigma.size() + varsigma.size());
  p << sigma, varsigma;
  return p;
}

MarkovianEmbedding VariationalPosterior::mean_model() const {
  return MarkovianEmbedding(dims, tau, params_to_hamiltonian(mean_params(), dims.d_total()), rho0_ser, rho_a);
}

MarkovianEmbedding VariationalPosterior::sample_model(Rng& rng) const {
  std::normal_distribution<double> normal;
  const RVector mean = mean_params();
  const RVector sd = std_params();
  RVector theta(mean.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = mean[i] + normal(rng) * sd[i];
  return MarkovianEmbedding(dims, tau, params_to_hamiltonian(theta, dims.d_total()), rho0_ser, rho_a);
}

VariationalPosterior VariationalPosterior::from_params(const RVector& mean, const RVector& std,
                                                       const MarkovianEmbedding& like) {
  const int n = like.dims().d_total();
  const Eigen::Index nr = real_count(n);
  const Eigen::Index ni = imag_count(n);
  if (mean.size() != nr + ni || std.size() != nr + ni)
    throw DimensionError("variational posterior: parameter vector has wrong length");
  VariationalPosterior p;
  p.kappa = mean.head(nr);
  p.varkappa = mean.tail(ni);
  p.sigma = std.head(nr);
  p.varsigma = std.tail(ni);
  p.dims = like.dims();
  p.tau = like.tau();
  p.rho0_ser = like.rho0_ser();
  p.rho_a = like.rho_a();
  p.validate();
  return p;
}

VariationalPosterior VariationalPosterior::around(const MarkovianEmbedding& model, double sigma0) {
  if (!(sigma0 > 0.0)) throw ConfigError("variational posterior: initial std-dev must be > 0");
  const RVector mean = hamiltonian_to_params(model.hamiltonian());
  return from_params(mean, RVector::Constant(mean.size(), sigma0), model);
}

void BayesConfig::validate() const {
  std::ostringstream os;
  if (steps < 1) os << "steps must be >= 1; ";
  if (mc_samples < 1) os << "mc_samples must be >= 1; ";
  if (!(init_sigma > 0.0)) os << "init_sigma must be > 0; ";
  if (!(learning_rate > 0.0) || !(sigma_learning_rate > 0.0)) os << "learning rates must be > 0; ";
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) os << "betas must be in [0, 1); ";
  if (!(epsilon > 0.0)) os << "epsilon must be > 0; ";
  if (!std::isfinite(floor)) os << "floor must be finite; ";
  if (divergence_window < 2) os << "divergence_window must be >= 2; ";
  if (!os.str().empty()) throw ConfigError("invalid bayes config: " + os.str());
}

ObjectiveEstimate gaussian_objective(const FactorizedGaussian& q, const LogDensity& log_p, int mc_samples, Rng& rng,
                                     double floor, bool with_gradient) {
  if (mc_samples < 1) throw ConfigError("gaussian_objective: mc_samples must be >= 1");
  if (q.mean.size() != q.std.size()) throw DimensionError("gaussian_objective: mean/std size mismatch");
  if (!(q.std.array() > 0.0).all()) throw NumericalError("gaussian_objective: std-devs must be positive");
  const Eigen::Index p = q.mean.size();
  std::normal_distribution<double> normal;
  ObjectiveEstimate out;
  if (with_gradient) {
    out.grad_mean = RVector::Zero(p);
    out.grad_log_std = RVector::Constant(p, -1.0);
  }
  double expected = 0.0;
  RVector xi(p);
  RVector theta(p);
  RVector grad(p);
  for (int s = 0; s < mc_samples; ++s) {
    for (Eigen::Index i = 0; i < p; ++i) xi[i] = normal(rng);
    theta = q.mean + xi.cwiseProduct(q.std);
    double lp;
    try {
      lp = log_p(theta, with_gradient ? &grad : nullptr);
    } catch (const ZeroProbabilityError&) {
      lp = floor;
      ++out.floor_hits;
      grad.setZero();
    }
    if (!std::isfinite(lp)) {
      lp = floor;
      ++out.floor_hits;
      grad.setZero();
    }
    expected += lp / mc_samples;
    if (with_gradient) {
      out.grad_mean -= grad / mc_samples;
      out.grad_log_std -= grad.cwiseProduct(xi).cwiseProduct(q.std) / mc_samples;
    }
  }
  out.value = -q.std.array().log().sum() - expected;
  return out;
}

FactorizedGaussian fit_factorized_gaussian(FactorizedGaussian init, const LogDensity& log_p, const BayesConfig& cfg,
                                           Rng& rng, VariationalTrace* trace) {
  cfg.validate();
  const Eigen::Index p = init.mean.size();
  RVector log_std = init.std.array().log();
  RVector m1 = RVector::Zero(2 * p);
  RVector m2 = RVector::Zero(2 * p);
  VariationalTrace local;
  VariationalTrace& tr = trace ? *trace : local;
  const int w = cfg.divergence_window;
  for (int step = 1; step <= cfg.steps; ++step) {
    FactorizedGaussian q{init.mean, log_std.array().exp()};
    const ObjectiveEstimate est = gaussian_objective(q, log_p, cfg.mc_samples, rng, cfg.floor, true);
    if (!std::isfinite(est.value)) throw NumericalError("variational fit: objective is not finite at step " + std::to_string(step));
    tr.objective.push_back(est.value);
    tr.floor_hits += est.floor_hits;

    const std::size_t len = tr.objective.size();
    if (len >= static_cast<std::size_t>(2 * w)) {
      double prev = 0.0, last = 0.0, var = 0.0;
      for (int k = 0; k < w; ++k) {
        prev += tr.objective[len - 2 * w + k] / w;
        last += tr.objective[len - w + k] / w;
      }
      for (int k = 0; k < w; ++k) var += std::pow(tr.objective[len - w + k] - last, 2) / (w - 1);
      if (last - prev > 3.0 * std::sqrt(2.0 * var / w) + 1e-3 * std::abs(last)) {
        std::ostringstream os;
        os << "variational fit diverged at step " << step << ": windowed objective rose from " << prev << " to "
           << last << "; trace:";
        for (std::size_t k = len - 2 * w; k < len; ++k) os << ' ' << tr.objective[k];
        throw NumericalError(os.str());
      }
    }

    RVector g(2 * p);
    g << est.grad_mean, est.grad_log_std;
    m1 = cfg.beta1 * m1 + (1.0 - cfg.beta1) * g;
    m2 = cfg.beta2 * m2 + (1.0 - cfg.beta2) * g.cwiseAbs2();
    const double c1 = 1.0 - std::pow(cfg.beta1, step);
    const double c2 = 1.0 - std::pow(cfg.beta2, step);
    const RVector dir = (m1 / c1).array() / ((m2 / c2).array().sqrt() + cfg.epsilon);
    init.mean -= cfg.learning_rate * dir.head(p);
    log_std -= cfg.sigma_learning_rate * dir.tail(p);
  }
  init.std = log_std.array().exp();
  return init;
}

LogDensity hamiltonian_log_likelihood(const Dataset& data, const MarkovianEmbedding& like) {
  return [&data, like](const RVector& theta, RVector* grad) {
    const MarkovianEmbedding model = like.with_hamiltonian(params_to_hamiltonian(theta, like.dims().d_total()));
    const Dilation channel = Dilation::build(model);
    if (!grad) return forward_pass(channel, model.rho0_ser(), model.dims(), data).log_likelihood();
    const PropagationCache cache = build_cache(channel, model, data);
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), std::size_t{1});
    *grad = gradient_to_params(log_likelihood_gradient(channel, model, data, cache, all));
    return cache.log_likelihood();
  };
}

double variational_objective(const VariationalPosterior& post, const Dataset& data, int mc_samples, Rng& rng,
                             double floor) {
  post.validate();
  const MarkovianEmbedding like = post.mean_model();
  const FactorizedGaussian q{post.mean_params(), post.std_params()};
  if (data.size() == 0) return -q.std.array().log().sum();
  return gaussian_objective(q, hamiltonian_log_likelihood(data, like), mc_samples, rng, floor, false).value;
}

PosteriorFit fit_posterior(const Dataset& data, const MarkovianEmbedding& init, const BayesConfig& cfg) {
  cfg.validate();
  if (data.size() == 0) throw DataError("fit_posterior: empty dataset");
  Rng rng = SeedSplitter(cfg.seed).stream("bayes");
  const RVector mean = hamiltonian_to_params(init.hamiltonian());
  FactorizedGaussian q{mean, RVector::Constant(mean.size(), cfg.init_sigma)};
  PosteriorFit out;
  q = fit_factorized_gaussian(q, hamiltonian_log_likelihood(data, init), cfg, rng, &out.trace);
  out.posterior = VariationalPosterior::from_params(q.mean, q.std, init);
  return out;
}

namespace {

Eigen::Vector3d bloch(const CMatrix& rho) {
  return {2.0 * rho(0, 1).real(), -2.0 * rho(0, 1).imag(), (rho(0, 0) - rho(1, 1)).real()};
}

}  // namespace

double PosteriorDynamics::max_entry_std() const {
  double m = 0.0;
  for (const auto& s : entry_std) m = std::max(m, s.maxCoeff());
  return m;
}

void PosteriorDynamics::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out.precision(17);
  out << "t,mean_x,std_x,mean_y,std_y,mean_z,std_z\n";
  for (std::size_t k = 0; k < times.size(); ++k) {
    out << times[k];
    for (int c = 0; c < 3; ++c) out << ',' << mean_bloch[k][c] << ',' << std_bloch[k][c];
    out << '\n';
  }
}

PosteriorDynamics sample_dynamics(const VariationalPosterior& post, const CMatrix& rho_s0,
                                  const std::vector<double>& times, int n_samples, Rng& rng) {
  post.validate();
  if (n_samples < 2) throw ConfigError("sample_dynamics: n_samples must be >= 2");
  const std::size_t nt = times.size();
  const int d = post.dims.d_s;
  PosteriorDynamics out;
  out.times = times;
  out.mean_states.assign(nt, CMatrix::Zero(d, d));
  std::vector<Eigen::MatrixXd> m2(nt, Eigen::MatrixXd::Zero(d, d));
  std::vector<Eigen::Vector3d> bmean(nt, Eigen::Vector3d::Zero());
  std::vector<Eigen::Vector3d> bm2(nt, Eigen::Vector3d::Zero());
  const int max_attempts = 10 * n_samples;
  int attempts = 0;
  while (out.draws < n_samples) {
    if (attempts++ >= max_attempts)
      throw NumericalError("sample_dynamics: too many posterior draws without an extractable generator");
    std::vector<CMatrix> states;
    try {
      const MarkovianEmbedding model = post.sample_model(rng);
      const GeneratorSuperoperator gen = extract_generator(model);
      const CMatrix rho_er = equilibrium_er_state(gen, post.dims);
      states = predict_dynamics(gen, post.dims, rho_s0, rho_er, times);
    } catch (const NumericalError&) {
      ++out.rejected;
      continue;
    }
    const double k = ++out.draws;
    for (std::size_t i = 0; i < nt; ++i) {
      // Welford updates: identical draws leave the mean bit-exact and the spread zero.
      const CMatrix delta = states[i] - out.mean_states[i];
      out.mean_states[i] += delta / k;
      m2[i] += delta.cwiseProduct((states[i] - out.mean_states[i]).conjugate()).real();
      const Eigen::Vector3d b = bloch(states[i]);
      const Eigen::Vector3d bd = b - bmean[i];
      bmean[i] += bd / k;
      bm2[i] += bd.cwiseProduct(b - bmean[i]);
    }
  }
  const double denom = out.draws - 1;
  for (std::size_t i = 0; i < nt; ++i) {
    out.entry_std.push_back((m2[i] / denom).cwiseMax(0.0).cwiseSqrt());
    out.mean_bloch.push_back(bmean[i]);
    out.std_bloch.push_back((bm2[i] / denom).cwiseMax(0.0).cwiseSqrt());
  }
  return out;
}

double bayes_channel_error(const VariationalPosterior& post, const std::vector<double>& times, int n_samples, Rng& rng) {
  post.validate();
  if (n_samples < 2) throw ConfigError("bayes_channel_error: n_samples must be >= 2");
  if (times.empty()) throw ConfigError("bayes_channel_error: no times");
  std::vector<std::vector<CMatrix>> draws;
  int attempts = 0;
  while (static_cast<int>(draws.size()) < n_samples) {
    if (attempts++ >= 10 * n_samples)
      throw NumericalError("bayes_channel_error: too many posterior draws without an extractable generator");
    try {
      const MarkovianEmbedding model = post.sample_model(rng);
      const GeneratorSuperoperator gen = extract_generator(model);
      draws.push_back(system_channels(gen, post.dims, equilibrium_er_state(gen, post.dims), times));
    } catch (const NumericalError&) {
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    CMatrix mean = CMatrix::Zero(draws.front()[i].rows(), draws.front()[i].cols());
    for (std::size_t s = 0; s < draws.size(); ++s) mean += (draws[s][i] - mean) / static_cast<double>(s + 1);
    const ChoiMatrix mean_choi = choi_of_superoperator(mean, ChoiSource::learned, times[i]);
    double e = 0.0;
    for (const auto& draw : draws) e += choi_error(choi_of_superoperator(draw[i], ChoiSource::learned, times[i]), mean_choi);
    total += e / static_cast<double>(draws.size());
  }
  return total / static_cast<double>(times.size());
}

}  // namespace membed
