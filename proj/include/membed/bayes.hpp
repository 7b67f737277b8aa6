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

// Variational Bayesian error bars for the learned Hamiltonian: a factorized
// Gaussian posterior over the real parameters of H fitted with the
// reparameterization trick, and posterior sampling of predicted dynamics.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "membed/assess.hpp"
#include "membed/likelihood.hpp"

namespace membed {

// Means and standard deviations in the parameter layout of module train:
// kappa/sigma cover the diagonal and Re H(i,j), i < j; varkappa/varsigma cover
// Im H(i,j), i < j (diagonal entries are real).
struct VariationalPosterior {
  RVector kappa;
  RVector sigma;
  RVector varkappa;
  RVector varsigma;
  DimSpec dims;
  double tau = 1.0;
  CMatrix rho0_ser;
  CMatrix rho_a;

  void validate() const;
  RVector mean_params() const;
  RVector std_params() const;
  MarkovianEmbedding mean_model() const;
  MarkovianEmbedding sample_model(Rng& rng) const;

  // Means at the model's H, every std-dev equal to sigma0.
  static VariationalPosterior around(const MarkovianEmbedding& model, double sigma0);
  static VariationalPosterior from_params(const RVector& mean, const RVector& std, const MarkovianEmbedding& like);
};

struct BayesConfig {
  int steps = 1500;
  int mc_samples = 8;
  double init_sigma = 1e-3;
  double learning_rate = 1e-3;        // means
  double sigma_learning_rate = 1e-2;  // log std-devs
  double beta1 = 0.9;
  double beta2 = 0.95;
  double epsilon = 1e-4;
  double floor = -1e6;  // log-likelihood assigned to zero-probability draws
  int divergence_window = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

// log density and (optionally) its gradient.
using LogDensity = std::function<double(const RVector& theta, RVector* grad)>;

struct FactorizedGaussian {
  RVector mean;
  RVector std;
};

struct ObjectiveEstimate {
  double value = 0.0;
  RVector grad_mean;     // dF / d mean
  RVector grad_log_std;  // dF / d log std
  long floor_hits = 0;
};

// F = -sum log std - (1/M) sum_j log p(mean + xi_j * std), xi_j standard normal.
ObjectiveEstimate gaussian_objective(const FactorizedGaussian& q, const LogDensity& log_p, int mc_samples, Rng& rng,
                                     double floor, bool with_gradient);

struct VariationalTrace {
  std::vector<double> objective;
  long floor_hits = 0;
};

// Adam descent on (mean, log std).
FactorizedGaussian fit_factorized_gaussian(FactorizedGaussian init, const LogDensity& log_p, const BayesConfig& cfg,
                                           Rng& rng, VariationalTrace* trace = nullptr);

// Log-likelihood of the data as a function of the real parameters of H.
LogDensity hamiltonian_log_likelihood(const Dataset& data, const MarkovianEmbedding& like);

double variational_objective(const VariationalPosterior& post, const Dataset& data, int mc_samples, Rng& rng,
                             double floor = -1e6);

struct PosteriorFit {
  VariationalPosterior posterior;
  VariationalTrace trace;
};

// Means start at the ML Hamiltonian of `init`.
PosteriorFit fit_posterior(const Dataset& data, const MarkovianEmbedding& init, const BayesConfig& cfg);

struct PosteriorDynamics {
  std::vector<double> times;
  std::vector<CMatrix> mean_states;
  std::vector<Eigen::MatrixXd> entry_std;  // sqrt(E|rho_ij - E rho_ij|^2)
  std::vector<Eigen::Vector3d> mean_bloch;
  std::vector<Eigen::Vector3d> std_bloch;
  int draws = 0;
  int rejected = 0;

  double max_entry_std() const;
  // t,mean_x,std_x,mean_y,std_y,mean_z,std_z
  void write_csv(const std::string& path) const;
};

// Each draw uses its own equilibrium ER state; draws whose generator cannot be
// extracted are redrawn (at most 10 n_samples attempts in total).
PosteriorDynamics sample_dynamics(const VariationalPosterior& post, const CMatrix& rho_s0,
                                  const std::vector<double>& times, int n_samples, Rng& rng);

// (1/2K) sum_i E ||Omega_{Phi(t_i)} - Omega_{E Phi(t_i)}||_1 over posterior draws.
double bayes_channel_error(const VariationalPosterior& post, const std::vector<double>& times, int n_samples, Rng& rng);

}  // namespace membed
