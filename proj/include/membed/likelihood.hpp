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

// Measurement-intervened propagation of the embedding, the sandwich
// likelihood and its analytic gradient with respect to the effective
// Hamiltonian.

#include <span>
#include <string>
#include <vector>

#include "membed/datagen.hpp"
#include "membed/embedding.hpp"

namespace membed {

// Forward states are trace-normalized and backward effects operator-norm
// normalized; the removed factors are kept as cumulative logs so that for every m
//   log p = log tr[forward[m] backward[m]] + forward_log_scale[m] + backward_log_scale[m].
struct PropagationCache {
  std::vector<CMatrix> forward;
  std::vector<double> forward_log_scale;
  std::vector<CMatrix> backward;
  std::vector<double> backward_log_scale;

  std::size_t steps() const { return forward.empty() ? 0 : forward.size() - 1; }
  double log_likelihood() const { return forward_log_scale.back(); }
  // Merge point m in 0..n.
  double merged_log_likelihood(std::size_t m) const;
};

// Hermitian g with d log p = sum_{mu,nu} g(mu,nu) dH(mu,nu) for Hermitian dH.
struct GradientMatrix {
  CMatrix g;
};

PropagationCache forward_pass(const MarkovianEmbedding& model, const Dataset& data);
PropagationCache forward_pass(const Dilation& channel, const CMatrix& rho0, const DimSpec& dims,
                              const Dataset& data);
// Fills the backward half of `cache` (whose forward half may be empty).
void backward_pass(const Dilation& channel, const DimSpec& dims, const Dataset& data, PropagationCache& cache);
PropagationCache backward_pass(const MarkovianEmbedding& model, const Dataset& data);
// Both halves.
PropagationCache build_cache(const Dilation& channel, const MarkovianEmbedding& model, const Dataset& data);

double log_likelihood(const MarkovianEmbedding& model, const Dataset& data);

// dU/dH(mu,nu) for U = exp(-i H tau), via the eigenbasis of H.
CMatrix unitary_derivative(const SpectralDecomposition& spec, int mu, int nu, double tau);

// (n / |batch|) sum_{m in batch} d s_m / s_m with s_m the normalized sandwich
// value at merge point m (1-based, m in 1..n). Full batch gives the exact
// gradient of log p.
GradientMatrix log_likelihood_gradient(const Dilation& channel, const MarkovianEmbedding& model,
                                       const Dataset& data, const PropagationCache& cache,
                                       std::span<const std::size_t> batch);
GradientMatrix log_likelihood_gradient(const MarkovianEmbedding& model, const Dataset& data,
                                       const PropagationCache& cache, std::span<const std::size_t> batch);
// Full batch convenience.
GradientMatrix log_likelihood_gradient(const MarkovianEmbedding& model, const Dataset& data);

// Same trajectory (provenance), same d_s and tau, and validation steps
// continuing the training steps; throws DataError otherwise.
void check_continuation(const Dataset& train, const Dataset& validation);

// Per-step log-likelihood of `validation` conditioned on having observed
// `train` first (validation must continue the same trajectory).
double conditional_validation_ll(const MarkovianEmbedding& model, const Dataset& train, const Dataset& validation);
double conditional_validation_ll(const Dilation& channel, const MarkovianEmbedding& model, const Dataset& train,
                                 const Dataset& validation);

// Measurement record drawn from the embedding itself: channel, random-basis
// measurement of S, collapse of S+ER. Steps numbered from 1.
Dataset sample_trajectory(const MarkovianEmbedding& model, std::size_t n, Rng& rng, std::uint64_t seed_tag = 0);

// CSV of per-step log-likelihood increments: step,log_p_increment,log_p_cumulative
void write_increments_csv(const PropagationCache& cache, const Dataset& data, const std::string& path);

}  // namespace membed
