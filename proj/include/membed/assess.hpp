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

// Channel fingerprints and comparisons: Choi matrices, average Choi error,
// the full-process-tomography baseline, and coherent control versus the
// concatenation of intermediate maps.

#include <functional>
#include <vector>

#include "membed/datagen.hpp"
#include "membed/embedding.hpp"

namespace membed {

enum class ChoiSource { learned, exact, tomographic, other };

const char* to_string(ChoiSource source);

// omega = (Phi (x) Id)[|psi+><psi+|] = (1/d) sum_ij Phi(|i><j|) (x) |i><j|,
// output factor first.
struct ChoiMatrix {
  CMatrix omega;
  ChoiSource source = ChoiSource::other;
  double time = 0.0;

  int d_s() const;
  // Throws NumericalError when Hermiticity, unit trace, PSD (to psd_tol) or
  // tr_out omega = I/d (to tp_tol) fails.
  void check_cptp(double psd_tol = 1e-10, double tp_tol = 1e-8) const;
  // Column-stacking superoperator of the channel.
  CMatrix superoperator() const;
  CMatrix apply(const CMatrix& rho) const;
};

using ChannelEvaluator = std::function<CMatrix(const CMatrix&)>;

ChoiMatrix choi_of_map(const ChannelEvaluator& channel, int d_s, ChoiSource source = ChoiSource::other,
                       double time = 0.0);
ChoiMatrix choi_of_superoperator(const CMatrix& superop, ChoiSource source = ChoiSource::other, double time = 0.0);

// Superoperators of Phi_S(t)[rho] = tr_ER[exp(t L)(rho (x) rho_er0)].
std::vector<CMatrix> system_channels(const GeneratorSuperoperator& gen, const DimSpec& dims, const CMatrix& rho_er0,
                                     const std::vector<double>& times);
std::vector<ChoiMatrix> dynamics_maps(const GeneratorSuperoperator& gen, const DimSpec& dims,
                                      const CMatrix& rho_er0, const std::vector<double>& times);
std::vector<ChoiMatrix> dynamics_maps(const MarkovianEmbedding& model, const CMatrix& rho_er0,
                                      const std::vector<double>& times);
// ER starting in the model's equilibrium state.
std::vector<ChoiMatrix> equilibrium_dynamics_maps(const MarkovianEmbedding& model, const std::vector<double>& times);
std::vector<ChoiMatrix> exact_maps(const ExactReference& reference);
// Exact collision maps at integer times with S1 starting in its equilibrium state.
std::vector<ChoiMatrix> exact_equilibrium_maps(const CollisionModelConfig& cfg, const std::vector<int>& times);

// (1/2) ||a - b||_1
double choi_error(const ChoiMatrix& a, const ChoiMatrix& b);
// (1/2K) sum_i ||a_i - b_i||_1; times must match.
double average_choi_error(const std::vector<ChoiMatrix>& a, const std::vector<ChoiMatrix>& b);

// Input states rho_j and POVM effects F_k. For a qubit: |0>, |1>, |+>, |+i>
// and F_{2m-1} = rho_m / 4, F_{2m} = (I - rho_m) / 4.
struct TomographyDesign {
  std::vector<CMatrix> inputs;
  std::vector<CMatrix> effects;
  long shots = 0;

  static TomographyDesign qubit(long shots);
  void validate() const;
};

// counts(j, k): outcome k after preparing input j. Real-valued so that exact
// probabilities can be passed as counts.
using TomographyCounts = Eigen::MatrixXd;

// Each shot picks an input uniformly, propagates it and samples an effect.
TomographyCounts simulate_tomography_counts(const ChannelEvaluator& channel, const TomographyDesign& design, Rng& rng);
// p(j, k) = tr[Phi(rho_j) F_k]
Eigen::MatrixXd tomography_probabilities(const ChoiMatrix& choi, const TomographyDesign& design);
// sum_jk n_jk log p_jk
double tomography_log_likelihood(const ChoiMatrix& choi, const TomographyCounts& counts,
                                 const TomographyDesign& design);

struct TomographyFit {
  ChoiMatrix choi;
  double log_likelihood = 0.0;
  double start_log_likelihood = 0.0;
  int iterations = 0;
};

// Maximum-likelihood CPTP channel by the diluted, trace-preservation
// constrained fixed-point iteration C <- L^{-1/2} R C R L^{-1/2}, started
// from the completely depolarizing channel. Stops when the per-shot
// log-likelihood gain drops below `tol`.
TomographyFit tomography_mle(const TomographyCounts& counts, const TomographyDesign& design, int max_iterations = 200000,
                             double tol = 1e-10);

struct ControlEvent {
  double time = 0.0;
  CMatrix gate;

  void validate() const;
};

// Piecewise semigroup propagation of rho_S0 (x) rho_ER0 with V (x) I_ER applied at
// each event time; a state reported at an event time is the post-gate state.
std::vector<CMatrix> predict_with_control(const GeneratorSuperoperator& gen, const DimSpec& dims,
                                          const CMatrix& rho_s0, const CMatrix& rho_er0,
                                          const std::vector<ControlEvent>& events, const std::vector<double>& times);
std::vector<CMatrix> predict_with_control(const MarkovianEmbedding& model, const CMatrix& rho_s0,
                                          const CMatrix& rho_er0, const std::vector<ControlEvent>& events,
                                          const std::vector<double>& times);

struct ConcatenationTrajectory {
  std::vector<double> times;
  std::vector<CMatrix> states;
  std::vector<double> min_eigenvalues;
  std::vector<bool> positive;  // min eigenvalue >= -1e-10
};

// Phi(t_l)[rho0] before the gate and Phi(t_l) Phi(t_m)^{-1}[V Phi(t_m)[rho0] V^dagger]
// from the gate on. `maps` supplies Phi at every requested time and at the
// event time; t = 0 is the identity. Outputs are not clipped to positivity.
ConcatenationTrajectory concatenation_prediction(const std::vector<ChoiMatrix>& maps, const ControlEvent& event,
                                                 const CMatrix& rho_s0, const std::vector<double>& times,
                                                 double condition_cap = 1e8);

// Collision model with V (x) I_S1 applied after whole periods; times and
// event times in units of the period.
std::vector<CMatrix> exact_controlled_dynamics(const CollisionModelConfig& cfg, int event_period, const CMatrix& gate,
                                               const std::vector<int>& times);

// (1/2) ||a_i - b_i||_1 for each pair.
std::vector<double> trace_distance_trajectory(const std::vector<CMatrix>& a, const std::vector<CMatrix>& b);
// True if any consecutive increase exceeds tol.
bool is_non_monotonic(const std::vector<double>& values, double tol = 1e-6);

}  // namespace membed
