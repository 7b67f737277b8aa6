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

// Maximum-likelihood training of the embedding: Adam ascent on the real
// parameters of H, learning curves, selection of d_ER on a validation set, and
// the physical estimate of a sufficient d_ER.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "membed/likelihood.hpp"

namespace membed {

struct TrainConfig {
  int d_er = 2;
  int epochs = 3000;
  int batch_size = 1000;
  std::uint64_t seed = 0;
  double init_scale = 0.1;     // std-dev of the Gaussian H_{S+ER} entries
  double init_coupling = 0.0;  // std-dev of an optional S+ER-ancilla coupling added at init
  int convergence_window = 100;
  double convergence_tol = 1e-4;  // nats per step
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double epsilon = 1e-4;
  int restarts = 3;
  int validate_every = 1;

  void validate() const;
};

// Real parameter layout of a Hermitian N x N matrix: N diagonal entries, then
// Re H(i,j) for i < j in column order, then Im H(i,j) in the same order.
RVector hamiltonian_to_params(const CMatrix& h);
CMatrix params_to_hamiltonian(const RVector& params, int n);
// d log p / d params for the Hermitian gradient g.
RVector gradient_to_params(const GradientMatrix& grad);

struct AdamState {
  RVector m;
  RVector v;
  long step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double epsilon = 1e-4;

  static AdamState make(Eigen::Index size, const TrainConfig& cfg);
};

// One ascent step. Returns the updated state and the Hermitian increment of H.
std::pair<AdamState, CMatrix> adam_update(const AdamState& state, const GradientMatrix& grad);

struct LearningCurveRecord {
  int epoch = 0;
  double train_ll_per_step = 0.0;
  std::optional<double> val_ll_per_step;
  double seconds = 0.0;
};

struct LearningCurve {
  std::vector<LearningCurveRecord> records;

  // epoch,train_ll_per_step,val_ll_per_step,seconds (empty field when absent)
  void write_csv(const std::string& path) const;
};

using EpochCallback = std::function<void(const LearningCurveRecord&)>;

// rho_{S+ER}(0) = (Haar pure on S) (x) (Haar pure on ER), H = H_{S+ER} (x) I_A
// (plus the optional coupling), ancilla |0>.
MarkovianEmbedding init_model(const DimSpec& dims, double tau, const TrainConfig& cfg, Rng& rng);

struct FitResult {
  MarkovianEmbedding model;
  LearningCurve curve;
  double train_ll_per_step = 0.0;
  std::optional<double> val_ll_per_step;
  int restart = 0;  // index of the selected run
};

// Runs cfg.restarts independent fits (seed streams "init"/"batch" indexed by
// restart) and keeps the best by validation likelihood, or by train
// likelihood without validation data. Within a run the best-validation model
// is returned when validation data is present, else the final one.
FitResult fit(const Dataset& train, const Dataset* validation, const DimSpec& dims, const TrainConfig& cfg,
               const EpochCallback& on_epoch = {});
// One run from the given initial model.
FitResult fit_single(const Dataset& train, const Dataset* validation, const MarkovianEmbedding& init,
                     const TrainConfig& cfg, Rng& batch_rng, const EpochCallback& on_epoch = {});

struct SelectionEntry {
  int d_er = 0;
  double train_ll_per_step = 0.0;
  double val_ll_per_step = 0.0;
};

struct SelectionResult {
  int best_d_er = 0;
  std::vector<SelectionEntry> table;
  std::vector<FitResult> fits;  // one per candidate, same order as table
};

// Ties go to the smaller d_ER.
SelectionResult select_d_er(const Dataset& train, const Dataset& validation, const std::vector<int>& candidates,
                            const TrainConfig& cfg, const EpochCallback& on_epoch = {});

struct DerEstimate {
  long value = 0;
  bool saturated = false;  // true when the bound exceeded `cap`
  double alpha = 0.0;
};

// Smallest sufficient d_ER from the minimum over alpha in (0, 1) of
//   sqrt(1 - alpha) eps^{-alpha / (2 (1 - alpha))} exp[n gamma T ((gamma tau)^{alpha - 1} - alpha) / (1 - alpha)].
DerEstimate estimate_d_er(double epsilon, int n_dof, double gamma, double t, double tau_cut, long cap = 1000000000L);

}  // namespace membed
