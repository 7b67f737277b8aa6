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

// Synthetic ground truth: the composite bipartite collision model (system S,
// auxiliary qubit S1, fresh qubit subenvironments R), random-basis projective
// measurements, and the SHIFT.SWAP overfitting construction.

#include <cstdint>
#include <string>
#include <vector>

#include "membed/qla.hpp"

namespace membed {

struct CollisionModelConfig {
  CMatrix hamiltonian;        // on S (x) S1 (x) R, 8 x 8
  double delta_t = 0.2;       // collision time
  int collisions_per_period = 5;
  CMatrix rho_r;              // fresh subenvironment state
  CMatrix rho_ss1_0;          // initial S (x) S1 state

  double tau() const { return delta_t * collisions_per_period; }
  void validate() const;
  // Stable FNV-1a digest of every field, hex encoded.
  std::string hash() const;

  // Default collision Hamiltonian, delta_t = 0.2, 5 collisions per period, rho_R = |0><0|,
  // rho_SS1(0) = |00><00|.
  static CollisionModelConfig defaults();
};

// sz.I.I + sx.I.I + I.sz.I + I.sx.I + sz.sz.I + 0.3 (I.sz.sz + I.sy.sy + I.sx.sx)
CMatrix default_collision_hamiltonian();

// tr_R[exp(-i H dt) (rho_SS1 (x) rho_R) exp(i H dt)]
CMatrix collision_step(const CMatrix& rho_ss1, const CollisionModelConfig& cfg);

// Precomputed collision channel: per-collision and per-period superoperators on
// column-stacked S (x) S1 density matrices.
class CollisionModel {
 public:
  explicit CollisionModel(CollisionModelConfig cfg);

  const CollisionModelConfig& config() const { return cfg_; }
  CMatrix collide(const CMatrix& rho_ss1) const;
  // collisions_per_period collisions.
  CMatrix period(const CMatrix& rho_ss1) const;
  const CMatrix& period_superop() const { return period_superop_; }

 private:
  CollisionModelConfig cfg_;
  CMatrix step_superop_;
  CMatrix period_superop_;
};

struct MeasurementRecord {
  long step = 1;
  CMatrix basis;  // columns are the basis vectors |phi_k>
  int outcome = 0;

  CMatrix projector() const { return qla::projector(basis.col(outcome)); }
};

struct Provenance {
  std::uint64_t seed = 0;
  std::string config_hash;
};

struct Dataset {
  std::vector<MeasurementRecord> records;
  double tau = 1.0;
  int d_s = 2;
  Provenance provenance;

  std::size_t size() const { return records.size(); }
  long first_step() const { return records.empty() ? 1 : records.front().step; }
  // steps contiguous, bases unitary, outcomes in range
  void validate() const;
};

// First `count` records and the remainder, both keeping tau/d_s/provenance.
std::pair<Dataset, Dataset> split_dataset(const Dataset& data, std::size_t count);
Dataset concatenate(const Dataset& first, const Dataset& second);

struct SampledMeasurement {
  MeasurementRecord record;
  CMatrix projector;
};

// Basis of eigenvectors of r.sigma (column 0: eigenvalue +1) for a uniformly
// random direction r, then a Born-rule outcome.
SampledMeasurement sample_measurement(const CMatrix& rho_s, Rng& rng);
// Born-rule outcome in a given basis.
SampledMeasurement measure_in_basis(const CMatrix& rho_s, const CMatrix& basis, Rng& rng);
// Eigenbasis of r.sigma for a unit vector r.
CMatrix bloch_direction_basis(double x, double y, double z);

// Collisions interleaved with measurements; steps numbered from first_step.
Dataset generate_trajectory(const CollisionModelConfig& cfg, std::size_t n, Rng& rng,
                            std::uint64_t seed_tag = 0);

struct ExactReference {
  std::vector<int> times;               // in units of tau
  std::vector<CMatrix> states;          // rho_S(t), no measurements
  std::vector<CMatrix> channels;        // superoperator of Phi_S(t) on S, column stacking
};

// Unmeasured dynamics from cfg.rho_ss1_0; channels use the S1 marginal of
// cfg.rho_ss1_0 as the fixed auxiliary state.
ExactReference exact_reference_dynamics(const CollisionModelConfig& cfg, const std::vector<int>& times);

// S1 marginal of the stationary state of the per-period collision channel.
CMatrix collision_equilibrium_s1(const CollisionModelConfig& cfg);

// cfg with rho_SS1(0) = rho_s0 (x) collision_equilibrium_s1(cfg).
CollisionModelConfig equilibrium_start(const CollisionModelConfig& cfg, const CMatrix& rho_s0);

struct OverfitResult {
  double train_log_likelihood = 0.0;
  double validation_ll_per_step = 0.0;
};

// SHIFT.SWAP environment built from the first half of `records`, evaluated on
// both halves. Environment states are tracked as a product of pure states.
OverfitResult overfit_oracle(const Dataset& records, const CMatrix& rho_s0);

}  // namespace membed
