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

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "doctest.h"
#include "membed/errors.hpp"
#include "membed/rng.hpp"
#include "membed/train.hpp"

using namespace membed;

namespace {

// Markovian ground truth: a qubit weakly dilated onto the ancilla with a strong local field.
MarkovianEmbedding markovian_truth(Rng& rng) {
  const DimSpec dims = DimSpec::make(2, 1);
  CMatrix h = qla::kron(0.9 * qla::pauli_x() + 0.4 * qla::pauli_z(), qla::identity(dims.d_a));
  h += 0.25 * qla::random_hermitian(dims.d_total(), rng);
  return MarkovianEmbedding(dims, 1.0, qla::hermitian_part(h), qla::projector(CVector::Unit(2, 0)),
                            default_ancilla_state(dims.d_a));
}

double log_objective(double alpha, double eps, int n, double gamma, double t, double tau) {
  return 0.5 * std::log(1.0 - alpha) - alpha / (2.0 * (1.0 - alpha)) * std::log(eps) +
         n * gamma * t * (std::pow(gamma * tau, alpha - 1.0) - alpha) / (1.0 - alpha);
}

}  // namespace

TEST_SUITE("train") {
  TEST_CASE("parameter layout round trip and gradient mapping") {
    Rng rng(1);
    const CMatrix h = qla::random_hermitian(5, rng);
    const RVector p = hamiltonian_to_params(h);
    CHECK(p.size() == 25);
    CHECK(p[0] == h(0, 0).real());
    CHECK(p[5] == h(0, 1).real());
    CHECK(p[5 + 10] == h(0, 1).imag());
    CHECK(p[6] == h(0, 2).real());
    CHECK(p[7] == h(1, 2).real());
    CHECK((params_to_hamiltonian(p, 5) - h).cwiseAbs().maxCoeff() == 0.0);

    // Directional derivative sum_{ij} g_ij dH_ij equals <grad params, dparams>.
    const CMatrix g = qla::random_hermitian(5, rng);
    const CMatrix dh = qla::random_hermitian(5, rng);
    const double direct = g.cwiseProduct(dh).sum().real();
    CHECK(gradient_to_params({g}).dot(hamiltonian_to_params(dh)) == doctest::Approx(direct).epsilon(1e-12));
  }

  TEST_CASE("first Adam step is lr times the sign of the gradient") {
    TrainConfig cfg;
    Rng rng(2);
    const CMatrix g = 50.0 * qla::random_hermitian(3, rng);
    const AdamState s0 = AdamState::make(9, cfg);
    auto [s1, dh] = adam_update(s0, {g});
    const RVector gp = gradient_to_params({g});
    const RVector dp = hamiltonian_to_params(dh);
    for (Eigen::Index k = 0; k < gp.size(); ++k) {
      CHECK(dp[k] == doctest::Approx(cfg.learning_rate * gp[k] / (std::abs(gp[k]) + cfg.epsilon)).epsilon(1e-12));
      CHECK(std::abs(std::abs(dp[k]) - cfg.learning_rate) < 1e-5 * cfg.learning_rate + 1e-9);
    }
    CHECK(s1.step_count == 1);
    CHECK(qla::is_hermitian(dh, 0.0));
  }

  TEST_CASE("zero gradient leaves parameters unchanged") {
    TrainConfig cfg;
    AdamState s = AdamState::make(4, cfg);
    for (int k = 0; k < 20; ++k) {
      auto [next, dh] = adam_update(s, {CMatrix::Zero(2, 2)});
      CHECK(dh.cwiseAbs().maxCoeff() == 0.0);
      s = next;
    }
  }

  TEST_CASE("Adam recursion agrees with the unrolled moment sums") {
    TrainConfig cfg;
    Rng rng(3);
    AdamState s = AdamState::make(4, cfg);
    std::vector<RVector> grads;
    for (int t = 1; t <= 100; ++t) {
      const CMatrix g = qla::random_hermitian(2, rng);
      grads.push_back(gradient_to_params({g}));
      auto [next, dh] = adam_update(s, {g});
      s = next;
      RVector m = RVector::Zero(4), v = RVector::Zero(4);
      for (int k = 0; k < t; ++k) {
        m += (1.0 - cfg.beta1) * std::pow(cfg.beta1, t - 1 - k) * grads[k];
        v += (1.0 - cfg.beta2) * std::pow(cfg.beta2, t - 1 - k) * grads[k].cwiseAbs2();
      }
      const RVector mh = m / (1.0 - std::pow(cfg.beta1, t));
      const RVector vh = v / (1.0 - std::pow(cfg.beta2, t));
      const RVector expected = cfg.learning_rate * mh.array() / (vh.array().sqrt() + cfg.epsilon);
      CHECK((hamiltonian_to_params(dh) - expected).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("adam_update rejects non-Hermitian gradients") {
    TrainConfig cfg;
    CMatrix g = CMatrix::Zero(2, 2);
    g(0, 1) = 1.0;
    CHECK_THROWS_AS(adam_update(AdamState::make(4, cfg), {g}), NumericalError);
  }

  TEST_CASE("init_model: factorized form, determinism, zero scale") {
    TrainConfig cfg;
    const DimSpec dims = DimSpec::make(2, 2);
    Rng a(4), b(4);
    const MarkovianEmbedding m = init_model(dims, 1.0, cfg, a);
    const MarkovianEmbedding m2 = init_model(dims, 1.0, cfg, b);
    CHECK(m.hamiltonian() == m2.hamiltonian());
    CHECK(m.rho0_ser() == m2.rho0_ser());
    // H = H_SER (x) I_A: every ancilla-diagonal block equals the first and off-diagonal blocks vanish.
    const int da = dims.d_a;
    double off = 0.0, spread = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        for (int a1 = 0; a1 < da; ++a1)
          for (int a2 = 0; a2 < da; ++a2) {
            const cplx v = m.hamiltonian()(i * da + a1, j * da + a2);
            if (a1 != a2)
              off = std::max(off, std::abs(v));
            else
              spread = std::max(spread, std::abs(v - m.hamiltonian()(i * da, j * da)));
          }
    CHECK(off == 0.0);
    CHECK(spread == 0.0);
    CHECK(qla::trace_norm(m.rho0_ser()) == doctest::Approx(1.0));
    CHECK(qla::min_eigenvalue(m.rho0_ser()) > -1e-12);
    CHECK(qla::trace_norm(m.rho0_ser() * m.rho0_ser()) == doctest::Approx(1.0));

    TrainConfig zero = cfg;
    zero.init_scale = 0.0;
    Rng c(5);
    CHECK(init_model(dims, 1.0, zero, c).hamiltonian().cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("config validation") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    TrainConfig bad = cfg;
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.learning_rate = -1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.restarts = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }

  TEST_CASE("training recovers a Markovian ground truth; curves trend upward") {
    Rng rng(6);
    const MarkovianEmbedding truth = markovian_truth(rng);
    Rng data_rng(7);
    const Dataset all = sample_trajectory(truth, 4000, data_rng, 7);
    auto [train, val] = split_dataset(all, 2000);
    const double truth_ll = log_likelihood(truth, train) / 2000.0;

    TrainConfig cfg;
    cfg.d_er = 1;
    cfg.epochs = 1500;
    cfg.learning_rate = 1e-2;
    cfg.restarts = 1;
    cfg.seed = 8;
    cfg.validate_every = 50;
    int calls = 0;
    const FitResult r = fit(train, nullptr, DimSpec::make(2, 1), cfg, [&](const LearningCurveRecord&) { ++calls; });
    CHECK(r.train_ll_per_step > truth_ll - 0.02);
    CHECK(calls == static_cast<int>(r.curve.records.size()));
    for (std::size_t k = 0; k < r.curve.records.size(); ++k) CHECK(r.curve.records[k].epoch == static_cast<int>(k) + 1);
    // Mean over the last window exceeds the mean over the first.
    const std::size_t w = std::min<std::size_t>(100, r.curve.records.size() / 2);
    double first = 0.0, last = 0.0;
    for (std::size_t k = 0; k < w; ++k) {
      first += r.curve.records[k].train_ll_per_step;
      last += r.curve.records[r.curve.records.size() - 1 - k].train_ll_per_step;
    }
    CHECK(last > first);
    CHECK(qla::is_hermitian(r.model.hamiltonian(), 1e-12));
  }

  TEST_CASE("fit is deterministic under fixed seeds") {
    Rng rng(9);
    const Dataset d = sample_trajectory(markovian_truth(rng), 300, rng, 9);
    TrainConfig cfg;
    cfg.d_er = 2;
    cfg.epochs = 15;
    cfg.batch_size = 100;
    cfg.restarts = 2;
    cfg.seed = 10;
    const FitResult a = fit(d, nullptr, DimSpec::make(2, 2), cfg);
    const FitResult b = fit(d, nullptr, DimSpec::make(2, 2), cfg);
    REQUIRE(a.curve.records.size() == b.curve.records.size());
    for (std::size_t k = 0; k < a.curve.records.size(); ++k)
      CHECK(a.curve.records[k].train_ll_per_step == b.curve.records[k].train_ll_per_step);
    CHECK(a.model.hamiltonian() == b.model.hamiltonian());
  }

  TEST_CASE("full batch is exact gradient ascent with Adam preconditioning") {
    Rng rng(11);
    const Dataset d = sample_trajectory(markovian_truth(rng), 40, rng, 11);
    TrainConfig cfg;
    cfg.d_er = 1;
    cfg.epochs = 2;  // the record of epoch k precedes the k-th update; the last epoch only evaluates
    cfg.batch_size = 40;
    cfg.restarts = 1;
    Rng init_rng(12), batch_rng(13);
    const MarkovianEmbedding init = init_model(DimSpec::make(2, 1), d.tau, cfg, init_rng);
    const FitResult r = fit_single(d, nullptr, init, cfg, batch_rng);
    const AdamState s = AdamState::make(hamiltonian_to_params(init.hamiltonian()).size(), cfg);
    const auto [next, dh] = adam_update(s, log_likelihood_gradient(init, d));
    CHECK((r.model.hamiltonian() - (init.hamiltonian() + dh)).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("validation tracking and curve CSV") {
    Rng rng(14);
    const Dataset all = sample_trajectory(markovian_truth(rng), 400, rng, 14);
    auto [train, val] = split_dataset(all, 200);
    TrainConfig cfg;
    cfg.d_er = 1;
    cfg.epochs = 12;
    cfg.batch_size = 50;
    cfg.restarts = 1;
    cfg.validate_every = 5;
    const FitResult r = fit(train, &val, DimSpec::make(2, 1), cfg);
    REQUIRE(r.curve.records.size() == 12);
    // epochs 1, 6, 11 and the last one
    CHECK(r.curve.records[0].val_ll_per_step.has_value());
    CHECK(r.curve.records[5].val_ll_per_step.has_value());
    CHECK_FALSE(r.curve.records[4].val_ll_per_step.has_value());
    CHECK(r.curve.records[11].val_ll_per_step.has_value());
    CHECK(r.val_ll_per_step.has_value());
    CHECK(*r.val_ll_per_step == doctest::Approx(conditional_validation_ll(r.model, train, val)).epsilon(1e-12));

    const std::string path = "train_curve_test.csv";
    r.curve.write_csv(path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "epoch,train_ll_per_step,val_ll_per_step,seconds");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 12);
    std::remove(path.c_str());
  }

  TEST_CASE("select_d_er: singleton and Markovian source") {
    Rng rng(15);
    const Dataset all = sample_trajectory(markovian_truth(rng), 4000, rng, 15);
    auto [train, val] = split_dataset(all, 2000);
    TrainConfig cfg;
    cfg.epochs = 400;
    cfg.learning_rate = 1e-2;
    cfg.restarts = 1;
    cfg.validate_every = 20;
    const SelectionResult one = select_d_er(train, val, {1}, cfg);
    CHECK(one.best_d_er == 1);
    CHECK(one.table.size() == 1);

    const SelectionResult both = select_d_er(train, val, {1, 2}, cfg);
    MESSAGE("validation per step: d_ER=1 " << both.table[0].val_ll_per_step << ", d_ER=2 "
                                           << both.table[1].val_ll_per_step);
    CHECK(both.best_d_er == 1);
    CHECK_THROWS_AS(select_d_er(train, val, {}, cfg), ConfigError);
  }

  TEST_CASE("d_ER estimate: decoupled limit, monotonicity, grid agreement") {
    CHECK(estimate_d_er(0.1, 2, 1.0, 1e-9, 1.0).value == 1);
    // the bound grows with gamma while gamma * tau < 1
    long previous = 0;
    for (double gamma = 0.1; gamma < 2.0; gamma += 0.1) {
      const long v = estimate_d_er(0.05, 2, gamma, 5.0, 0.5).value;
      CHECK(v >= previous);
      previous = v;
    }
    Rng rng(16);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
      const double eps = 0.01 + 0.3 * u(rng);
      const int n = 1 + static_cast<int>(3 * u(rng));
      const double gamma = 0.05 + u(rng);
      const double t = 0.2 + 2.0 * u(rng);
      const double tau = 0.1 + u(rng);
      double best = INFINITY;
      for (int j = 1; j <= 999; ++j) best = std::min(best, log_objective(0.001 * j, eps, n, gamma, t, tau));
      const DerEstimate e = estimate_d_er(eps, n, gamma, t, tau);
      if (best > std::log(1e9)) {
        CHECK(e.saturated);
        continue;
      }
      const double grid_value = std::max(1.0, std::ceil(std::exp(best) - 1e-6));
      CHECK(std::abs(static_cast<double>(e.value) - grid_value) <= 1.0);
      CHECK(e.alpha > 0.0);
      CHECK(e.alpha < 1.0);
    }
    CHECK(estimate_d_er(1e-3, 50, 5.0, 100.0, 0.01).saturated);
    CHECK_THROWS_AS(estimate_d_er(1.5, 2, 1.0, 1.0, 1.0), ConfigError);
  }
}
