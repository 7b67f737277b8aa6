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

#include "membed/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "membed/errors.hpp"
#include "membed/rng.hpp"

namespace membed {

void TrainConfig::validate() const {
  std::ostringstream os;
  if (d_er < 1) os << "d_er must be >= 1; ";
  if (epochs < 1) os << "epochs must be >= 1; ";
  if (batch_size < 1) os << "batch_size must be >= 1; ";
  if (!(init_scale >= 0.0)) os << "init_scale must be >= 0; ";
  if (!(init_coupling >= 0.0)) os << "init_coupling must be >= 0; ";
  if (convergence_window < 1) os << "convergence_window must be >= 1; ";
  if (!(convergence_tol >= 0.0)) os << "convergence_tol must be >= 0; ";
  if (!(learning_rate > 0.0)) os << "learning_rate must be > 0; ";
  if (!(beta1 >= 0.0 && beta1 < 1.0)) os << "beta1 must be in [0, 1); ";
  if (!(beta2 >= 0.0 && beta2 < 1.0)) os << "beta2 must be in [0, 1); ";
  if (!(epsilon > 0.0)) os << "epsilon must be > 0; ";
  if (restarts < 1) os << "restarts must be >= 1; ";
  if (validate_every < 1) os << "validate_every must be >= 1; ";
  if (!os.str().empty()) throw ConfigError("invalid training config: " + os.str());
}

RVector hamiltonian_to_params(const CMatrix& h) {
  const Eigen::Index n = h.rows();
  const Eigen::Index pairs = n * (n - 1) / 2;
  RVector p(n + 2 * pairs);
  for (Eigen::Index i = 0; i < n; ++i) p[i] = h(i, i).real();
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < j; ++i, ++k) {
      p[n + k] = h(i, j).real();
      p[n + pairs + k] = h(i, j).imag();
    }
  return p;
}

CMatrix params_to_hamiltonian(const RVector& params, int n) {
  const Eigen::Index pairs = static_cast<Eigen::Index>(n) * (n - 1) / 2;
  if (params.size() != n + 2 * pairs) throw DimensionError("params_to_hamiltonian: wrong parameter count");
  CMatrix h(n, n);
  for (int i = 0; i < n; ++i) h(i, i) = params[i];
  Eigen::Index k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < j; ++i, ++k) {
      h(i, j) = cplx(params[n + k], params[n + pairs + k]);
      h(j, i) = std::conj(h(i, j));
    }
  return h;
}

RVector gradient_to_params(const GradientMatrix& grad) {
  const CMatrix& g = grad.g;
  const Eigen::Index n = g.rows();
  const Eigen::Index pairs = n * (n - 1) / 2;
  RVector p(n + 2 * pairs);
  for (Eigen::Index i = 0; i < n; ++i) p[i] = g(i, i).real();
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < j; ++i, ++k) {
      // H(i,j) = x + iy enters at (i,j) and conj at (j,i)
      p[n + k] = 2.0 * g(i, j).real();
      p[n + pairs + k] = -2.0 * g(i, j).imag();
    }
  return p;
}

AdamState AdamState::make(Eigen::Index size, const TrainConfig& cfg) {
  AdamState s;
  s.m = RVector::Zero(size);
  s.v = RVector::Zero(size);
  s.learning_rate = cfg.learning_rate;
  s.beta1 = cfg.beta1;
  s.beta2 = cfg.beta2;
  s.epsilon = cfg.epsilon;
  return s;
}

std::pair<AdamState, CMatrix> adam_update(const AdamState& state, const GradientMatrix& grad) {
  if (!qla::is_hermitian(grad.g, 1e-10 * std::max(1.0, grad.g.cwiseAbs().maxCoeff())))
    throw NumericalError("adam_update: gradient is not Hermitian");
  const RVector g = gradient_to_params(grad);
  if (g.size() != state.m.size()) throw DimensionError("adam_update: gradient size does not match the optimizer");
  AdamState next = state;
  next.step_count += 1;
  next.m = state.beta1 * state.m + (1.0 - state.beta1) * g;
  next.v = state.beta2 * state.v + (1.0 - state.beta2) * g.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(next.step_count));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(next.step_count));
  const RVector delta =
      state.learning_rate * (next.m / c1).array() / ((next.v / c2).array().sqrt() + state.epsilon);
  return {std::move(next), params_to_hamiltonian(delta, static_cast<int>(grad.g.rows()))};
}

void LearningCurve::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out.precision(17);
  out << "epoch,train_ll_per_step,val_ll_per_step,seconds\n";
  for (const auto& r : records) {
    out << r.epoch << ',' << r.train_ll_per_step << ',';
    if (r.val_ll_per_step) out << *r.val_ll_per_step;
    out << ',' << r.seconds << '\n';
  }
}

MarkovianEmbedding init_model(const DimSpec& dims, double tau, const TrainConfig& cfg, Rng& rng) {
  dims.validate();
  const CVector psi_s = qla::haar_random_pure_state(dims.d_s, rng);
  const CVector psi_er = qla::haar_random_pure_state(dims.d_er, rng);
  CMatrix h = qla::kron(cfg.init_scale * qla::random_hermitian(dims.d_ser(), rng), qla::identity(dims.d_a));
  if (cfg.init_coupling > 0.0) h += cfg.init_coupling * qla::random_hermitian(dims.d_total(), rng);
  return MarkovianEmbedding(dims, tau, h, qla::kron(qla::projector(psi_s), qla::projector(psi_er)),
                            default_ancilla_state(dims.d_a));
}

namespace {

void draw_batch(std::vector<std::size_t>& pool, std::size_t size, Rng& rng, std::vector<std::size_t>& batch) {
  batch.resize(size);
  for (std::size_t k = 0; k < size; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
    std::swap(pool[k], pool[pick(rng)]);
    batch[k] = pool[k];
  }
}

}  // namespace

FitResult fit_single(const Dataset& train, const Dataset* validation, const MarkovianEmbedding& init,
                     const TrainConfig& cfg, Rng& batch_rng, const EpochCallback& on_epoch) {
  cfg.validate();
  const std::size_t n = train.size();
  if (n == 0) throw DataError("fit: empty training set");
  if (validation) {
    if (validation->size() == 0) throw DataError("fit: empty validation set");
    check_continuation(train, *validation);
  }
  const DimSpec dims = init.dims();
  const auto start = std::chrono::steady_clock::now();

  MarkovianEmbedding model = init;
  AdamState adam = AdamState::make(static_cast<Eigen::Index>(dims.d_total()) * dims.d_total(), cfg);
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{1});
  std::vector<std::size_t> batch;
  const std::size_t batch_size = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n);

  FitResult result{model, {}, 0.0, std::nullopt, 0};
  double best_val = -std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const Dilation channel = Dilation::build(model);
    const PropagationCache cache = build_cache(channel, model, train);
    LearningCurveRecord rec;
    rec.epoch = epoch;
    rec.train_ll_per_step = cache.log_likelihood() / static_cast<double>(n);
    if (validation && ((epoch - 1) % cfg.validate_every == 0 || epoch == cfg.epochs)) {
      rec.val_ll_per_step = forward_pass(channel, cache.forward.back(), dims, *validation).log_likelihood() /
                            static_cast<double>(validation->size());
      if (*rec.val_ll_per_step > best_val) {
        best_val = *rec.val_ll_per_step;
        result.model = model;
        result.train_ll_per_step = rec.train_ll_per_step;
        result.val_ll_per_step = rec.val_ll_per_step;
      }
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.curve.records.push_back(rec);
    if (on_epoch) on_epoch(rec);

    const auto& recs = result.curve.records;
    if (epoch > cfg.convergence_window &&
        std::abs(recs.back().train_ll_per_step - recs[recs.size() - 1 - cfg.convergence_window].train_ll_per_step) <
            cfg.convergence_tol)
      break;
    if (epoch == cfg.epochs) break;

    if (batch_size == n) {
      batch.assign(pool.begin(), pool.end());
      std::sort(batch.begin(), batch.end());
    } else {
      draw_batch(pool, batch_size, batch_rng, batch);
    }
    const GradientMatrix grad = log_likelihood_gradient(channel, model, train, cache, batch);
    auto [next, delta] = adam_update(adam, grad);
    adam = std::move(next);
    model = model.with_hamiltonian(qla::hermitian_part(model.hamiltonian() + delta));
  }

  if (!validation) {
    result.model = model;
    result.train_ll_per_step = result.curve.records.back().train_ll_per_step;
  }
  return result;
}

FitResult fit(const Dataset& train, const Dataset* validation, const DimSpec& dims, const TrainConfig& cfg,
              const EpochCallback& on_epoch) {
  cfg.validate();
  if (dims.d_er != cfg.d_er) throw ConfigError("fit: dims.d_er does not match the training config");
  const SeedSplitter seeds(cfg.seed);
  constexpr int kMaxFailures = 3;
  int failures = 0;
  std::uint64_t attempt = 0;
  std::optional<FitResult> best;
  for (int run = 0; run < cfg.restarts; ++run) {
    for (;;) {
      Rng init_rng = seeds.stream("init", attempt);
      Rng batch_rng = seeds.stream("batch", attempt);
      const int index = static_cast<int>(attempt++);
      try {
        const MarkovianEmbedding init = init_model(dims, train.tau, cfg, init_rng);
        FitResult r = fit_single(train, validation, init, cfg, batch_rng, on_epoch);
        r.restart = index;
        const double score = validation ? r.val_ll_per_step.value_or(-1e300) : r.train_ll_per_step;
        const double best_score =
            !best ? -std::numeric_limits<double>::infinity()
                  : (validation ? best->val_ll_per_step.value_or(-1e300) : best->train_ll_per_step);
        if (score > best_score) best = std::move(r);
        break;
      } catch (const ZeroProbabilityError& e) {
        if (++failures > kMaxFailures)
          throw NumericalError(std::string("fit: training failed after repeated restarts: ") + e.what());
      }
    }
  }
  return std::move(*best);
}

SelectionResult select_d_er(const Dataset& train, const Dataset& validation, const std::vector<int>& candidates,
                            const TrainConfig& cfg, const EpochCallback& on_epoch) {
  if (candidates.empty()) throw ConfigError("select_d_er: no candidates");
  SelectionResult out;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> order = candidates;
  for (int d_er : order) {
    TrainConfig c = cfg;
    c.d_er = d_er;
    FitResult r = fit(train, &validation, DimSpec::make(train.d_s, d_er), c, on_epoch);
    const double val = conditional_validation_ll(r.model, train, validation);
    out.table.push_back({d_er, r.train_ll_per_step, val});
    if (val > best || (val == best && d_er < out.best_d_er)) {
      best = val;
      out.best_d_er = d_er;
    }
    out.fits.push_back(std::move(r));
  }
  return out;
}

namespace {

double log_bound(double alpha, double log_eps, double ngt, double log_gtau) {
  const double one_minus = 1.0 - alpha;
  return 0.5 * std::log(one_minus) - alpha / (2.0 * one_minus) * log_eps +
         ngt * (std::exp((alpha - 1.0) * log_gtau) - alpha) / one_minus;
}

}  // namespace

DerEstimate estimate_d_er(double epsilon, int n_dof, double gamma, double t, double tau_cut, long cap) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("estimate_d_er: epsilon must be in (0, 1)");
  if (n_dof <= 0 || !(gamma > 0.0) || !(t > 0.0) || !(tau_cut > 0.0))
    throw ConfigError("estimate_d_er: n_dof, gamma, T and tau must be positive");
  if (cap < 1) throw ConfigError("estimate_d_er: cap must be >= 1");
  const double log_eps = std::log(epsilon);
  const double ngt = n_dof * gamma * t;
  const double log_gtau = std::log(gamma * tau_cut);
  auto f = [&](double a) { return log_bound(a, log_eps, ngt, log_gtau); };

  double best_alpha = 0.001;
  double best = f(best_alpha);
  for (int k = 2; k <= 999; ++k) {
    const double a = 0.001 * k;
    const double v = f(a);
    if (v < best || std::isnan(best)) {
      best = v;
      best_alpha = a;
    }
  }
  // golden-section refinement on the bracketing grid cell pair
  double lo = std::max(best_alpha - 0.001, 1e-9);
  double hi = std::min(best_alpha + 0.001, 1.0 - 1e-9);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - phi * (hi - lo);
  double x2 = lo + phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int it = 0; it < 100 && hi - lo > 1e-12; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = f(x2);
    }
  }
  const double refined_alpha = f1 < f2 ? x1 : x2;
  const double refined = std::min(f1, f2);
  if (refined < best) {
    best = refined;
    best_alpha = refined_alpha;
  }

  DerEstimate out;
  out.alpha = best_alpha;
  if (!std::isfinite(best) || best > std::log(static_cast<double>(cap))) {
    out.value = cap;
    out.saturated = true;
    return out;
  }
  // a bound within 1e-6 above an integer counts as that integer (rounding and the decoupled limit)
  out.value = std::max(1L, static_cast<long>(std::ceil(std::exp(best) - 1e-6)));
  return out;
}

}  // namespace membed
