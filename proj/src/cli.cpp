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

#include "membed/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "membed/errors.hpp"
#include "membed/rng.hpp"

namespace membed {

namespace fs = std::filesystem;

namespace {

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& section) {
  if (!j.is_object()) throw ConfigError(section + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key \"" + key + "\" in " + section);
}

template <typename T>
void read(const Json& j, const char* key, T& target, const std::string& section) {
  if (!j.contains(key)) return;
  try {
    target = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(section + "." + key + ": " + e.what());
  }
}

std::vector<double> integer_grid(int t_max) {
  std::vector<double> t;
  for (int k = 0; k <= t_max; ++k) t.push_back(k);
  return t;
}

std::vector<double> read_times(const Json& j, const std::string& section, std::vector<double> fallback) {
  if (j.contains("times") && j.contains("t_max")) throw ConfigError(section + ": give either times or t_max");
  if (j.contains("t_max")) {
    int t_max = 0;
    read(j, "t_max", t_max, section);
    if (t_max < 0) throw ConfigError(section + ".t_max must be >= 0");
    return integer_grid(t_max);
  }
  if (j.contains("times")) {
    std::vector<double> t;
    read(j, "times", t, section);
    for (std::size_t k = 0; k < t.size(); ++k)
      if (!(t[k] >= 0.0) || (k > 0 && t[k] < t[k - 1])) throw ConfigError(section + ".times must be ascending and >= 0");
    return t;
  }
  return fallback;
}

CMatrix bloch_state(const std::vector<double>& r, const std::string& section) {
  if (r.size() != 3) throw ConfigError(section + ": rho_s0_bloch needs three components");
  const double norm = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
  if (norm > 1.0 + 1e-12) throw ConfigError(section + ": Bloch vector longer than 1");
  return 0.5 * (qla::identity(2) + r[0] * qla::pauli_x() + r[1] * qla::pauli_y() + r[2] * qla::pauli_z());
}

CMatrix gate_from_json(const Json& j, const std::string& section) {
  if (j.is_string()) {
    const std::string g = j.get<std::string>();
    if (g == "x") return qla::pauli_x();
    if (g == "y") return qla::pauli_y();
    if (g == "z") return qla::pauli_z();
    if (g == "i") return qla::identity(2);
    if (g == "h") return (qla::pauli_x() + qla::pauli_z()) / std::sqrt(2.0);
    throw ConfigError(section + ".gate: unknown gate name \"" + g + "\"");
  }
  try {
    return matrix_from_json(j, section + ".gate", 2, 2);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

Json bloch_json(const CMatrix& rho) {
  return {2.0 * rho(0, 1).real(), -2.0 * rho(0, 1).imag(), (rho(0, 0) - rho(1, 1)).real()};
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += std::log(x[k]) / n;
    my += std::log(y[k]) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxy += (std::log(x[k]) - mx) * (std::log(y[k]) - my);
    sxx += std::pow(std::log(x[k]) - mx, 2);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

std::vector<double> times_1_to(int k) {
  std::vector<double> t;
  for (int i = 1; i <= k; ++i) t.push_back(i);
  return t;
}

std::vector<int> int_times_1_to(int k) {
  std::vector<int> t;
  for (int i = 1; i <= k; ++i) t.push_back(i);
  return t;
}

}  // namespace

RunConfig parse_run_config(const Json& j) {
  check_keys(j, {"seed", "out", "collision", "generate", "data", "train", "validate", "model", "predict", "bayes", "tomo",
                 "compare"},
             "config");
  RunConfig c;
  c.rho_s0 = qla::projector(CVector::Unit(2, 0));
  c.gate = qla::pauli_x();
  c.predict_times = integer_grid(50);
  c.bayes_times = integer_grid(50);
  c.bayes_error_times = times_1_to(20);
  read(j, "seed", c.seed, "config");
  read(j, "out", c.out, "config");
  read(j, "model", c.model_path, "config");
  if (j.contains("collision")) c.collision = collision_config_from_json(j["collision"]);

  if (j.contains("generate")) {
    const Json& g = j["generate"];
    check_keys(g, {"n"}, "generate");
    read(g, "n", c.generate_n, "generate");
    if (c.generate_n < 1) throw ConfigError("generate.n must be >= 1");
  }
  if (j.contains("data")) {
    const Json& d = j["data"];
    check_keys(d, {"train", "val"}, "data");
    read(d, "train", c.train_path, "data");
    read(d, "val", c.val_path, "data");
  }
  if (j.contains("train")) {
    const Json& t = j["train"];
    const std::string s = "train";
    check_keys(t,
               {"d_er", "d_er_candidates", "epochs", "batch_size", "init_scale", "init_coupling", "convergence_window",
                "convergence_tol", "learning_rate", "beta1", "beta2", "epsilon", "restarts", "validate_every",
                "resume"},
               s);
    TrainConfig& tc = c.train;
    read(t, "d_er", tc.d_er, s);
    read(t, "d_er_candidates", c.d_er_candidates, s);
    read(t, "epochs", tc.epochs, s);
    read(t, "batch_size", tc.batch_size, s);
    read(t, "init_scale", tc.init_scale, s);
    read(t, "init_coupling", tc.init_coupling, s);
    read(t, "convergence_window", tc.convergence_window, s);
    read(t, "convergence_tol", tc.convergence_tol, s);
    read(t, "learning_rate", tc.learning_rate, s);
    read(t, "beta1", tc.beta1, s);
    read(t, "beta2", tc.beta2, s);
    read(t, "epsilon", tc.epsilon, s);
    read(t, "restarts", tc.restarts, s);
    read(t, "validate_every", tc.validate_every, s);
    read(t, "resume", c.resume, s);
  }
  if (c.d_er_candidates.empty()) c.d_er_candidates = {c.train.d_er};
  for (int d : c.d_er_candidates)
    if (d < 1) throw ConfigError("train.d_er_candidates entries must be >= 1");
  if (j.contains("validate")) {
    check_keys(j["validate"], {"models"}, "validate");
    read(j["validate"], "models", c.validate_models, "validate");
  }
  if (j.contains("predict")) {
    const Json& p = j["predict"];
    check_keys(p, {"times", "t_max", "rho_s0_bloch"}, "predict");
    c.predict_times = read_times(p, "predict", c.predict_times);
    if (p.contains("rho_s0_bloch")) {
      std::vector<double> r;
      read(p, "rho_s0_bloch", r, "predict");
      c.rho_s0 = bloch_state(r, "predict");
    }
  }
  if (j.contains("bayes")) {
    const Json& b = j["bayes"];
    const std::string s = "bayes";
    check_keys(b,
               {"steps", "mc_samples", "init_sigma", "learning_rate", "sigma_learning_rate", "beta1", "beta2", "epsilon",
                "floor", "divergence_window", "samples", "times", "t_max", "error_k"},
               s);
    BayesConfig& bc = c.bayes;
    read(b, "steps", bc.steps, s);
    read(b, "mc_samples", bc.mc_samples, s);
    read(b, "init_sigma", bc.init_sigma, s);
    read(b, "learning_rate", bc.learning_rate, s);
    read(b, "sigma_learning_rate", bc.sigma_learning_rate, s);
    read(b, "beta1", bc.beta1, s);
    read(b, "beta2", bc.beta2, s);
    read(b, "epsilon", bc.epsilon, s);
    read(b, "floor", bc.floor, s);
    read(b, "divergence_window", bc.divergence_window, s);
    read(b, "samples", c.bayes_samples, s);
    c.bayes_times = read_times(b, s, c.bayes_times);
    if (b.contains("error_k")) {
      int k = 0;
      read(b, "error_k", k, s);
      if (k < 1) throw ConfigError("bayes.error_k must be >= 1");
      c.bayes_error_times = times_1_to(k);
    }
    if (c.bayes_samples < 2) throw ConfigError("bayes.samples must be >= 2");
  }
  if (j.contains("tomo")) {
    const Json& t = j["tomo"];
    check_keys(t, {"total_shots", "k"}, "tomo");
    read(t, "total_shots", c.tomo_total_shots, "tomo");
    read(t, "k", c.tomo_k, "tomo");
    if (c.tomo_total_shots < 1) throw ConfigError("tomo.total_shots must be >= 1");
    for (int k : c.tomo_k)
      if (k < 1 || k > c.tomo_total_shots) throw ConfigError("tomo.k entries must be in 1..total_shots");
  }
  if (j.contains("compare")) {
    const Json& p = j["compare"];
    const std::string s = "compare";
    check_keys(p, {"event_time", "gate", "t_max", "k", "rho_s0_bloch", "error_models"}, s);
    read(p, "event_time", c.event_time, s);
    read(p, "t_max", c.compare_t_max, s);
    read(p, "k", c.compare_k, s);
    if (p.contains("gate")) c.gate = gate_from_json(p["gate"], s);
    if (p.contains("rho_s0_bloch")) {
      std::vector<double> r;
      read(p, "rho_s0_bloch", r, s);
      c.rho_s0 = bloch_state(r, s);
    }
    if (p.contains("error_models")) {
      if (!p["error_models"].is_array()) throw ConfigError("compare.error_models must be an array");
      for (const auto& e : p["error_models"]) {
        check_keys(e, {"path", "n"}, "compare.error_models[]");
        ErrorModelEntry entry;
        read(e, "path", entry.path, s);
        read(e, "n", entry.n, s);
        if (entry.path.empty() || entry.n < 1) throw ConfigError("compare.error_models entries need path and n >= 1");
        c.error_models.push_back(entry);
      }
    }
    if (c.compare_t_max < 1) throw ConfigError("compare.t_max must be >= 1");
    if (!(c.event_time >= 0.0) || c.event_time != std::floor(c.event_time) || c.event_time > c.compare_t_max)
      throw ConfigError("compare.event_time must be an integer in [0, t_max]");
    for (int k : c.compare_k)
      if (k < 1) throw ConfigError("compare.k entries must be >= 1");
  }
  c.train.validate();
  c.bayes.validate();
  return c;
}

Json resolved_config(const RunConfig& c) {
  const TrainConfig& t = c.train;
  const BayesConfig& b = c.bayes;
  Json models = Json::array();
  for (const auto& e : c.error_models) models.push_back({{"path", e.path}, {"n", e.n}});
  return Json{
      {"seed", c.seed},
      {"out", c.out},
      {"model", c.model_path},
      {"collision", collision_config_to_json(c.collision)},
      {"generate", {{"n", c.generate_n}}},
      {"data", {{"train", c.train_path}, {"val", c.val_path}}},
      {"train",
       {{"d_er", t.d_er},
        {"d_er_candidates", c.d_er_candidates},
        {"epochs", t.epochs},
        {"batch_size", t.batch_size},
        {"init_scale", t.init_scale},
        {"init_coupling", t.init_coupling},
        {"convergence_window", t.convergence_window},
        {"convergence_tol", t.convergence_tol},
        {"learning_rate", t.learning_rate},
        {"beta1", t.beta1},
        {"beta2", t.beta2},
        {"epsilon", t.epsilon},
        {"restarts", t.restarts},
        {"validate_every", t.validate_every},
        {"resume", c.resume}}},
      {"validate", {{"models", c.validate_models}}},
      {"predict", {{"times", c.predict_times}, {"rho_s0_bloch", bloch_json(c.rho_s0)}}},
      {"bayes",
       {{"steps", b.steps},
        {"mc_samples", b.mc_samples},
        {"init_sigma", b.init_sigma},
        {"learning_rate", b.learning_rate},
        {"sigma_learning_rate", b.sigma_learning_rate},
        {"beta1", b.beta1},
        {"beta2", b.beta2},
        {"epsilon", b.epsilon},
        {"floor", b.floor},
        {"divergence_window", b.divergence_window},
        {"samples", c.bayes_samples},
        {"times", c.bayes_times},
        {"error_k", static_cast<int>(c.bayes_error_times.size())}}},
      {"tomo", {{"total_shots", c.tomo_total_shots}, {"k", c.tomo_k}}},
      {"compare",
       {{"event_time", c.event_time},
        {"gate", matrix_to_json(c.gate)},
        {"t_max", c.compare_t_max},
        {"k", c.compare_k},
        {"rho_s0_bloch", bloch_json(c.rho_s0)},
        {"error_models", models}}},
  };
}

namespace {

class Runner {
 public:
  Runner(RunConfig cfg, bool quiet) : cfg_(std::move(cfg)), quiet_(quiet), seeds_(cfg_.seed) {
    fs::create_directories(cfg_.out);
    if (cfg_.train_path.empty()) cfg_.train_path = path("train.jsonl");
    if (cfg_.val_path.empty()) cfg_.val_path = path("val.jsonl");
    if (cfg_.model_path.empty()) cfg_.model_path = path("model.json");
    cfg_.train.seed = cfg_.seed;
    cfg_.bayes.seed = cfg_.seed;
  }

  void write_resolved(const std::string& command) const {
    Json j = resolved_config(cfg_);
    j["command"] = command;
    write_json_file(j, path("resolved_config_" + command + ".json"));
  }

  int generate();
  int train();
  int validate();
  int predict();
  int bayes();
  int tomo();
  int compare();

 private:
  std::string path(const std::string& name) const { return (fs::path(cfg_.out) / name).string(); }
  void log(const std::string& msg) const {
    if (!quiet_) std::cerr << msg << std::endl;
  }
  std::ofstream open_csv(const std::string& name) const {
    std::ofstream out(path(name));
    if (!out) throw DataError("cannot open " + path(name) + " for writing");
    out.precision(17);
    return out;
  }

  RunConfig cfg_;
  bool quiet_;
  SeedSplitter seeds_;
};

int Runner::generate() {
  Rng rng = seeds_.stream("datagen");
  const Dataset all = generate_trajectory(cfg_.collision, static_cast<std::size_t>(2 * cfg_.generate_n), rng, cfg_.seed);
  auto [train, val] = split_dataset(all, static_cast<std::size_t>(cfg_.generate_n));
  save_dataset(train, cfg_.train_path);
  save_dataset(val, cfg_.val_path);
  long zeros = 0;
  for (const auto& r : all.records) zeros += r.outcome == 0;
  const double n = static_cast<double>(all.size());
  const double f = zeros / n;
  std::cout.precision(6);
  std::cout << "generated " << all.size() << " measurements (" << train.size() << " train, " << val.size()
            << " validation); outcome-0 frequency " << f << " +/- " << std::sqrt(0.25 / n)
            << " (random bases give 0.5)\n";
  return kExitOk;
}

int Runner::train() {
  const Dataset train = load_dataset(cfg_.train_path);
  std::optional<Dataset> val;
  if (fs::exists(cfg_.val_path)) val = load_dataset(cfg_.val_path);
  const Dataset* vp = val ? &*val : nullptr;
  auto progress = [this](const LearningCurveRecord& r) {
    if (r.epoch % 100 == 0 || r.epoch == 1) {
      std::ostringstream os;
      os.precision(6);
      os << "  epoch " << r.epoch << " train " << r.train_ll_per_step;
      if (r.val_ll_per_step) os << " val " << *r.val_ll_per_step;
      log(os.str());
    }
  };

  if (!cfg_.resume.empty()) {
    const MarkovianEmbedding start = load_model(cfg_.resume);
    if (start.dims().d_s != train.d_s) throw DimensionError("resume model d_s does not match the dataset");
    TrainConfig tc = cfg_.train;
    tc.d_er = start.dims().d_er;
    Rng batch_rng = seeds_.stream("batch", 1000);
    log("resuming from " + cfg_.resume);
    FitResult r = fit_single(train, vp, start, tc, batch_rng, progress);
    save_model(r.model, cfg_.model_path);
    r.curve.write_csv(path("curves.csv"));
    std::cout << "resumed model: train " << r.train_ll_per_step << " per step\n";
    return kExitOk;
  }

  std::ofstream table = open_csv("selection.csv");
  table << "d_er,train_ll_per_step,val_ll_per_step\n";
  int best_d = 0;
  double best_val = -INFINITY;
  for (int d_er : cfg_.d_er_candidates) {
    TrainConfig tc = cfg_.train;
    tc.d_er = d_er;
    log("training d_er = " + std::to_string(d_er));
    FitResult r = fit(train, vp, DimSpec::make(train.d_s, d_er), tc, progress);
    const std::string tag = "_d" + std::to_string(d_er);
    save_model(r.model, path("model" + tag + ".json"));
    r.curve.write_csv(path("curves" + tag + ".csv"));
    const double v = vp ? conditional_validation_ll(r.model, train, *vp) : NAN;
    table << d_er << ',' << r.train_ll_per_step << ',';
    if (vp) table << v;
    table << '\n';
    std::cout << "d_er " << d_er << ": train " << r.train_ll_per_step << " per step";
    if (vp) std::cout << ", validation " << v << " per step";
    std::cout << '\n';
    const double score = vp ? v : r.train_ll_per_step;
    if (best_d == 0 || score > best_val || (score == best_val && d_er < best_d)) {
      best_val = score;
      best_d = d_er;
    }
  }
  fs::copy_file(path("model_d" + std::to_string(best_d) + ".json"), cfg_.model_path,
                fs::copy_options::overwrite_existing);
  std::cout << "selected d_er = " << best_d << " -> " << cfg_.model_path << '\n';
  return kExitOk;
}

int Runner::validate() {
  const Dataset train = load_dataset(cfg_.train_path);
  const Dataset val = load_dataset(cfg_.val_path);
  std::vector<std::string> models = cfg_.validate_models;
  if (models.empty()) models.push_back(cfg_.model_path);
  std::ofstream table = open_csv("validation.csv");
  table << "model,d_er,train_ll_per_step,val_ll_per_step\n";
  std::string best;
  double best_val = -INFINITY;
  int best_d = 0;
  for (const auto& m : models) {
    const MarkovianEmbedding model = load_model(m);
    if (model.dims().d_s != train.d_s) throw DimensionError(m + ": model d_s does not match the dataset");
    const double tr = log_likelihood(model, train) / static_cast<double>(train.size());
    const double v = conditional_validation_ll(model, train, val);
    table << m << ',' << model.dims().d_er << ',' << tr << ',' << v << '\n';
    std::cout << m << " (d_er " << model.dims().d_er << "): train " << tr << ", validation " << v << " per step\n";
    if (v > best_val || (v == best_val && model.dims().d_er < best_d)) {
      best_val = v;
      best = m;
      best_d = model.dims().d_er;
    }
  }
  std::cout << "best on validation: " << best << '\n';
  return kExitOk;
}

int Runner::predict() {
  const MarkovianEmbedding model = load_model(cfg_.model_path);
  if (model.dims().d_s != 2) throw DimensionError("predict reports Bloch vectors and needs d_s = 2");
  const GeneratorSuperoperator gen = extract_generator(model);
  const CMatrix rho_er = equilibrium_er_state(gen, model.dims());
  const auto states = predict_dynamics(gen, model.dims(), cfg_.rho_s0, rho_er, cfg_.predict_times);
  std::ofstream out = open_csv("predict.csv");
  out << "t,x,y,z\n";
  for (std::size_t k = 0; k < states.size(); ++k) {
    const Json b = bloch_json(states[k]);
    out << cfg_.predict_times[k] << ',' << b[0].get<double>() << ',' << b[1].get<double>() << ','
        << b[2].get<double>() << '\n';
  }
  std::cout << "wrote " << states.size() << " predicted states to " << path("predict.csv") << '\n';
  return kExitOk;
}

int Runner::bayes() {
  const Dataset train = load_dataset(cfg_.train_path);
  const MarkovianEmbedding model = load_model(cfg_.model_path);
  if (model.dims().d_s != train.d_s) throw DimensionError("model d_s does not match the dataset");
  log("fitting the variational posterior");
  const PosteriorFit fitres = fit_posterior(train, model, cfg_.bayes);
  save_posterior(fitres.posterior, path("posterior.json"));
  {
    std::ofstream tr = open_csv("bayes_trace.csv");
    tr << "step,objective\n";
    for (std::size_t k = 0; k < fitres.trace.objective.size(); ++k) tr << k + 1 << ',' << fitres.trace.objective[k] << '\n';
  }
  Rng rng = seeds_.stream("bayes", 1);
  const PosteriorDynamics dyn = sample_dynamics(fitres.posterior, cfg_.rho_s0, cfg_.bayes_times, cfg_.bayes_samples, rng);
  dyn.write_csv(path("posterior_dynamics.csv"));
  Rng rng2 = seeds_.stream("bayes", 2);
  const double err = bayes_channel_error(fitres.posterior, cfg_.bayes_error_times, cfg_.bayes_samples, rng2);
  const RVector sd = fitres.posterior.std_params();
  RVector sorted = sd;
  std::sort(sorted.data(), sorted.data() + sorted.size());
  const Json report{{"median_std", sorted[sorted.size() / 2]},
                    {"max_entry_std", dyn.max_entry_std()},
                    {"bayes_channel_error", err},
                    {"floor_hits", fitres.trace.floor_hits},
                    {"rejected_draws", dyn.rejected}};
  write_json_file(report, path("bayes_report.json"));
  std::cout << report.dump(1) << '\n';
  return kExitOk;
}

int Runner::tomo() {
  std::optional<MarkovianEmbedding> model;
  if (fs::exists(cfg_.model_path)) model = load_model(cfg_.model_path);
  std::ofstream out = open_csv("tomo_errors.csv");
  out << "k,shots_per_channel,tomography_error" << (model ? ",embedding_error" : "") << '\n';
  std::vector<double> ks, errs;
  for (int k : cfg_.tomo_k) {
    const auto exact = exact_equilibrium_maps(cfg_.collision, int_times_1_to(k));
    const TomographyDesign design = TomographyDesign::qubit(cfg_.tomo_total_shots / k);
    std::vector<ChoiMatrix> tomo;
    for (int i = 0; i < k; ++i) {
      Rng rng = seeds_.stream("tomo", static_cast<std::uint64_t>(k) * 100000 + i);
      const ChoiMatrix& target = exact[i];
      const TomographyCounts counts =
          simulate_tomography_counts([&target](const CMatrix& rho) { return target.apply(rho); }, design, rng);
      TomographyFit f = tomography_mle(counts, design);
      f.choi.time = target.time;
      tomo.push_back(f.choi);
    }
    const double e = average_choi_error(tomo, exact);
    ks.push_back(k);
    errs.push_back(e);
    out << k << ',' << design.shots << ',' << e;
    if (model) out << ',' << average_choi_error(equilibrium_dynamics_maps(*model, times_1_to(k)), exact);
    out << '\n';
    std::cout << "K = " << k << ": tomography error " << e << '\n';
  }
  if (ks.size() >= 2) std::cout << "log-log slope of tomography error vs K: " << loglog_slope(ks, errs) << '\n';
  return kExitOk;
}

int Runner::compare() {
  const MarkovianEmbedding model = load_model(cfg_.model_path);
  if (model.dims().d_s != 2) throw DimensionError("compare needs a qubit model");
  const GeneratorSuperoperator gen = extract_generator(model);
  const CMatrix rho_er = equilibrium_er_state(gen, model.dims());
  const CollisionModelConfig truth = equilibrium_start(cfg_.collision, cfg_.rho_s0);
  const int event = static_cast<int>(cfg_.event_time);
  std::vector<int> it;
  std::vector<double> t;
  for (int k = 0; k <= cfg_.compare_t_max; ++k) {
    it.push_back(k);
    t.push_back(k);
  }
  const auto exact = exact_controlled_dynamics(truth, event, cfg_.gate, it);
  const auto embed = predict_with_control(gen, model.dims(), cfg_.rho_s0, rho_er, {{cfg_.event_time, cfg_.gate}}, t);
  const auto maps = exact_maps(exact_reference_dynamics(truth, it));
  const auto concat = concatenation_prediction(maps, {cfg_.event_time, cfg_.gate}, cfg_.rho_s0, t);

  std::ofstream out = open_csv("compare.csv");
  out << "t,exact_x,exact_y,exact_z,embedding_x,embedding_y,embedding_z,concatenation_x,concatenation_y,"
         "concatenation_z,concatenation_min_eigenvalue\n";
  double d_embed = 0.0, d_concat = 0.0;
  int count = 0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    out << t[k];
    for (const CMatrix* s : {&exact[k], &embed[k], &concat.states[k]}) {
      const Json b = bloch_json(*s);
      for (int c = 0; c < 3; ++c) out << ',' << b[c].get<double>();
    }
    out << ',' << concat.min_eigenvalues[k] << '\n';
    if (t[k] > cfg_.event_time) {
      d_embed += 0.5 * qla::trace_norm(embed[k] - exact[k]);
      d_concat += 0.5 * qla::trace_norm(concat.states[k] - exact[k]);
      ++count;
    }
  }
  if (count > 0) {
    d_embed /= count;
    d_concat /= count;
  }

  // Trace distance between the evolutions of |0> and |1>.
  const CMatrix r0 = qla::projector(CVector::Unit(2, 0));
  const CMatrix r1 = qla::projector(CVector::Unit(2, 1));
  const auto learned_td = trace_distance_trajectory(predict_dynamics(gen, model.dims(), r0, rho_er, t),
                                                    predict_dynamics(gen, model.dims(), r1, rho_er, t));
  const auto exact_td = trace_distance_trajectory(exact_reference_dynamics(equilibrium_start(cfg_.collision, r0), it).states,
                                                  exact_reference_dynamics(equilibrium_start(cfg_.collision, r1), it).states);

  Json errors = Json::array();
  for (int k : cfg_.compare_k) {
    const double e = average_choi_error(equilibrium_dynamics_maps(model, times_1_to(k)),
                                        exact_equilibrium_maps(cfg_.collision, int_times_1_to(k)));
    errors.push_back({{"k", k}, {"error", e}});
  }
  Json report{{"mean_trace_distance_after_gate", {{"embedding", d_embed}, {"concatenation", d_concat}}},
              {"concatenation_positive", std::all_of(concat.positive.begin(), concat.positive.end(), [](bool b) { return b; })},
              {"non_markovian", {{"learned", is_non_monotonic(learned_td)}, {"exact", is_non_monotonic(exact_td)}}},
              {"choi_error", errors}};

  if (!cfg_.error_models.empty()) {
    const int k = cfg_.compare_k.empty() ? 20 : cfg_.compare_k.back();
    const auto ex = exact_equilibrium_maps(cfg_.collision, int_times_1_to(k));
    std::ofstream tab = open_csv("error_vs_n.csv");
    tab << "n,error\n";
    std::vector<double> ns, es;
    for (const auto& e : cfg_.error_models) {
      const double err = average_choi_error(equilibrium_dynamics_maps(load_model(e.path), times_1_to(k)), ex);
      tab << e.n << ',' << err << '\n';
      ns.push_back(static_cast<double>(e.n));
      es.push_back(err);
    }
    if (ns.size() >= 2) report["error_vs_n_slope"] = loglog_slope(ns, es);
  }
  write_json_file(report, path("compare_report.json"));
  std::cout << report.dump(1) << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Learning Markovian embeddings of non-Markovian quantum dynamics from sequential measurements"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  std::int64_t seed = -1;
  bool quiet = false;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"generate", "simulate the collision model and write train/validation datasets"},
      {"train", "fit embeddings for each candidate d_ER and select on validation data"},
      {"validate", "evaluate saved models on the validation set"},
      {"predict", "predict the unmeasured system dynamics of a model"},
      {"bayes", "variational posterior, posterior bands and Bayesian channel error"},
      {"tomo", "full-process-tomography baseline versus the number of channels"},
      {"compare", "coherent control and channel errors against the exact collision model"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--seed", seed, "global seed (overrides the config)")->check(CLI::NonNegativeNumber);
    sub->add_flag("--quiet", quiet, "suppress progress output");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    RunConfig cfg;
    try {
      cfg = parse_run_config(config_path.empty() ? Json::object() : read_json_file(config_path));
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
    if (!out_dir.empty()) cfg.out = out_dir;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    Runner runner(cfg, quiet);
    runner.write_resolved(command);
    if (command == "generate") return runner.generate();
    if (command == "train") return runner.train();
    if (command == "validate") return runner.validate();
    if (command == "predict") return runner.predict();
    if (command == "bayes") return runner.bayes();
    if (command == "tomo") return runner.tomo();
    return runner.compare();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const DimensionError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace membed
