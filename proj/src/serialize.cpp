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

#include "membed/serialize.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "membed/errors.hpp"

namespace membed {

namespace {

const Json& require_key(const Json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) throw DataError(what + ": missing key \"" + key + "\"");
  return j.at(key);
}

template <typename T>
T get_as(const Json& j, const std::string& what) {
  try {
    return j.get<T>();
  } catch (const Json::exception& e) {
    throw DataError(what + ": " + e.what());
  }
}

cplx pair_value(const Json& p, const std::string& what) {
  if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
    throw DataError(what + ": matrix entries must be [re, im] pairs");
  return {p[0].get<double>(), p[1].get<double>()};
}

}  // namespace

Json matrix_to_json(const CMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

CMatrix matrix_from_json(const Json& j, const std::string& what, int rows, int cols) {
  if (!j.is_array() || j.empty()) throw DataError(what + ": matrix must be a non-empty array");
  const bool flat = j[0].is_array() && j[0].size() == 2 && j[0][0].is_number();
  if (flat) {
    if (rows < 0 || cols < 0 || j.size() != static_cast<std::size_t>(rows) * cols)
      throw DataError(what + ": flat matrix of unexpected length");
    CMatrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = pair_value(j[static_cast<std::size_t>(r) * cols + c], what);
    return m;
  }
  const auto nr = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array()) throw DataError(what + ": matrix rows must be arrays");
  const auto nc = static_cast<Eigen::Index>(j[0].size());
  if ((rows >= 0 && nr != rows) || (cols >= 0 && nc != cols)) throw DimensionError(what + ": matrix has wrong shape");
  CMatrix m(nr, nc);
  for (Eigen::Index r = 0; r < nr; ++r) {
    const Json& row = j[r];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != nc) throw DataError(what + ": ragged matrix rows");
    for (Eigen::Index c = 0; c < nc; ++c) m(r, c) = pair_value(row[c], what);
  }
  return m;
}

Json real_vector_to_json(const RVector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

RVector real_vector_from_json(const Json& j, const std::string& what) {
  const auto v = get_as<std::vector<double>>(j, what);
  return Eigen::Map<const RVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Json model_to_json(const MarkovianEmbedding& model) {
  const DimSpec& d = model.dims();
  return Json{{"dims", {{"d_s", d.d_s}, {"d_er", d.d_er}, {"d_a", d.d_a}}},
              {"tau", model.tau()},
              {"h", matrix_to_json(model.hamiltonian())},
              {"rho0_ser", matrix_to_json(model.rho0_ser())},
              {"rho_a", matrix_to_json(model.rho_a())}};
}

MarkovianEmbedding model_from_json(const Json& j) {
  const std::string what = "model";
  const Json& dj = require_key(j, "dims", what);
  DimSpec dims;
  dims.d_s = get_as<int>(require_key(dj, "d_s", what), what);
  dims.d_er = get_as<int>(require_key(dj, "d_er", what), what);
  dims.d_a = get_as<int>(require_key(dj, "d_a", what), what);
  dims.validate();
  const double tau = get_as<double>(require_key(j, "tau", what), what);
  const int n = dims.d_total();
  const int ds = dims.d_ser();
  return MarkovianEmbedding(dims, tau, matrix_from_json(require_key(j, "h", what), "model h", n, n),
                            matrix_from_json(require_key(j, "rho0_ser", what), "model rho0_ser", ds, ds),
                            matrix_from_json(require_key(j, "rho_a", what), "model rho_a", dims.d_a, dims.d_a));
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_json_file(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << j.dump(1) << '\n';
  if (!out) throw DataError("failed writing " + path);
}

void save_model(const MarkovianEmbedding& model, const std::string& path) { write_json_file(model_to_json(model), path); }

MarkovianEmbedding load_model(const std::string& path) { return model_from_json(read_json_file(path)); }

void save_dataset(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << Json{{"tau", data.tau}, {"d_s", data.d_s}, {"seed", data.provenance.seed},
              {"config_hash", data.provenance.config_hash}}
             .dump()
      << '\n';
  for (const auto& r : data.records)
    out << Json{{"step", r.step}, {"basis", matrix_to_json(r.basis)}, {"outcome", r.outcome}}.dump() << '\n';
  if (!out) throw DataError("failed writing " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": missing header line");
  Dataset data;
  try {
    const Json h = Json::parse(line);
    const std::string what = path + " header";
    data.tau = get_as<double>(require_key(h, "tau", what), what);
    data.d_s = get_as<int>(require_key(h, "d_s", what), what);
    data.provenance.seed = get_as<std::uint64_t>(require_key(h, "seed", what), what);
    data.provenance.config_hash = get_as<std::string>(require_key(h, "config_hash", what), what);
    long lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const std::string lw = path + ":" + std::to_string(lineno);
      const Json r = Json::parse(line);
      MeasurementRecord rec;
      rec.step = get_as<long>(require_key(r, "step", lw), lw);
      rec.basis = matrix_from_json(require_key(r, "basis", lw), lw, data.d_s, data.d_s);
      rec.outcome = get_as<int>(require_key(r, "outcome", lw), lw);
      data.records.push_back(std::move(rec));
    }
  } catch (const Json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  data.validate();
  return data;
}

Json posterior_to_json(const VariationalPosterior& post) {
  Json j = model_to_json(post.mean_model());
  j["kappa"] = real_vector_to_json(post.kappa);
  j["sigma"] = real_vector_to_json(post.sigma);
  j["varkappa"] = real_vector_to_json(post.varkappa);
  j["varsigma"] = real_vector_to_json(post.varsigma);
  return j;
}

VariationalPosterior posterior_from_json(const Json& j) {
  const MarkovianEmbedding like = model_from_json(j);
  const std::string what = "posterior";
  const RVector kappa = real_vector_from_json(require_key(j, "kappa", what), what);
  const RVector sigma = real_vector_from_json(require_key(j, "sigma", what), what);
  const RVector varkappa = real_vector_from_json(require_key(j, "varkappa", what), what);
  const RVector varsigma = real_vector_from_json(require_key(j, "varsigma", what), what);
  RVector mean(kappa.size() + varkappa.size());
  mean << kappa, varkappa;
  RVector sd(sigma.size() + varsigma.size());
  sd << sigma, varsigma;
  return VariationalPosterior::from_params(mean, sd, like);
}

void save_posterior(const VariationalPosterior& post, const std::string& path) {
  write_json_file(posterior_to_json(post), path);
}

VariationalPosterior load_posterior(const std::string& path) { return posterior_from_json(read_json_file(path)); }

Json choi_to_json(const ChoiMatrix& c) {
  return Json{{"source", to_string(c.source)}, {"time", c.time}, {"omega", matrix_to_json(c.omega)}};
}

ChoiMatrix choi_from_json(const Json& j) {
  ChoiMatrix c;
  c.omega = matrix_from_json(require_key(j, "omega", "choi"), "choi omega");
  c.time = get_as<double>(require_key(j, "time", "choi"), "choi time");
  const std::string s = get_as<std::string>(require_key(j, "source", "choi"), "choi source");
  c.source = s == "learned" ? ChoiSource::learned
             : s == "exact" ? ChoiSource::exact
             : s == "tomographic" ? ChoiSource::tomographic
                                  : ChoiSource::other;
  c.d_s();
  return c;
}

Json collision_config_to_json(const CollisionModelConfig& cfg) {
  return Json{{"hamiltonian", matrix_to_json(cfg.hamiltonian)},
              {"delta_t", cfg.delta_t},
              {"collisions_per_period", cfg.collisions_per_period},
              {"rho_r", matrix_to_json(cfg.rho_r)},
              {"rho_ss1_0", matrix_to_json(cfg.rho_ss1_0)}};
}

CollisionModelConfig collision_config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("collision config must be an object");
  static const std::set<std::string> known{"hamiltonian", "delta_t", "collisions_per_period", "rho_r", "rho_ss1_0"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ConfigError("collision config: unknown key \"" + key + "\"");
  CollisionModelConfig cfg = CollisionModelConfig::defaults();
  try {
    if (j.contains("hamiltonian")) cfg.hamiltonian = matrix_from_json(j["hamiltonian"], "collision hamiltonian", 8, 8);
    if (j.contains("delta_t")) cfg.delta_t = j["delta_t"].get<double>();
    if (j.contains("collisions_per_period")) cfg.collisions_per_period = j["collisions_per_period"].get<int>();
    if (j.contains("rho_r")) cfg.rho_r = matrix_from_json(j["rho_r"], "collision rho_r", 2, 2);
    if (j.contains("rho_ss1_0")) cfg.rho_ss1_0 = matrix_from_json(j["rho_ss1_0"], "collision rho_ss1_0", 4, 4);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("collision config: ") + e.what());
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

}  // namespace membed
