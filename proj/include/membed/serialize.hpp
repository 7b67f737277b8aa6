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

// JSON and JSON Lines persistence: models, datasets, posteriors, Choi
// matrices and collision-model configurations. Complex matrices are arrays of
// rows, each row an array of [re, im] pairs.

#include <string>

#include "json.hpp"

#include "membed/assess.hpp"
#include "membed/bayes.hpp"
#include "membed/datagen.hpp"
#include "membed/embedding.hpp"

namespace membed {

using Json = nlohmann::json;

Json matrix_to_json(const CMatrix& m);
// Accepts the nested row form, or a flat row-major list of pairs when the
// expected shape is given.
CMatrix matrix_from_json(const Json& j, const std::string& what, int rows = -1, int cols = -1);
Json real_vector_to_json(const RVector& v);
RVector real_vector_from_json(const Json& j, const std::string& what);

Json model_to_json(const MarkovianEmbedding& model);
MarkovianEmbedding model_from_json(const Json& j);
void save_model(const MarkovianEmbedding& model, const std::string& path);
MarkovianEmbedding load_model(const std::string& path);

// Header line {"tau","d_s","seed","config_hash"} then one record per line.
void save_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(const std::string& path);

Json posterior_to_json(const VariationalPosterior& post);
VariationalPosterior posterior_from_json(const Json& j);
void save_posterior(const VariationalPosterior& post, const std::string& path);
VariationalPosterior load_posterior(const std::string& path);

Json choi_to_json(const ChoiMatrix& c);
ChoiMatrix choi_from_json(const Json& j);

Json collision_config_to_json(const CollisionModelConfig& cfg);
// Missing keys take the defaults; unknown keys are a ConfigError.
CollisionModelConfig collision_config_from_json(const Json& j);

Json read_json_file(const std::string& path);
void write_json_file(const Json& j, const std::string& path);

}  // namespace membed
