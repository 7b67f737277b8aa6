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

#include <stdexcept>
#include <string>

namespace membed {

// Base class for every error raised by the library. The CLI maps the
// concrete subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes or subsystem dimensions that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Eigensolver failure, branch-cut proximity, ill-conditioning, divergence.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// The model assigns probability zero to an observed outcome.
class ZeroProbabilityError : public NumericalError {
 public:
  ZeroProbabilityError(std::size_t step, const std::string& what)
      : NumericalError(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

// Malformed or inconsistent input data (datasets, models, matrices).
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace membed
