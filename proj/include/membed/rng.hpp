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

#include <cstdint>
#include <string_view>

#include "membed/qla.hpp"

namespace membed {

// Named, independent random streams derived from one global seed. A stream's
// seed depends only on (global seed, name, index), so adding draws to one
// stage never shifts another.
class SeedSplitter {
 public:
  explicit SeedSplitter(std::uint64_t global_seed) : global_(global_seed) {}

  std::uint64_t seed_for(std::string_view stream, std::uint64_t index = 0) const;
  Rng stream(std::string_view stream, std::uint64_t index = 0) const {
    return Rng(seed_for(stream, index));
  }
  std::uint64_t global_seed() const { return global_; }

 private:
  std::uint64_t global_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);

}  // namespace membed
