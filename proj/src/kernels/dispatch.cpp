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

#include <atomic>
#include <cstdlib>
#include <string_view>

#include "membed/kernels.hpp"

namespace membed::kernels {

namespace {

const KernelTable* detect() {
  if (const char* env = std::getenv("MEMBED_SIMD"); env && std::string_view(env) == "scalar")
    return &scalar_table();
  if (const KernelTable* t = avx2_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*> g_override{nullptr};

}  // namespace

const KernelTable& active() {
  if (const KernelTable* t = g_override.load(std::memory_order_acquire)) return *t;
  static const KernelTable* selected = detect();
  return *selected;
}

void set_active(const KernelTable* table) { g_override.store(table, std::memory_order_release); }

}  // namespace membed::kernels
