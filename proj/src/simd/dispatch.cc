// Copyright 2026 The DPEMD Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <string_view>

#include "dpemd/simd/kernels.h"

namespace dpemd::simd {
namespace {

const KernelTable& SelectKernels() {
  const char* forced = std::getenv("DPEMD_SIMD");
  if (forced != nullptr && std::string_view(forced) == "scalar") {
    return ScalarKernels();
  }
  if (const KernelTable* avx2 = Avx2Kernels(); avx2 != nullptr) return *avx2;
  return ScalarKernels();
}

}  // namespace

const KernelTable& ActiveKernels() {
  static const KernelTable& table = SelectKernels();
  return table;
}

void Pool2x2Grid(std::span<const double> in, size_t width,
                 std::span<double> out) {
  const size_t half = width / 2;
  const KernelTable& kernels = ActiveKernels();
  for (size_t row = 0; row < half; ++row) {
    const double* top = in.data() + 2 * row * width;
    kernels.pool2x2(top, top + width, out.data() + row * half, half);
  }
}

}  // namespace dpemd::simd
