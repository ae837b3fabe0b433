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

#include "dpemd/noise.h"

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <random>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "boost/random/gamma_distribution.hpp"
#include "boost/random/normal_distribution.hpp"
#include "boost/random/poisson_distribution.hpp"

namespace dpemd {

Rng::Rng(RngSeed seed) {
  std::seed_seq seq{static_cast<uint32_t>(seed.seed),
                    static_cast<uint32_t>(seed.seed >> 32),
                    static_cast<uint32_t>(seed.stream),
                    static_cast<uint32_t>(seed.stream >> 32)};
  engine_.seed(seq);
}

double Rng::Uniform() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::Laplace(double b) {
  const double u = Uniform() - 0.5;
  const double mag = -b * std::log1p(-2.0 * std::fabs(u));
  return u < 0 ? -mag : mag;
}

double Rng::StandardNormal() {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  return dist(engine_);
}

int64_t Rng::Polya(double r, double p) {
  boost::random::gamma_distribution<double> gamma(r, p / (1.0 - p));
  const double lambda = gamma(engine_);
  if (!(lambda > 0.0)) return 0;
  boost::random::poisson_distribution<int64_t, double> poisson(lambda);
  return poisson(engine_);
}

int64_t Rng::DiscreteLaplaceShare(int64_t n, double eps) {
  const double r = 1.0 / static_cast<double>(n);
  const double p = std::exp(-eps);
  const int64_t plus = Polya(r, p);
  const int64_t minus = Polya(r, p);
  return plus - minus;
}

uint64_t Rng::Below(uint64_t bound) {
  // Rejection keeps the result exactly uniform.
  const uint64_t limit =
      std::numeric_limits<uint64_t>::max() -
      std::numeric_limits<uint64_t>::max() % bound;
  uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

int PeakLevel(int64_t w) {
  int q = 0;
  while (q < 31 && (int64_t{1} << (2 * (q + 1))) <= w) ++q;
  return q;
}

absl::StatusOr<NoiseSchedule> BudgetSchedule(double eps, int levels,
                                             int64_t w, double gamma,
                                             int first_level) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    return absl::InvalidArgumentError(absl::StrCat("eps must be positive: ",
                                                   eps));
  }
  if (w < 1) return absl::InvalidArgumentError("w must be at least 1");
  if (!(gamma > 0.5 && gamma < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("gamma must lie in (0.5, 1): ", gamma));
  }
  if (levels < 0 || first_level < 0 || first_level > levels) {
    return absl::InvalidArgumentError(absl::StrCat(
        "bad level range: first_level=", first_level, " levels=", levels));
  }
  NoiseSchedule out;
  out.gamma = gamma;
  out.q_level = PeakLevel(w);
  out.first_level = first_level;
  out.total = eps;
  out.epsilons.assign(levels + 1, 0.0);

  long double z = 0;
  for (int i = first_level; i <= levels; ++i) {
    z += std::pow(static_cast<long double>(gamma), std::abs(i - out.q_level));
  }
  long double assigned = 0;
  int peak = first_level;
  for (int i = first_level; i <= levels; ++i) {
    const long double weight =
        std::pow(static_cast<long double>(gamma), std::abs(i - out.q_level));
    out.epsilons[i] = static_cast<double>(weight * eps / z);
    assigned += out.epsilons[i];
    if (out.epsilons[i] > out.epsilons[peak]) peak = i;
  }
  // Push the rounding residue into the largest budget so the sum is exact
  // to within one ulp of eps.
  out.epsilons[peak] += static_cast<double>(eps - assigned);
  return out;
}

}  // namespace dpemd
