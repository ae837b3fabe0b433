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

// Seeded noise sources and the per-level privacy budget schedule.

#ifndef DPEMD_NOISE_H_
#define DPEMD_NOISE_H_

#include <cstdint>
#include <random>
#include <vector>

#include "absl/status/statusor.h"

namespace dpemd {

struct RngSeed {
  uint64_t seed = 0;
  uint64_t stream = 0;
};

// A single random stream. Draws are a deterministic function of the seed,
// the stream id and the number of earlier draws, on every platform: the
// engine is std::mt19937_64 and every distribution is implemented either
// here or in Boost.Random, whose algorithms are fixed per release.
class Rng {
 public:
  explicit Rng(RngSeed seed);

  uint64_t Bits() { return engine_(); }
  // Uniform on the open interval (0, 1), 53 random bits.
  double Uniform();
  // Laplace with mean 0 and scale b > 0, by inverse CDF.
  double Laplace(double b);
  double StandardNormal();
  // Negative binomial with real shape r > 0 and success parameter p in
  // (0, 1), drawn as Poisson(Gamma(r, p / (1 - p))). Mean r p / (1 - p).
  int64_t Polya(double r, double p);
  // X+ - X- with X+, X- independent Polya(1 / n, e^-eps). The sum of n
  // independent shares is discrete Laplace with parameter e^-eps.
  int64_t DiscreteLaplaceShare(int64_t n, double eps);
  // Uniform integer in [0, bound).
  uint64_t Below(uint64_t bound);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Largest q with 4^q <= w, i.e. floor(log2(sqrt(w))).
int PeakLevel(int64_t w);

struct NoiseSchedule {
  // One entry per level 0..levels. Levels below `first_level` are not
  // measured and hold 0.
  std::vector<double> epsilons;
  double gamma = 0.0;
  int q_level = 0;
  int first_level = 0;
  double total = 0.0;

  int levels() const { return static_cast<int>(epsilons.size()) - 1; }
  bool Measured(int level) const { return level >= first_level; }
  // Laplace scale 1 / eps_i for a measured level.
  double LaplaceScale(int level) const { return 1.0 / epsilons[level]; }
};

inline constexpr double kTheoryGamma = 0.8;
inline constexpr double kExperimentGamma = 0.70710678118654752440;

// eps_i proportional to gamma^|i - q| over levels first_level..levels,
// normalized so that the measured budgets sum to `eps`. Requires eps > 0,
// w >= 1, 0.5 < gamma < 1 and 0 <= first_level <= levels.
absl::StatusOr<NoiseSchedule> BudgetSchedule(double eps, int levels,
                                             int64_t w, double gamma,
                                             int first_level = 0);

}  // namespace dpemd

#endif  // DPEMD_NOISE_H_
