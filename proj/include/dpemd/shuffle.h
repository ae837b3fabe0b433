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

// Simulation of the pyramid mechanism in the shuffle model.
//
// Each client scales its cell sums by B, rounds down, adds its share of
// discrete Laplace noise and splits every coordinate into r additive shares
// modulo q. The analyzer only sees the multiset of (coordinate, share)
// messages; summing shares per coordinate recovers the noisy aggregate.

#ifndef DPEMD_SHUFFLE_H_
#define DPEMD_SHUFFLE_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "dpemd/aggregator.h"
#include "dpemd/distribution.h"
#include "dpemd/grid.h"
#include "dpemd/noise.h"
#include "dpemd/pyramid.h"

namespace dpemd {

inline constexpr int kMaxShares = 1 << 20;

// ceil((2 ln(e^eps + 1) + 2 ln(m / delta) + ln q) / ln n + 1).
absl::StatusOr<int> ComputeShareCount(double eps, double delta, int64_t m,
                                      int64_t q, int64_t n);

// Number of cells at levels first_level..levels.
int64_t MeasurementCount(int levels, int first_level = 0);

struct ShuffleConfig {
  double eps = 1.0;
  double delta = 1e-5;
  int64_t scale = 256;  // B
  int64_t w = 20;
  AggregationMode mode = AggregationMode::kExperiment;
  std::optional<double> gamma;
  // The modulus is scale * n * modulus_headroom.
  int64_t modulus_headroom = 1;
  uint64_t seed = 0;
};

struct ShuffleParams {
  int64_t scale = 0;
  int64_t users = 0;
  int64_t modulus = 0;
  int64_t measurements = 0;
  int shares = 0;
  double eps = 0.0;
  double delta = 0.0;
  NoiseSchedule schedule;
  // First coordinate of each level; unmeasured levels are empty ranges.
  std::vector<int64_t> level_offset;

  int levels() const { return schedule.levels(); }
};

absl::StatusOr<ShuffleParams> MakeShuffleParams(const Grid& grid,
                                                int64_t users,
                                                const ShuffleConfig& config);

struct ShuffleMessage {
  int64_t coord = 0;
  int64_t share = 0;

  friend bool operator==(const ShuffleMessage&,
                         const ShuffleMessage&) = default;
};

struct EncodedClient {
  std::vector<ShuffleMessage> messages;
  // The noisy scaled vector z' before splitting, for verification.
  std::vector<int64_t> noisy;
};

// floor(B * P_i p) at every measured level, plus a two-sided Polya noise
// share per coordinate, split into r uniform shares mod q.
absl::StatusOr<EncodedClient> EncodeClient(const SparseDist& p,
                                           const ShuffleParams& params,
                                           Rng& rng);

// Sums shares per coordinate mod q, decodes into (-q/2, q/2], divides by B
// and applies the per-level 2^-i scaling.
absl::StatusOr<PyramidVec> Analyze(std::span<const ShuffleMessage> messages,
                                   const ShuffleParams& params);

// Modular residue decoded into the symmetric range (-q/2, q/2].
int64_t CenterResidue(int64_t residue, int64_t modulus);

struct Communication {
  int64_t scale = 0;
  int shares = 0;
  int64_t measurements = 0;
  int64_t modulus = 0;
  int64_t messages_per_user = 0;
  int bits_per_message = 0;
  int64_t bits_per_user = 0;
  // Bits packed back to back, rounded up to whole bytes.
  int64_t bytes_per_user = 0;
};

Communication CommunicationCost(const ShuffleParams& params);

struct ShuffleRun {
  PyramidVec measurements;
  AggregateResult result;
  // Coordinates whose true noisy sum fell outside (-q/2, q/2].
  int64_t wraparound_violations = 0;
  Communication communication;
};

// Runs every client, the shuffler and the analyzer, then reconstructs.
// With `materialize` set, all messages are stored and permuted before
// analysis; otherwise each client's messages are folded in as produced,
// which gives the same sums.
absl::StatusOr<ShuffleRun> SimulateShuffle(std::span<const SparseDist> dists,
                                           const ShuffleConfig& config,
                                           bool materialize = false);

}  // namespace dpemd

#endif  // DPEMD_SHUFFLE_H_
