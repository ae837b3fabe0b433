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

#include "dpemd/shuffle.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "dpemd/reconstruct.h"

namespace dpemd {
namespace {

uint64_t ClientStream(int64_t client) {
  return (kShuffleStream << 32) + static_cast<uint64_t>(client);
}
constexpr uint64_t kShufflerStream = (kShuffleStream << 32) - 1;

int64_t Mod(int64_t x, int64_t q) {
  const int64_t r = x % q;
  return r < 0 ? r + q : r;
}

}  // namespace

absl::StatusOr<int> ComputeShareCount(double eps, double delta, int64_t m,
                                      int64_t q, int64_t n) {
  if (n < 2) return absl::InvalidArgumentError("need at least two users");
  if (!(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError("delta must lie in (0, 1)");
  }
  if (!(eps > 0.0) || m < 1 || q < 2) {
    return absl::InvalidArgumentError("eps, m and q must be positive");
  }
  // ln(e^eps + 1) without overflow.
  const double softplus = eps + std::log1p(std::exp(-eps));
  const double numer = 2.0 * softplus +
                       2.0 * std::log(static_cast<double>(m) / delta) +
                       std::log(static_cast<double>(q));
  const double r = std::ceil(numer / std::log(static_cast<double>(n)) + 1.0);
  if (!(r <= kMaxShares)) {
    return absl::ResourceExhaustedError(
        absl::StrCat("share count ", r, " exceeds ", kMaxShares));
  }
  return static_cast<int>(r);
}

int64_t MeasurementCount(int levels, int first_level) {
  int64_t total = 0;
  for (int i = std::max(first_level, 0); i <= levels; ++i) {
    total += static_cast<int64_t>(CellsAtLevel(i));
  }
  return total;
}

int64_t CenterResidue(int64_t residue, int64_t modulus) {
  const int64_t r = Mod(residue, modulus);
  return r > modulus / 2 ? r - modulus : r;
}

absl::StatusOr<ShuffleParams> MakeShuffleParams(const Grid& grid,
                                                int64_t users,
                                                const ShuffleConfig& config) {
  if (config.scale < 1) return absl::InvalidArgumentError("B must be >= 1");
  if (config.modulus_headroom < 1) {
    return absl::InvalidArgumentError("modulus headroom must be >= 1");
  }
  AggregationConfig central;
  central.eps = config.eps;
  central.w = config.w;
  central.mode = config.mode;
  central.gamma = config.gamma;
  absl::StatusOr<NoiseSchedule> schedule =
      ScheduleFor(central, grid.levels());
  if (!schedule.ok()) return schedule.status();

  ShuffleParams p;
  p.scale = config.scale;
  p.users = users;
  p.modulus = config.scale * users * config.modulus_headroom;
  p.eps = config.eps;
  p.delta = config.delta;
  p.measurements = MeasurementCount(grid.levels(), schedule->first_level);
  p.schedule = *std::move(schedule);
  absl::StatusOr<int> r =
      ComputeShareCount(p.eps, p.delta, p.measurements, p.modulus, users);
  if (!r.ok()) return r.status();
  p.shares = *r;
  p.level_offset.assign(grid.levels() + 2, 0);
  for (int i = 0; i <= grid.levels(); ++i) {
    p.level_offset[i + 1] =
        p.level_offset[i] +
        (p.schedule.Measured(i) ? static_cast<int64_t>(CellsAtLevel(i)) : 0);
  }
  return p;
}

absl::StatusOr<EncodedClient> EncodeClient(const SparseDist& p,
                                           const ShuffleParams& params,
                                           Rng& rng) {
  if (absl::Status s = CheckUnitMass(p); !s.ok()) return s;
  if (p.grid().levels() != params.levels()) {
    return absl::InvalidArgumentError("client grid does not match params");
  }
  const std::vector<std::vector<double>> cells =
      CellSumPyramid(p.grid(), p.ToDense());
  const double b = static_cast<double>(params.scale);
  const int64_t q = params.modulus;
  EncodedClient out;
  out.noisy.resize(params.measurements);
  out.messages.reserve(static_cast<size_t>(params.measurements) *
                       params.shares);
  for (int i = 0; i <= params.levels(); ++i) {
    if (!params.schedule.Measured(i)) continue;
    const double level_eps = params.schedule.epsilons[i] / b;
    for (size_t k = 0; k < cells[i].size(); ++k) {
      const int64_t coord = params.level_offset[i] + static_cast<int64_t>(k);
      const int64_t z = static_cast<int64_t>(std::floor(b * cells[i][k]));
      const int64_t noisy = z + rng.DiscreteLaplaceShare(params.users,
                                                         level_eps);
      out.noisy[coord] = noisy;
      int64_t partial = 0;
      for (int s = 0; s + 1 < params.shares; ++s) {
        const int64_t share =
            static_cast<int64_t>(rng.Below(static_cast<uint64_t>(q)));
        partial = (partial + share) % q;
        out.messages.push_back({coord, share});
      }
      out.messages.push_back({coord, Mod(noisy - partial, q)});
    }
  }
  return out;
}

namespace {

PyramidVec Decode(const std::vector<int64_t>& residues,
                  const ShuffleParams& params) {
  PyramidVec y(params.levels());
  const double b = static_cast<double>(params.scale);
  for (int i = 0; i <= params.levels(); ++i) {
    if (!params.schedule.Measured(i)) continue;
    std::span<double> out = y.level(i);
    const double scale = std::ldexp(1.0, -i);
    for (size_t k = 0; k < out.size(); ++k) {
      const int64_t v =
          CenterResidue(residues[params.level_offset[i] + k], params.modulus);
      out[k] = scale * static_cast<double>(v) / b;
    }
  }
  return y;
}

}  // namespace

absl::StatusOr<PyramidVec> Analyze(std::span<const ShuffleMessage> messages,
                                   const ShuffleParams& params) {
  std::vector<int64_t> residues(params.measurements, 0);
  for (const ShuffleMessage& m : messages) {
    if (m.coord < 0 || m.coord >= params.measurements) {
      return absl::InvalidArgumentError(
          absl::StrCat("message coordinate ", m.coord, " out of range"));
    }
    if (m.share < 0 || m.share >= params.modulus) {
      return absl::InvalidArgumentError(
          absl::StrCat("message share ", m.share, " out of range"));
    }
    residues[m.coord] = (residues[m.coord] + m.share) % params.modulus;
  }
  return Decode(residues, params);
}

Communication CommunicationCost(const ShuffleParams& params) {
  Communication c;
  c.scale = params.scale;
  c.shares = params.shares;
  c.measurements = params.measurements;
  c.modulus = params.modulus;
  c.messages_per_user = static_cast<int64_t>(params.shares) *
                        params.measurements;
  const uint64_t mq =
      static_cast<uint64_t>(params.measurements) *
      static_cast<uint64_t>(params.modulus);
  c.bits_per_message = mq <= 1 ? 0 : static_cast<int>(std::bit_width(mq - 1));
  c.bits_per_user = c.messages_per_user * c.bits_per_message;
  c.bytes_per_user = (c.bits_per_user + 7) / 8;
  return c;
}

absl::StatusOr<ShuffleRun> SimulateShuffle(std::span<const SparseDist> dists,
                                           const ShuffleConfig& config,
                                           bool materialize) {
  if (dists.empty()) return absl::InvalidArgumentError("no input users");
  const Grid& grid = dists[0].grid();
  for (const SparseDist& d : dists) {
    if (!(d.grid() == grid)) {
      return absl::InvalidArgumentError("users are on different grids");
    }
  }
  absl::StatusOr<ShuffleParams> params = MakeShuffleParams(
      grid, static_cast<int64_t>(dists.size()), config);
  if (!params.ok()) return params.status();
  const int64_t q = params->modulus;

  std::vector<int64_t> residues(params->measurements, 0);
  std::vector<int64_t> exact(params->measurements, 0);
  std::vector<ShuffleMessage> pool;
  for (size_t j = 0; j < dists.size(); ++j) {
    Rng rng({config.seed, ClientStream(static_cast<int64_t>(j))});
    absl::StatusOr<EncodedClient> enc = EncodeClient(dists[j], *params, rng);
    if (!enc.ok()) {
      return absl::Status(enc.status().code(),
                          absl::StrCat("client ", j, ": ",
                                       enc.status().message()));
    }
    for (size_t c = 0; c < exact.size(); ++c) exact[c] += enc->noisy[c];
    if (materialize) {
      pool.insert(pool.end(), enc->messages.begin(), enc->messages.end());
    } else {
      for (const ShuffleMessage& m : enc->messages) {
        residues[m.coord] = (residues[m.coord] + m.share) % q;
      }
    }
  }

  PyramidVec y(grid.levels());
  if (materialize) {
    Rng shuffler({config.seed, kShufflerStream});
    for (size_t i = pool.size(); i > 1; --i) {
      std::swap(pool[i - 1], pool[shuffler.Below(i)]);
    }
    absl::StatusOr<PyramidVec> analyzed = Analyze(pool, *params);
    if (!analyzed.ok()) return analyzed.status();
    y = *std::move(analyzed);
  } else {
    y = Decode(residues, *params);
  }
  int64_t violations = 0;
  for (int64_t v : exact) {
    if (CenterResidue(v, q) != v) ++violations;
  }

  ReconstructOptions options;
  options.w = config.w;
  options.start_level = params->schedule.first_level;
  absl::StatusOr<FitResult> fit = Reconstruct(grid, y, options);
  if (!fit.ok()) return fit.status();
  Normalized norm = Normalize(fit->estimate);
  ShuffleRun run{y,
                 AggregateResult{std::move(norm.dist),
                                 std::move(fit->estimate), y,
                                 params->schedule, norm.uniform_fallback,
                                 fit->objective, fit->pivots},
                 violations, CommunicationCost(*params)};
  return run;
}

}  // namespace dpemd
