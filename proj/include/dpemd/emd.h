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

// Exact Earth Mover's Distance under the L1 ground metric.
//
// Masses are converted to integer multiples of kMassQuantum and the
// resulting transportation problem is solved exactly by network simplex.
// Two formulations are used:
//
//  * Bipartite: one arc per (source, sink) support pair. Returns a plan.
//  * Lattice: a 4-neighbour grid graph over the bounding box of the support.
//    With L1 cost every optimal plan decomposes into monotone lattice paths,
//    so this has the same optimum with O(cells) arcs. It also handles the
//    unbalanced EMD norm through one slack node.

#ifndef DPEMD_EMD_H_
#define DPEMD_EMD_H_

#include <cstddef>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "dpemd/distribution.h"
#include "dpemd/grid.h"

namespace dpemd {

inline constexpr double kMassQuantum = 1e-9;
// Largest combined support handled by the bipartite formulation.
inline constexpr size_t kMaxTransportSupport = 2000;
// Largest lattice (bounding box cells) handled by the lattice formulation.
inline constexpr size_t kMaxLatticeCells = size_t{1} << 20;
// Per-unit price of mass created or destroyed in the EMD norm; the L1
// diameter of the unit square.
inline constexpr double kSlackPrice = 2.0;

struct TransportPlan {
  struct Move {
    GridPoint from;
    GridPoint to;
    double mass = 0.0;
  };
  std::vector<Move> moves;
  double cost = 0.0;
};

// Optimal transport between equal-mass distributions (relative tolerance
// 1e-9). Fails with ResourceExhausted above kMaxTransportSupport.
absl::StatusOr<TransportPlan> Emd(const SparseDist& p, const SparseDist& q);

// min over p, q >= 0, r with p - q + r = w and |p| = |q| of
// EMD(p, q) + 2 |r|_1, for a signed dense grid vector w.
absl::StatusOr<double> EmdNorm(const Grid& grid, std::span<const double> w);

// EMD between two equal-mass dense rasters of size width x height whose
// cells are `spacing` apart. The rasters need not be square or dyadic.
absl::StatusOr<double> LatticeEmd(std::span<const double> p,
                                  std::span<const double> q, size_t width,
                                  size_t height, double spacing);

// argmin over v >= 0 of EmdNorm(v - target), returned densely.
absl::StatusOr<std::vector<double>> NearestNonnegative(
    const Grid& grid, std::span<const double> target);

// Smallest EMD between x and any vector with at most k support points, by
// enumerating supports. Limited to grids of side <= 8 and k <= 2 unless x is
// already k-sparse.
absl::StatusOr<double> BestKSparseError(const SparseDist& x, int k);

}  // namespace dpemd

#endif  // DPEMD_EMD_H_
