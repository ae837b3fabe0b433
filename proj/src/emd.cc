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

#include "dpemd/emd.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "dpemd/min_cost_flow.h"

namespace dpemd {
namespace {

int64_t Quantize(double mass) { return std::llround(mass / kMassQuantum); }

double ToMass(__int128 units) {
  return static_cast<double>(static_cast<long double>(units) * kMassQuantum);
}

// Rounds a vector that sums to (nearly) zero and moves the rounding residual
// onto its largest-magnitude entry so the result sums to exactly zero.
std::vector<int64_t> QuantizeBalanced(std::span<const double> values) {
  std::vector<int64_t> units(values.size());
  int64_t net = 0;
  size_t largest = 0;
  for (size_t i = 0; i < values.size(); ++i) {
    units[i] = Quantize(values[i]);
    net += units[i];
    if (std::llabs(units[i]) > std::llabs(units[largest])) largest = i;
  }
  if (!units.empty()) units[largest] -= net;
  return units;
}

// Bounding box of the nonzero entries of a width x height raster.
struct Box {
  size_t x0 = 0;
  size_t y0 = 0;
  size_t width = 0;
  size_t height = 0;

  size_t cells() const { return width * height; }
  bool empty() const { return width == 0; }
};

Box NonzeroBox(std::span<const int64_t> units, size_t width) {
  size_t min_x = std::numeric_limits<size_t>::max(), max_x = 0;
  size_t min_y = std::numeric_limits<size_t>::max(), max_y = 0;
  bool any = false;
  for (size_t i = 0; i < units.size(); ++i) {
    if (units[i] == 0) continue;
    const size_t x = i % width;
    const size_t y = i / width;
    min_x = std::min(min_x, x);
    max_x = std::max(max_x, x);
    min_y = std::min(min_y, y);
    max_y = std::max(max_y, y);
    any = true;
  }
  if (!any) return Box{};
  return Box{min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
}

// Network over the cells of `box` plus an optional slack node, with
// unit-cost arcs in both directions between 4-neighbours, together with a
// feasible starting tree. The tree is a comb: each row hangs off its first
// cell and the first column hangs off the top-left cell. Every tree arc is
// oriented so the flow it must carry is nonnegative.
struct Lattice {
  NetworkSimplex net;
  std::vector<int> tree;
  int slack = -1;
};

Lattice BuildLattice(const Box& box, std::span<const int64_t> units,
                     size_t raster_width, bool with_slack,
                     int64_t keep_cost = 0, int64_t slack_cost = 0) {
  const int cells = static_cast<int>(box.cells());
  const int w = static_cast<int>(box.width);
  Lattice lattice{NetworkSimplex(cells + (with_slack ? 1 : 0)),
                  std::vector<int>(cells + (with_slack ? 1 : 0), -1)};
  NetworkSimplex& net = lattice.net;

  std::vector<int64_t> supply(cells);
  for (int id = 0; id < cells; ++id) {
    supply[id] = units[(box.y0 + id / w) * raster_width + box.x0 + id % w];
    net.SetSupply(id, supply[id]);
  }
  // to_parent[id] / from_parent[id]: arcs between a cell and its comb parent.
  std::vector<int> to_parent(cells, -1), from_parent(cells, -1);
  for (int id = 0; id < cells; ++id) {
    const int x = id % w;
    if (x + 1 < w) {
      from_parent[id + 1] = net.AddArc(id, id + 1, 1);
      to_parent[id + 1] = net.AddArc(id + 1, id, 1);
    }
    if (id + w < cells) {
      const int below = id + w;
      const int down = net.AddArc(id, below, 1);
      const int up = net.AddArc(below, id, 1);
      if (x == 0) {
        from_parent[below] = down;
        to_parent[below] = up;
      }
    }
  }

  // Subtree supplies: a row suffix for interior cells, everything below for
  // first-column cells.
  std::vector<int64_t> subtree(cells, 0);
  int64_t rows_below = 0;
  for (int y = static_cast<int>(box.height) - 1; y >= 0; --y) {
    int64_t suffix = 0;
    for (int x = w - 1; x >= 1; --x) {
      suffix += supply[y * w + x];
      subtree[y * w + x] = suffix;
    }
    rows_below += suffix + supply[y * w];
    subtree[y * w] = rows_below;
  }
  for (int id = 1; id < cells; ++id) {
    lattice.tree[id] = subtree[id] >= 0 ? to_parent[id] : from_parent[id];
  }

  if (with_slack) {
    const int slack = cells;
    lattice.slack = slack;
    int keep0 = -1, fill0 = -1;
    for (int id = 0; id < cells; ++id) {
      const int keep = net.AddArc(id, slack, keep_cost);
      const int fill = net.AddArc(slack, id, slack_cost);
      if (id == 0) {
        keep0 = keep;
        fill0 = fill;
      }
    }
    net.SetSupply(slack, -subtree[0]);
    lattice.tree[0] = subtree[0] >= 0 ? keep0 : fill0;
  }
  return lattice;
}

// Arc ids of the keep arcs (cell -> slack) in a lattice built with a slack
// node: they follow the neighbour arcs, two slack arcs per cell.
int KeepArc(const Lattice& lattice, int cell) {
  const int neighbour_arcs = lattice.net.num_arcs() - 2 * lattice.slack;
  return neighbour_arcs + 2 * cell;
}

absl::Status CheckLatticeSize(const Box& box) {
  if (box.cells() > kMaxLatticeCells) {
    return absl::ResourceExhaustedError(
        absl::StrCat("lattice of ", box.cells(), " cells exceeds the limit of ",
                     kMaxLatticeCells));
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<TransportPlan> Emd(const SparseDist& p, const SparseDist& q) {
  if (!(p.grid() == q.grid())) {
    return absl::InvalidArgumentError("distributions on different grids");
  }
  const double p_total = p.Total();
  const double q_total = q.Total();
  if (std::fabs(p_total - q_total) > 1e-9 * std::max(1.0, p_total)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "masses differ: ", p_total, " vs ", q_total));
  }
  if (p.size() + q.size() > kMaxTransportSupport) {
    return absl::ResourceExhaustedError(absl::StrCat(
        "combined support ", p.size() + q.size(), " exceeds ",
        kMaxTransportSupport));
  }
  TransportPlan plan;
  if (p.empty() || q.empty()) return plan;

  std::vector<int64_t> supply(p.size());
  std::vector<int64_t> demand(q.size());
  int64_t supply_total = 0;
  int64_t demand_total = 0;
  size_t largest = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    supply[i] = Quantize(p.entries()[i].mass);
    supply_total += supply[i];
  }
  for (size_t j = 0; j < q.size(); ++j) {
    demand[j] = Quantize(q.entries()[j].mass);
    demand_total += demand[j];
    if (demand[j] > demand[largest]) largest = j;
  }
  demand[largest] += supply_total - demand_total;

  const int np = static_cast<int>(p.size());
  NetworkSimplex net(np + static_cast<int>(q.size()));
  for (int i = 0; i < np; ++i) net.SetSupply(i, supply[i]);
  for (size_t j = 0; j < q.size(); ++j) {
    net.SetSupply(np + static_cast<int>(j), -demand[j]);
  }
  for (int i = 0; i < np; ++i) {
    for (size_t j = 0; j < q.size(); ++j) {
      net.AddArc(i, np + static_cast<int>(j),
                 Grid::StepDistance(p.entries()[i].point, q.entries()[j].point));
    }
  }
  if (absl::Status s = net.Solve(); !s.ok()) return s;

  int arc = 0;
  for (int i = 0; i < np; ++i) {
    for (size_t j = 0; j < q.size(); ++j, ++arc) {
      if (net.flow(arc) == 0) continue;
      plan.moves.push_back(TransportPlan::Move{
          p.entries()[i].point, q.entries()[j].point, ToMass(net.flow(arc))});
    }
  }
  plan.cost = ToMass(net.total_cost()) * p.grid().spacing();
  return plan;
}

absl::StatusOr<double> EmdNorm(const Grid& grid, std::span<const double> w) {
  if (w.size() != grid.num_points()) {
    return absl::InvalidArgumentError(
        absl::StrCat("vector has ", w.size(), " entries, grid has ",
                     grid.num_points()));
  }
  std::vector<int64_t> units(w.size());
  for (size_t i = 0; i < w.size(); ++i) units[i] = Quantize(w[i]);
  const size_t side = static_cast<size_t>(grid.side());
  const Box box = NonzeroBox(units, side);
  if (box.empty()) return 0.0;
  if (absl::Status s = CheckLatticeSize(box); !s.ok()) return s;

  Lattice lattice = BuildLattice(box, units, side, /*with_slack=*/true,
                                 2 * int64_t{grid.side()},
                                 2 * int64_t{grid.side()});
  if (absl::Status s = lattice.net.SolveFromTree(lattice.tree); !s.ok()) {
    return s;
  }
  return ToMass(lattice.net.total_cost()) * grid.spacing();
}

absl::StatusOr<double> LatticeEmd(std::span<const double> p,
                                  std::span<const double> q, size_t width,
                                  size_t height, double spacing) {
  if (p.size() != width * height || q.size() != width * height) {
    return absl::InvalidArgumentError("raster sizes do not match");
  }
  double p_total = 0.0;
  double q_total = 0.0;
  std::vector<double> diff(p.size());
  for (size_t i = 0; i < p.size(); ++i) {
    p_total += p[i];
    q_total += q[i];
    diff[i] = p[i] - q[i];
  }
  if (std::fabs(p_total - q_total) > 1e-8 * std::max(1.0, p_total)) {
    return absl::InvalidArgumentError(
        absl::StrCat("masses differ: ", p_total, " vs ", q_total));
  }
  const std::vector<int64_t> units = QuantizeBalanced(diff);
  const Box box = NonzeroBox(units, width);
  if (box.empty()) return 0.0;
  if (absl::Status s = CheckLatticeSize(box); !s.ok()) return s;
  Lattice lattice = BuildLattice(box, units, width, /*with_slack=*/false);
  if (absl::Status s = lattice.net.SolveFromTree(lattice.tree); !s.ok()) {
    return s;
  }
  return ToMass(lattice.net.total_cost()) * spacing;
}

absl::StatusOr<std::vector<double>> NearestNonnegative(
    const Grid& grid, std::span<const double> target) {
  if (target.size() != grid.num_points()) {
    return absl::InvalidArgumentError(
        absl::StrCat("vector has ", target.size(), " entries, grid has ",
                     grid.num_points()));
  }
  std::vector<double> result(target.size(), 0.0);
  std::vector<int64_t> units(target.size());
  for (size_t i = 0; i < target.size(); ++i) units[i] = Quantize(target[i]);
  const size_t side = static_cast<size_t>(grid.side());
  const Box box = NonzeroBox(units, side);
  if (box.empty()) return result;
  if (absl::Status s = CheckLatticeSize(box); !s.ok()) return s;

  // Mass is either kept where it is (free arc into the slack node, read
  // back as the output) or moved; demand left uncovered is paid for at the
  // slack price.
  Lattice lattice = BuildLattice(box, units, side, /*with_slack=*/true, 0,
                                 2 * int64_t{grid.side()});
  if (absl::Status s = lattice.net.SolveFromTree(lattice.tree); !s.ok()) {
    return s;
  }
  for (int id = 0; id < lattice.slack; ++id) {
    const size_t index =
        (box.y0 + id / box.width) * side + box.x0 + id % box.width;
    result[index] = ToMass(lattice.net.flow(KeepArc(lattice, id)));
  }
  return result;
}

absl::StatusOr<double> BestKSparseError(const SparseDist& x, int k) {
  if (k < 1) return absl::InvalidArgumentError("k must be positive");
  if (x.size() <= static_cast<size_t>(k)) return 0.0;
  const Grid& grid = x.grid();
  if (grid.side() > 8 || k > 2) {
    return absl::OutOfRangeError(
        "exhaustive search is limited to side <= 8 and k <= 2; use "
        "BruteForceKMedian on a coarser candidate grid");
  }
  const size_t n = grid.num_points();
  auto cost = [&](GridPoint a, GridPoint b) {
    double total = 0.0;
    for (const auto& e : x.entries()) {
      const int64_t d = std::min(Grid::StepDistance(e.point, a),
                                 Grid::StepDistance(e.point, b));
      total += e.mass * static_cast<double>(d);
    }
    return total * grid.spacing();
  };
  double best = std::numeric_limits<double>::infinity();
  for (size_t a = 0; a < n; ++a) {
    if (k == 1) {
      best = std::min(best, cost(grid.Point(a), grid.Point(a)));
      continue;
    }
    for (size_t b = a + 1; b < n; ++b) {
      best = std::min(best, cost(grid.Point(a), grid.Point(b)));
    }
  }
  return best;
}

}  // namespace dpemd
