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

// Primal network simplex for uncapacitated min-cost flow with integer
// supplies and costs.
//
// The spanning tree is stored with parent / thread / subtree-size arrays and
// updated incrementally on every pivot. Entering arcs are chosen by block
// search and leaving arcs by the strongly-feasible rule, which rules out
// cycling on degenerate pivots.

#ifndef DPEMD_MIN_COST_FLOW_H_
#define DPEMD_MIN_COST_FLOW_H_

#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/status.h"

namespace dpemd {

class NetworkSimplex {
 public:
  using Flow = int64_t;
  using Cost = int64_t;

  explicit NetworkSimplex(int num_nodes);

  // Adds an arc with unlimited capacity and returns its id. Costs must be
  // nonnegative.
  int AddArc(int from, int to, Cost cost);
  // Positive supply is a source, negative a sink. Supplies must balance.
  void SetSupply(int node, Flow supply);

  absl::Status Solve();
  // Starts from a caller-supplied spanning tree instead of the artificial
  // one. `tree_arc[u]` is the arc joining u to its parent, or -1 for the
  // single root. The flow the tree forces on each arc must be nonnegative.
  absl::Status SolveFromTree(std::span<const int> tree_arc);

  int num_nodes() const { return num_nodes_; }
  int num_arcs() const { return num_arcs_; }
  Flow flow(int arc) const { return flow_[arc]; }
  // Sum of flow * cost over the original arcs, exact.
  __int128 total_cost() const;
  int64_t pivots() const { return pivots_; }

  // Recomputes tree bookkeeping from scratch and compares it with the
  // incrementally maintained arrays. Exposed for tests.
  bool TreeIsConsistent() const;

 private:
  enum : signed char { kUp = 1, kDown = -1 };
  enum : signed char { kUpper = -1, kTree = 0, kLower = 1 };

  absl::Status CheckInput() const;
  void InitTree();
  absl::Status InitFromTree(std::span<const int> tree_arc);
  absl::Status RunPivots();
  bool FindEnteringArc();
  void FindJoinNode();
  bool FindLeavingArc();
  void ChangeFlow();
  void UpdateTreeStructure();
  void UpdatePotential();

  int num_nodes_;
  int num_arcs_ = 0;
  int64_t pivots_ = 0;

  std::vector<int> source_;
  std::vector<int> target_;
  std::vector<Cost> cost_;
  std::vector<Flow> supply_;
  std::vector<Flow> flow_;
  std::vector<Cost> pi_;
  std::vector<signed char> state_;

  std::vector<int> parent_;
  std::vector<int> pred_;
  std::vector<int> thread_;
  std::vector<int> rev_thread_;
  std::vector<int> succ_num_;
  std::vector<int> last_succ_;
  std::vector<signed char> pred_dir_;
  std::vector<int> dirty_revs_;

  int root_ = 0;
  int search_arc_num_ = 0;
  int block_size_ = 0;
  int next_arc_ = 0;
  int in_arc_ = 0;
  int join_ = 0;
  int u_in_ = 0;
  int v_in_ = 0;
  int u_out_ = 0;
  int v_out_ = 0;
  Flow delta_ = 0;
};

}  // namespace dpemd

#endif  // DPEMD_MIN_COST_FLOW_H_
