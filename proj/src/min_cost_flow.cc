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

#include "dpemd/min_cost_flow.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "absl/strings/str_cat.h"

namespace dpemd {
namespace {

constexpr NetworkSimplex::Flow kInf = std::numeric_limits<int64_t>::max();
constexpr int kMinBlockSize = 10;
// Pricing block length in units of sqrt(arcs). Tuned on dense 256 x 256
// lattices; short blocks spend most of the time in potential updates.
constexpr double kBlockFactor = 30.0;

}  // namespace

NetworkSimplex::NetworkSimplex(int num_nodes)
    : num_nodes_(num_nodes), supply_(num_nodes, 0) {}

int NetworkSimplex::AddArc(int from, int to, Cost cost) {
  source_.push_back(from);
  target_.push_back(to);
  cost_.push_back(cost);
  return num_arcs_++;
}

void NetworkSimplex::SetSupply(int node, Flow supply) {
  supply_[node] = supply;
}

__int128 NetworkSimplex::total_cost() const {
  __int128 total = 0;
  for (int e = 0; e < num_arcs_; ++e) {
    total += static_cast<__int128>(flow_[e]) * cost_[e];
  }
  return total;
}

void NetworkSimplex::InitTree() {
  const int all_arcs = num_arcs_ + num_nodes_;
  source_.resize(all_arcs);
  target_.resize(all_arcs);
  cost_.resize(all_arcs);
  flow_.assign(all_arcs, 0);
  state_.assign(all_arcs, kLower);

  const int nodes = num_nodes_ + 1;
  pi_.assign(nodes, 0);
  parent_.assign(nodes, -1);
  pred_.assign(nodes, -1);
  thread_.assign(nodes, 0);
  rev_thread_.assign(nodes, 0);
  succ_num_.assign(nodes, 0);
  last_succ_.assign(nodes, 0);
  pred_dir_.assign(nodes, kUp);

  Cost max_cost = 0;
  for (int e = 0; e < num_arcs_; ++e) max_cost = std::max(max_cost, cost_[e]);
  const Cost art_cost = (max_cost + 1) * static_cast<Cost>(num_nodes_);

  root_ = num_nodes_;
  parent_[root_] = -1;
  pred_[root_] = -1;
  thread_[root_] = 0;
  rev_thread_[0] = root_;
  succ_num_[root_] = nodes;
  last_succ_[root_] = root_ - 1;
  pi_[root_] = 0;

  for (int u = 0, e = num_arcs_; u < num_nodes_; ++u, ++e) {
    parent_[u] = root_;
    pred_[u] = e;
    thread_[u] = u + 1;
    rev_thread_[u + 1] = u;
    succ_num_[u] = 1;
    last_succ_[u] = u;
    state_[e] = kTree;
    if (supply_[u] >= 0) {
      pred_dir_[u] = kUp;
      pi_[u] = 0;
      source_[e] = u;
      target_[e] = root_;
      flow_[e] = supply_[u];
      cost_[e] = 0;
    } else {
      pred_dir_[u] = kDown;
      pi_[u] = art_cost;
      source_[e] = root_;
      target_[e] = u;
      flow_[e] = -supply_[u];
      cost_[e] = art_cost;
    }
  }

  search_arc_num_ = num_arcs_;
  block_size_ = std::max(
      static_cast<int>(kBlockFactor *
                       std::sqrt(static_cast<double>(search_arc_num_))),
      kMinBlockSize);
  next_arc_ = 0;
}

bool NetworkSimplex::FindEnteringArc() {
  Cost min = 0;
  int cnt = block_size_;
  int e;
  for (e = next_arc_; e < search_arc_num_; ++e) {
    const Cost c = state_[e] * (cost_[e] + pi_[source_[e]] - pi_[target_[e]]);
    if (c < min) {
      min = c;
      in_arc_ = e;
    }
    if (--cnt == 0) {
      if (min < 0) goto search_end;
      cnt = block_size_;
    }
  }
  for (e = 0; e < next_arc_; ++e) {
    const Cost c = state_[e] * (cost_[e] + pi_[source_[e]] - pi_[target_[e]]);
    if (c < min) {
      min = c;
      in_arc_ = e;
    }
    if (--cnt == 0) {
      if (min < 0) goto search_end;
      cnt = block_size_;
    }
  }
  if (min >= 0) return false;

search_end:
  next_arc_ = e;
  return true;
}

void NetworkSimplex::FindJoinNode() {
  int u = source_[in_arc_];
  int v = target_[in_arc_];
  while (u != v) {
    if (succ_num_[u] < succ_num_[v]) {
      u = parent_[u];
    } else {
      v = parent_[v];
    }
  }
  join_ = u;
}

bool NetworkSimplex::FindLeavingArc() {
  int first, second;
  if (state_[in_arc_] == kLower) {
    first = source_[in_arc_];
    second = target_[in_arc_];
  } else {
    first = target_[in_arc_];
    second = source_[in_arc_];
  }
  delta_ = kInf;
  int result = 0;
  // On the first side flow runs from the join node down to `first`.
  for (int u = first; u != join_; u = parent_[u]) {
    const Flow d = pred_dir_[u] == kUp ? flow_[pred_[u]] : kInf;
    if (d < delta_) {
      delta_ = d;
      u_out_ = u;
      result = 1;
    }
  }
  // On the second side it runs from `second` up to the join node.
  for (int u = second; u != join_; u = parent_[u]) {
    const Flow d = pred_dir_[u] == kDown ? flow_[pred_[u]] : kInf;
    if (d <= delta_) {
      delta_ = d;
      u_out_ = u;
      result = 2;
    }
  }
  if (result == 1) {
    u_in_ = first;
    v_in_ = second;
  } else {
    u_in_ = second;
    v_in_ = first;
  }
  return result != 0;
}

void NetworkSimplex::ChangeFlow() {
  if (delta_ > 0) {
    const Flow val = state_[in_arc_] * delta_;
    flow_[in_arc_] += val;
    for (int u = source_[in_arc_]; u != join_; u = parent_[u]) {
      flow_[pred_[u]] -= pred_dir_[u] * val;
    }
    for (int u = target_[in_arc_]; u != join_; u = parent_[u]) {
      flow_[pred_[u]] += pred_dir_[u] * val;
    }
  }
  state_[in_arc_] = kTree;
  state_[pred_[u_out_]] = kLower;
}

void NetworkSimplex::UpdateTreeStructure() {
  const int old_rev_thread = rev_thread_[u_out_];
  const int old_succ_num = succ_num_[u_out_];
  const int old_last_succ = last_succ_[u_out_];
  v_out_ = parent_[u_out_];

  if (u_in_ == u_out_) {
    parent_[u_in_] = v_in_;
    pred_[u_in_] = in_arc_;
    pred_dir_[u_in_] = u_in_ == source_[in_arc_] ? kUp : kDown;

    // Move the subtree of u_in right after v_in in the thread.
    if (thread_[v_in_] != u_out_) {
      int after = thread_[old_last_succ];
      thread_[old_rev_thread] = after;
      rev_thread_[after] = old_rev_thread;
      after = thread_[v_in_];
      thread_[v_in_] = u_out_;
      rev_thread_[u_out_] = v_in_;
      thread_[old_last_succ] = after;
      rev_thread_[after] = old_last_succ;
    }
  } else {
    // When old_rev_thread is v_in, the join node is v_out as well.
    const int thread_continue =
        old_rev_thread == v_in_ ? thread_[old_last_succ] : thread_[v_in_];

    // Re-hang the stem from u_in up to u_out, rewriting the thread.
    int stem = u_in_;
    int par_stem = v_in_;
    int next_stem;
    int last = last_succ_[u_in_];
    int before;
    int after = thread_[last];
    thread_[v_in_] = u_in_;
    dirty_revs_.clear();
    dirty_revs_.push_back(v_in_);
    while (stem != u_out_) {
      next_stem = parent_[stem];
      thread_[last] = next_stem;
      dirty_revs_.push_back(last);

      before = rev_thread_[stem];
      thread_[before] = after;
      rev_thread_[after] = before;

      parent_[stem] = par_stem;
      par_stem = stem;
      stem = next_stem;

      last = last_succ_[stem] == last_succ_[par_stem] ? rev_thread_[par_stem]
                                                      : last_succ_[stem];
      after = thread_[last];
    }
    parent_[u_out_] = par_stem;
    thread_[last] = thread_continue;
    rev_thread_[thread_continue] = last;
    last_succ_[u_out_] = last;

    if (old_rev_thread != v_in_) {
      thread_[old_rev_thread] = after;
      rev_thread_[after] = old_rev_thread;
    }

    for (int u : dirty_revs_) rev_thread_[thread_[u]] = u;

    // Stem nodes inherit the predecessor arc of their old child.
    int tmp_sc = 0;
    const int tmp_ls = last_succ_[u_out_];
    for (int u = u_out_, p = parent_[u]; u != u_in_; u = p, p = parent_[u]) {
      pred_[u] = pred_[p];
      pred_dir_[u] = static_cast<signed char>(-pred_dir_[p]);
      tmp_sc += succ_num_[u] - succ_num_[p];
      succ_num_[u] = tmp_sc;
      last_succ_[p] = tmp_ls;
    }
    pred_[u_in_] = in_arc_;
    pred_dir_[u_in_] = u_in_ == source_[in_arc_] ? kUp : kDown;
    succ_num_[u_in_] = old_succ_num;
  }

  // Fix last successors on the path from v_in to the root.
  const int up_limit_out = last_succ_[join_] == v_in_ ? join_ : -1;
  const int last_succ_out = last_succ_[u_out_];
  for (int u = v_in_; u != -1 && last_succ_[u] == v_in_; u = parent_[u]) {
    last_succ_[u] = last_succ_out;
  }

  // And on the path from v_out.
  if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
    for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ;
         u = parent_[u]) {
      last_succ_[u] = old_rev_thread;
    }
  } else if (last_succ_out != old_last_succ) {
    for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ;
         u = parent_[u]) {
      last_succ_[u] = last_succ_out;
    }
  }

  for (int u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
  for (int u = v_out_; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
}

void NetworkSimplex::UpdatePotential() {
  const Cost sigma = pi_[v_in_] - pi_[u_in_] - pred_dir_[u_in_] * cost_[in_arc_];
  const int end = thread_[last_succ_[u_in_]];
  // Potentials matter only up to a common shift, so move whichever side of
  // the cut is smaller.
  if (2 * succ_num_[u_in_] <= num_nodes_ + 1) {
    for (int u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
  } else {
    for (int u = end; u != u_in_; u = thread_[u]) pi_[u] -= sigma;
  }
}

absl::Status NetworkSimplex::CheckInput() const {
  Flow balance = 0;
  for (int u = 0; u < num_nodes_; ++u) balance += supply_[u];
  if (balance != 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("supplies do not balance: net ", balance));
  }
  for (int e = 0; e < num_arcs_; ++e) {
    if (cost_[e] < 0) return absl::InvalidArgumentError("negative arc cost");
    if (source_[e] < 0 || source_[e] >= num_nodes_ || target_[e] < 0 ||
        target_[e] >= num_nodes_) {
      return absl::InvalidArgumentError("arc endpoint out of range");
    }
  }
  return absl::OkStatus();
}

absl::Status NetworkSimplex::InitFromTree(std::span<const int> tree_arc) {
  if (static_cast<int>(tree_arc.size()) != num_nodes_) {
    return absl::InvalidArgumentError("tree must name one arc per node");
  }
  const int all_arcs = num_arcs_ + num_nodes_;
  source_.resize(all_arcs);
  target_.resize(all_arcs);
  cost_.resize(all_arcs);
  flow_.assign(all_arcs, 0);
  state_.assign(all_arcs, kLower);

  const int nodes = num_nodes_ + 1;
  pi_.assign(nodes, 0);
  parent_.assign(nodes, -1);
  pred_.assign(nodes, -1);
  thread_.assign(nodes, 0);
  rev_thread_.assign(nodes, 0);
  succ_num_.assign(nodes, 0);
  last_succ_.assign(nodes, 0);
  pred_dir_.assign(nodes, kUp);
  root_ = num_nodes_;

  // Artificial arcs stay out of the tree except the one above the root.
  for (int u = 0, e = num_arcs_; u < num_nodes_; ++u, ++e) {
    source_[e] = u;
    target_[e] = root_;
    cost_[e] = 0;
  }
  int tree_root = -1;
  for (int u = 0; u < num_nodes_; ++u) {
    int e = tree_arc[u];
    if (e == -1) {
      if (tree_root != -1) return absl::InvalidArgumentError("two tree roots");
      tree_root = u;
      e = num_arcs_ + u;
      parent_[u] = root_;
      pred_dir_[u] = kUp;
    } else if (e < 0 || e >= num_arcs_) {
      return absl::InvalidArgumentError("tree arc out of range");
    } else if (source_[e] == u) {
      parent_[u] = target_[e];
      pred_dir_[u] = kUp;
    } else if (target_[e] == u) {
      parent_[u] = source_[e];
      pred_dir_[u] = kDown;
    } else {
      return absl::InvalidArgumentError("tree arc does not touch its node");
    }
    if (state_[e] == kTree) return absl::InvalidArgumentError("arc reused");
    pred_[u] = e;
    state_[e] = kTree;
  }
  if (tree_root == -1) return absl::InvalidArgumentError("tree has no root");

  // Preorder walk from the artificial root gives the thread.
  std::vector<int> first_child(nodes + 1, 0);
  for (int u = 0; u < num_nodes_; ++u) ++first_child[parent_[u] + 1];
  for (int u = 0; u < nodes; ++u) first_child[u + 1] += first_child[u];
  std::vector<int> children(num_nodes_);
  std::vector<int> fill(first_child.begin(), first_child.end() - 1);
  for (int u = 0; u < num_nodes_; ++u) children[fill[parent_[u]]++] = u;

  std::vector<int> order;
  order.reserve(nodes);
  std::vector<int> stack = {root_};
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    order.push_back(u);
    for (int k = first_child[u + 1] - 1; k >= first_child[u]; --k) {
      stack.push_back(children[k]);
    }
  }
  if (static_cast<int>(order.size()) != nodes) {
    return absl::InvalidArgumentError("tree arcs contain a cycle");
  }
  std::vector<int> pos(nodes);
  for (int i = 0; i < nodes; ++i) {
    pos[order[i]] = i;
    thread_[order[i]] = order[(i + 1) % nodes];
    rev_thread_[order[(i + 1) % nodes]] = order[i];
  }

  std::vector<Flow> subtree(nodes, 0);
  for (int u = 0; u < num_nodes_; ++u) subtree[u] = supply_[u];
  for (int i = nodes - 1; i >= 0; --i) {
    const int u = order[i];
    succ_num_[u] += 1;
    last_succ_[u] = order[pos[u] + succ_num_[u] - 1];
    if (u == root_) break;
    const Flow f = pred_dir_[u] == kUp ? subtree[u] : -subtree[u];
    if (f < 0 || (f == 0 && pred_dir_[u] == kDown)) {
      return absl::InvalidArgumentError(
          "initial tree forces negative flow or is not strongly feasible");
    }
    flow_[pred_[u]] = f;
    subtree[parent_[u]] += subtree[u];
    succ_num_[parent_[u]] += succ_num_[u];
  }

  for (int i = 1; i < nodes; ++i) {
    const int u = order[i];
    const Cost c = cost_[pred_[u]];
    pi_[u] = pred_dir_[u] == kUp ? pi_[parent_[u]] - c : pi_[parent_[u]] + c;
  }

  search_arc_num_ = num_arcs_;
  block_size_ = std::max(
      static_cast<int>(kBlockFactor *
                       std::sqrt(static_cast<double>(search_arc_num_))),
      kMinBlockSize);
  next_arc_ = 0;
  return absl::OkStatus();
}

absl::Status NetworkSimplex::RunPivots() {
  pivots_ = 0;
  while (FindEnteringArc()) {
    FindJoinNode();
    const bool change = FindLeavingArc();
    if (!change || delta_ >= kInf) {
      return absl::InternalError("unbounded pivot in uncapacitated network");
    }
    ChangeFlow();
    UpdateTreeStructure();
    UpdatePotential();
    ++pivots_;
  }
  for (int e = num_arcs_; e < num_arcs_ + num_nodes_; ++e) {
    if (flow_[e] != 0) {
      return absl::FailedPreconditionError("no feasible flow exists");
    }
  }
  return absl::OkStatus();
}

absl::Status NetworkSimplex::Solve() {
  if (absl::Status s = CheckInput(); !s.ok()) return s;
  InitTree();
  return RunPivots();
}

absl::Status NetworkSimplex::SolveFromTree(std::span<const int> tree_arc) {
  if (absl::Status s = CheckInput(); !s.ok()) return s;
  if (absl::Status s = InitFromTree(tree_arc); !s.ok()) return s;
  return RunPivots();
}

bool NetworkSimplex::TreeIsConsistent() const {
  const int nodes = num_nodes_ + 1;
  if (static_cast<int>(parent_.size()) != nodes) return false;
  // Thread must be a single cycle through every node starting at the root.
  std::vector<int> pos(nodes, -1);
  int u = root_;
  for (int i = 0; i < nodes; ++i) {
    if (pos[u] != -1) return false;
    pos[u] = i;
    if (rev_thread_[thread_[u]] != u) return false;
    u = thread_[u];
  }
  if (u != root_) return false;

  std::vector<int> size(nodes, 0);
  for (int v = 0; v < nodes; ++v) {
    for (int a = v; a != -1; a = parent_[a]) ++size[a];
  }
  for (int v = 0; v < nodes; ++v) {
    if (succ_num_[v] != size[v]) return false;
    if (pos[last_succ_[v]] != pos[v] + size[v] - 1) return false;
    if (v == root_) continue;
    // Preorder: the parent appears before the child, within its range.
    const int p = parent_[v];
    if (pos[p] >= pos[v] || pos[v] > pos[p] + size[p] - 1) return false;
    const int e = pred_[v];
    if (state_[e] != kTree) return false;
    const bool up = source_[e] == v && target_[e] == p;
    const bool down = source_[e] == p && target_[e] == v;
    if (!(pred_dir_[v] == kUp ? up : down)) return false;
    if (cost_[e] + pi_[source_[e]] - pi_[target_[e]] != 0) return false;
  }
  return true;
}

}  // namespace dpemd
