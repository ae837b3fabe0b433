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

#include "dpemd/experiment.h"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dpemd/datagen.h"
#include "dpemd/noise.h"
#include "dpemd/shuffle.h"

namespace dpemd {
namespace {

constexpr double kZ95 = 1.96;

struct Group {
  double eps;
  int64_t n;
  int levels;
};

struct Outcome {
  std::string algorithm;
  absl::StatusOr<SparseDist> estimate;
  double wall_ms = 0.0;
};

std::string RunId(const Group& g) {
  return absl::StrFormat("eps%g_n%d_d%d", g.eps, g.n, int64_t{1} << g.levels);
}

std::string ThresholdName(double pct) {
  return absl::StrFormat("baseline_top%gpct", pct);
}

absl::StatusOr<std::vector<SparseDist>> TrialUsers(const SweepConfig& config,
                                                   const Group& group,
                                                   uint64_t data_seed) {
  if (config.dataset != nullptr) {
    const std::vector<SparseDist>& all = config.dataset->users;
    if (group.n > static_cast<int64_t>(all.size())) {
      return absl::InvalidArgumentError(absl::StrCat(
          "asked for ", group.n, " users but the dataset has ", all.size()));
    }
    std::vector<size_t> order(all.size());
    std::iota(order.begin(), order.end(), size_t{0});
    Rng rng({data_seed, 0});
    std::vector<SparseDist> picked;
    for (int64_t i = 0; i < group.n; ++i) {
      const size_t j = i + rng.Below(order.size() - i);
      std::swap(order[i], order[j]);
      picked.push_back(all[order[i]]);
    }
    return picked;
  }
  MixtureSpec spec =
      RandomMixture(config.gaussians, config.samples_per_user, group.n,
                    group.levels, config.mixture_seed);
  spec.seed = data_seed;
  absl::StatusOr<SyntheticData> data = SynthUsers(spec);
  if (!data.ok()) return data.status();
  return std::move(data->users);
}

template <typename F>
Outcome Timed(const std::string& name, bool record, F&& run) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out{name, run(), 0.0};
  if (record) {
    out.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - start)
                      .count();
  }
  return out;
}

std::vector<Outcome> RunAlgorithms(const SweepConfig& config,
                                   const Group& group,
                                   std::span<const SparseDist> users,
                                   uint64_t mech_seed) {
  const bool timing = config.record_timing;
  std::vector<Outcome> out;
  AggregationConfig central;
  central.eps = group.eps;
  central.w = config.w;
  central.mode = config.mode;
  central.gamma = config.gamma;
  central.seed = mech_seed;
  out.push_back(Timed("ours", timing, [&]() -> absl::StatusOr<SparseDist> {
    absl::StatusOr<AggregateResult> r = AggregateCentral(users, central);
    if (!r.ok()) return r.status();
    return std::move(r->normalized);
  }));
  BaselineConfig baseline;
  baseline.eps = group.eps;
  baseline.seed = mech_seed;
  auto run_baseline = [&]() -> absl::StatusOr<SparseDist> {
    absl::StatusOr<Normalized> r = BaselineLaplace(users, baseline);
    if (!r.ok()) return r.status();
    return std::move(r->dist);
  };
  out.push_back(Timed("baseline", timing, run_baseline));
  for (double t : config.thresholds) {
    baseline.threshold_pct = t;
    out.push_back(Timed(ThresholdName(t), timing, run_baseline));
  }
  if (config.dense) {
    out.push_back(Timed("dense", timing, [&]() -> absl::StatusOr<SparseDist> {
      absl::StatusOr<DenseResult> r = AggregateDense(users, group.eps, mech_seed);
      if (!r.ok()) return r.status();
      return std::move(r->normalized);
    }));
  }
  for (int64_t b : config.shuffle_scales) {
    ShuffleConfig shuffle;
    shuffle.eps = group.eps;
    shuffle.delta = config.shuffle_delta;
    shuffle.scale = b;
    shuffle.w = config.w;
    shuffle.mode = config.mode;
    shuffle.gamma = config.gamma;
    shuffle.seed = mech_seed;
    out.push_back(Timed(absl::StrCat("shuffle_B", b), timing,
                        [&]() -> absl::StatusOr<SparseDist> {
                          absl::StatusOr<ShuffleRun> r =
                              SimulateShuffle(users, shuffle);
                          if (!r.ok()) return r.status();
                          return std::move(r->result.normalized);
                        }));
  }
  return out;
}

absl::StatusOr<HeatmapGrid> Render(const SparseDist& p,
                                   const SweepConfig& config) {
  if (!config.region.has_value()) return RenderHeatmap(p, config.sigma);
  return RenderHeatmap(MaskToRegion(p, *config.region), config.sigma,
                       *config.region);
}

std::vector<SweepRow> RunTask(const SweepConfig& config, const Group& group,
                              int trial) {
  const uint64_t data_seed =
      DeriveSeed({config.seed, static_cast<uint64_t>(trial)});
  // Keyed by the group's parameters, so adding values to a list leaves the
  // other groups' results unchanged.
  const uint64_t mech_seed =
      DeriveSeed({config.seed, static_cast<uint64_t>(trial),
                  std::bit_cast<uint64_t>(group.eps),
                  static_cast<uint64_t>(group.n),
                  static_cast<uint64_t>(group.levels)});
  SweepRow base;
  base.run_id = RunId(group);
  base.eps = group.eps;
  base.n = group.n;
  base.delta_grid = int64_t{1} << group.levels;
  base.w = config.w;
  base.trial = trial;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto failed = [&](const std::string& algorithm, const absl::Status& s) {
    SweepRow row = base;
    row.algorithm = algorithm;
    row.metrics = {nan, nan, nan, nan, false};
    row.error = s.ToString();
    return row;
  };

  absl::StatusOr<std::vector<SparseDist>> users =
      TrialUsers(config, group, data_seed);
  if (!users.ok()) return {failed("data", users.status())};
  absl::StatusOr<SparseDist> sum = SumDists(*users);
  if (!sum.ok()) return {failed("data", sum.status())};
  const SparseDist truth =
      sum->Scaled(1.0 / static_cast<double>(users->size()));
  absl::StatusOr<HeatmapGrid> truth_map = Render(truth, config);
  if (!truth_map.ok()) return {failed("truth", truth_map.status())};
  const bool write_maps = !config.heatmap_dir.empty() && trial == 0;
  if (write_maps) {
    std::ignore = WritePgm(absl::StrCat(config.heatmap_dir, "/", base.run_id,
                                        "_truth.pgm"),
                           *truth_map);
  }

  MetricOptions options;
  options.exact_emd_support = config.exact_emd_support;
  std::vector<SweepRow> rows;
  for (Outcome& o : RunAlgorithms(config, group, *users, mech_seed)) {
    if (!o.estimate.ok()) {
      rows.push_back(failed(o.algorithm, o.estimate.status()));
      continue;
    }
    absl::StatusOr<HeatmapGrid> map = Render(*o.estimate, config);
    absl::StatusOr<MetricSet> m =
        map.ok() ? CompareHeatmaps(*truth_map, *map, options)
                 : absl::StatusOr<MetricSet>(map.status());
    if (!m.ok()) {
      rows.push_back(failed(o.algorithm, m.status()));
      continue;
    }
    if (write_maps) {
      std::ignore = WritePgm(absl::StrCat(config.heatmap_dir, "/", base.run_id,
                                          "_", o.algorithm, ".pgm"),
                             *map);
    }
    SweepRow row = base;
    row.algorithm = o.algorithm;
    row.metrics = *m;
    row.wall_ms = o.wall_ms;
    rows.push_back(std::move(row));
  }
  return rows;
}

absl::Status Validate(const SweepConfig& c) {
  if (c.eps.empty() || c.users.empty() || c.levels.empty()) {
    return absl::InvalidArgumentError("eps, n and grid lists must be nonempty");
  }
  for (double e : c.eps) {
    if (!(e > 0.0)) return absl::InvalidArgumentError("eps must be positive");
  }
  for (int64_t n : c.users) {
    if (n < 2) return absl::InvalidArgumentError("n must be at least 2");
  }
  for (int l : c.levels) {
    if (l < 0 || l > kMaxGridLevels) {
      return absl::InvalidArgumentError(absl::StrCat("bad grid levels ", l));
    }
  }
  if (c.trials < 1) return absl::InvalidArgumentError("trials must be >= 1");
  if (!(c.sigma > 0.0)) return absl::InvalidArgumentError("sigma must be > 0");
  if (c.w < 1) return absl::InvalidArgumentError("w must be >= 1");
  if (!c.heatmap_dir.empty() && !std::filesystem::is_directory(c.heatmap_dir)) {
    return absl::NotFoundError(
        absl::StrCat("heatmap directory ", c.heatmap_dir, " does not exist"));
  }
  return absl::OkStatus();
}

}  // namespace

int WorkersFromEnv() {
  const char* v = std::getenv(kWorkersEnv);
  int n = 0;
  if (v != nullptr && absl::SimpleAtoi(v, &n) && n > 0) return n;
  return 1;
}

uint64_t DeriveSeed(std::initializer_list<uint64_t> parts) {
  std::vector<uint32_t> words;
  for (uint64_t p : parts) {
    words.push_back(static_cast<uint32_t>(p));
    words.push_back(static_cast<uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<uint64_t>(out[1]) << 32) | out[0];
}

SparseDist MaskToRegion(const SparseDist& p, Region region) {
  std::vector<SparseDist::Entry> kept;
  for (const SparseDist::Entry& e : p.entries()) {
    if (e.point.ix < region.width && e.point.iy < region.height) {
      kept.push_back(e);
    }
  }
  if (kept.empty()) {
    const double mass = 1.0 / (static_cast<double>(region.width) * region.height);
    for (int32_t y = 0; y < region.height; ++y) {
      for (int32_t x = 0; x < region.width; ++x) kept.push_back({{x, y}, mass});
    }
  }
  SparseDist out = *SparseDist::FromEntries(p.grid(), std::move(kept));
  return out.Scaled(1.0 / out.Total());
}

absl::StatusOr<std::vector<SweepRow>> RunSweep(const SweepConfig& config) {
  if (absl::Status s = Validate(config); !s.ok()) return s;
  std::vector<Group> groups;
  const std::vector<int> levels =
      config.dataset != nullptr ? std::vector<int>{config.dataset->grid.levels()}
                                : config.levels;
  for (double e : config.eps) {
    for (int64_t n : config.users) {
      for (int l : levels) groups.push_back({e, n, l});
    }
  }
  if (config.region.has_value()) {
    for (const Group& g : groups) {
      const int64_t side = int64_t{1} << g.levels;
      if (config.region->width < 1 || config.region->height < 1 ||
          config.region->width > side || config.region->height > side) {
        return absl::InvalidArgumentError("region does not fit the grid");
      }
    }
  }
  const size_t tasks = groups.size() * static_cast<size_t>(config.trials);
  std::vector<std::vector<SweepRow>> results(tasks);
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t t = next++; t < tasks; t = next++) {
      const size_t g = t / config.trials;
      results[t] =
          RunTask(config, groups[g], static_cast<int>(t % config.trials));
    }
  };
  const int workers =
      std::clamp<int>(config.workers, 1, static_cast<int>(std::max<size_t>(tasks, 1)));
  std::vector<std::thread> pool;
  for (int i = 1; i < workers; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  std::vector<SweepRow> rows;
  for (std::vector<SweepRow>& r : results) {
    for (SweepRow& row : r) rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SummaryRow> Summarize(std::span<const SweepRow> rows) {
  using Key = std::tuple<std::string, std::string>;
  std::vector<Key> order;
  std::map<Key, std::vector<const SweepRow*>> groups;
  for (const SweepRow& r : rows) {
    if (!r.error.empty()) continue;
    Key k{r.run_id, r.algorithm};
    auto [it, inserted] = groups.try_emplace(k);
    if (inserted) order.push_back(k);
    it->second.push_back(&r);
  }
  struct Metric {
    const char* name;
    double MetricSet::*field;
  };
  constexpr Metric kMetrics[] = {{"sim", &MetricSet::sim},
                                 {"pearson", &MetricSet::pearson},
                                 {"kl", &MetricSet::kl},
                                 {"emd", &MetricSet::emd}};
  std::vector<SummaryRow> out;
  for (const Key& k : order) {
    const std::vector<const SweepRow*>& g = groups[k];
    for (const Metric& m : kMetrics) {
      double sum = 0.0;
      for (const SweepRow* r : g) sum += r->metrics.*m.field;
      const double n = static_cast<double>(g.size());
      const double mean = sum / n;
      double ss = 0.0;
      for (const SweepRow* r : g) {
        const double d = r->metrics.*m.field - mean;
        ss += d * d;
      }
      const double stderr_ = g.size() > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
      SummaryRow s;
      s.run_id = g[0]->run_id;
      s.algorithm = g[0]->algorithm;
      s.eps = g[0]->eps;
      s.n = g[0]->n;
      s.delta_grid = g[0]->delta_grid;
      s.metric = m.name;
      s.count = static_cast<int64_t>(g.size());
      s.mean = mean;
      s.ci_low = mean - kZ95 * stderr_;
      s.ci_high = mean + kZ95 * stderr_;
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::string SweepCsv(std::span<const SweepRow> rows) {
  std::string out =
      "run_id,algorithm,eps,n,delta_grid,w,trial,sim,pearson,kl,emd,"
      "emd_is_surrogate,wall_ms\n";
  for (const SweepRow& r : rows) {
    absl::StrAppendFormat(&out, "%s,%s,%g,%d,%d,%d,%d,%.9g,%.9g,%.9g,%.9g,%d,%.3f\n",
                          r.run_id, r.algorithm, r.eps, r.n, r.delta_grid, r.w,
                          r.trial, r.metrics.sim, r.metrics.pearson,
                          r.metrics.kl, r.metrics.emd,
                          r.metrics.emd_is_surrogate ? 1 : 0, r.wall_ms);
  }
  return out;
}

std::string SummaryCsv(std::span<const SummaryRow> rows) {
  std::string out =
      "run_id,algorithm,eps,n,delta_grid,metric,count,mean,ci_low,ci_high\n";
  for (const SummaryRow& r : rows) {
    absl::StrAppendFormat(&out, "%s,%s,%g,%d,%d,%s,%d,%.9g,%.9g,%.9g\n",
                          r.run_id, r.algorithm, r.eps, r.n, r.delta_grid,
                          r.metric, r.count, r.mean, r.ci_low, r.ci_high);
  }
  return out;
}

}  // namespace dpemd
