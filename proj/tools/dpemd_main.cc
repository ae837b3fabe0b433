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

// dpemd: command-line front end for private distribution aggregation.
//
//   dpemd synth          synthetic Gaussian-mixture users -> dataset CSV
//   dpemd ingest         check-in file -> one dataset CSV per busy cell
//   dpemd aggregate      dataset CSV -> private estimate (dataset CSV)
//   dpemd heatmap        dataset CSV -> PGM (and optionally CSV) heatmap
//   dpemd metrics        compare two heatmaps
//   dpemd shuffle-sim    shuffle-model communication and accuracy
//   dpemd coreset-check  empirical k-median coreset error
//   dpemd sweep          seeded experiment grid -> metrics CSV
//
// Every command writes a JSON manifest next to its main output.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <system_error>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "dpemd/aggregator.h"
#include "dpemd/clustering.h"
#include "dpemd/datagen.h"
#include "dpemd/experiment.h"
#include "dpemd/heatmap.h"
#include "dpemd/io.h"
#include "dpemd/shuffle.h"
#include "nlohmann/json.hpp"

namespace dpemd {
namespace {

using nlohmann::json;

const std::map<std::string, AggregationMode> kModes = {
    {"experiment", AggregationMode::kExperiment},
    {"theory", AggregationMode::kTheory}};

std::string ModeName(AggregationMode m) {
  return m == AggregationMode::kTheory ? "theory" : "experiment";
}

absl::Status WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return absl::PermissionDeniedError(absl::StrCat("cannot write ", path));
  out << text;
  out.close();
  if (!out) return absl::DataLossError(absl::StrCat("short write to ", path));
  return absl::OkStatus();
}

absl::StatusOr<int> LevelsForSide(int64_t side) {
  absl::StatusOr<Grid> g = Grid::Create(side);
  if (!g.ok()) return g.status();
  return g->levels();
}

json GammaJson(const std::optional<double>& gamma) {
  return gamma.has_value() ? json(*gamma) : json(nullptr);
}

// ---------------------------------------------------------------- synth

struct SynthOptions {
  int gaussians = 10;
  int samples_per_user = 10;
  int64_t users = 200;
  int64_t delta = 256;
  uint64_t mixture_seed = 0;
  uint64_t seed = 0;
  std::string out;
};

absl::Status RunSynth(const SynthOptions& o) {
  absl::StatusOr<int> levels = LevelsForSide(o.delta);
  if (!levels.ok()) return levels.status();
  MixtureSpec spec = RandomMixture(o.gaussians, o.samples_per_user, o.users,
                                   *levels, o.mixture_seed);
  spec.seed = o.seed;
  absl::StatusOr<SyntheticData> data = SynthUsers(spec);
  if (!data.ok()) return data.status();
  Dataset d;
  d.grid = Grid::WithLevels(*levels);
  d.users = std::move(data->users);
  for (size_t j = 0; j < d.users.size(); ++j) {
    d.user_ids.push_back(absl::StrCat("u", j));
  }
  if (absl::Status s = WriteDatasetCsv(o.out, d); !s.ok()) return s;
  json components = json::array();
  for (const Gaussian2d& g : spec.components) {
    components.push_back({{"mean", {g.mean_x, g.mean_y}},
                          {"cov", {{g.var_x, g.cov_xy}, {g.cov_xy, g.var_y}}}});
  }
  return WriteManifest(
      ManifestPathFor(o.out),
      {{"command", "synth"},
       {"delta_grid", o.delta},
       {"users", o.users},
       {"samples_per_user", o.samples_per_user},
       {"seed", o.seed},
       {"mixture_seed", o.mixture_seed},
       {"sparsity", data->sparsity},
       {"components", components},
       {"outputs", {o.out}}});
}

// ---------------------------------------------------------------- ingest

struct IngestOptions {
  std::string input;
  std::string out_dir;
  std::vector<double> bbox;
  int coarse = 300;
  int top = 30;
  int64_t delta = 256;
  int64_t min_users = 200;
  std::string date_from;
  std::string date_to;
};

absl::Status RunIngest(const IngestOptions& o) {
  absl::StatusOr<int> levels = LevelsForSide(o.delta);
  if (!levels.ok()) return levels.status();
  CellOptions cells;
  if (!o.bbox.empty()) {
    if (o.bbox.size() != 4) {
      return absl::InvalidArgumentError(
          "--bbox takes lon_min,lon_max,lat_min,lat_max");
    }
    cells.bbox = {o.bbox[0], o.bbox[1], o.bbox[2], o.bbox[3]};
  }
  cells.coarse = o.coarse;
  cells.top_cells = o.top;
  cells.levels = *levels;
  cells.min_users = o.min_users;
  cells.date_from = o.date_from;
  cells.date_to = o.date_to;
  std::error_code ec;
  std::filesystem::create_directories(o.out_dir, ec);
  if (ec) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot create ", o.out_dir, ": ", ec.message()));
  }
  absl::StatusOr<ParsedCheckins> parsed = ReadCheckinsFile(o.input);
  if (!parsed.ok()) return parsed.status();
  absl::StatusOr<std::vector<CellDataset>> built =
      BuildCells(parsed->records, cells);
  if (!built.ok()) return built.status();
  json outputs = json::array();
  for (const CellDataset& c : *built) {
    const std::string path =
        absl::StrFormat("%s/cell_%02d.csv", o.out_dir, c.rank);
    Dataset d{Grid::WithLevels(*levels), c.user_ids, c.users};
    if (absl::Status s = WriteDatasetCsv(path, d); !s.ok()) return s;
    json m = {{"command", "ingest"},
              {"delta_grid", o.delta},
              {"rank", c.rank},
              {"coarse_cell", {c.coarse_x, c.coarse_y}},
              {"bounds",
               {{"lon_min", c.bounds.lon_min},
                {"lon_max", c.bounds.lon_max},
                {"lat_min", c.bounds.lat_min},
                {"lat_max", c.bounds.lat_max}}},
              {"checkins", c.checkins},
              {"users", c.users.size()},
              {"meets_min_users", c.meets_min_users}};
    if (absl::Status s = WriteManifest(ManifestPathFor(path), m); !s.ok()) {
      return s;
    }
    outputs.push_back(path);
  }
  return WriteManifest(
      o.out_dir + "/ingest.json",
      {{"command", "ingest"},
       {"input", o.input},
       {"lines", parsed->lines},
       {"malformed", parsed->malformed},
       {"out_of_range", parsed->out_of_range},
       {"records", parsed->records.size()},
       {"bbox", {cells.bbox.lon_min, cells.bbox.lon_max, cells.bbox.lat_min,
                 cells.bbox.lat_max}},
       {"coarse", o.coarse},
       {"top_cells", o.top},
       {"min_users", o.min_users},
       {"date_from", o.date_from},
       {"date_to", o.date_to},
       {"outputs", outputs}});
}

// ---------------------------------------------------------------- aggregate

struct AggregateOptions {
  std::string input;
  std::string out;
  std::string algorithm = "ours";
  double eps = 1.0;
  int64_t w = 20;
  std::optional<double> gamma;
  AggregationMode mode = AggregationMode::kExperiment;
  uint64_t seed = 0;
  std::optional<double> threshold;
  int64_t scale = 256;
  double delta = 1e-5;
  int64_t headroom = 1;
};

absl::Status RunAggregate(const AggregateOptions& o) {
  absl::StatusOr<Dataset> data = ReadDatasetCsv(o.input);
  if (!data.ok()) return data.status();
  if (data->users.empty()) return absl::InvalidArgumentError("no users in input");
  json extra = json::object();
  absl::StatusOr<SparseDist> estimate = absl::UnknownError("unreachable");
  if (o.algorithm == "ours") {
    AggregationConfig c;
    c.eps = o.eps;
    c.w = o.w;
    c.gamma = o.gamma;
    c.mode = o.mode;
    c.seed = o.seed;
    absl::StatusOr<AggregateResult> r = AggregateCentral(data->users, c);
    if (!r.ok()) return r.status();
    extra["uniform_fallback"] = r->uniform_fallback;
    extra["fit_objective"] = r->fit_objective;
    extra["level_eps"] = r->schedule.epsilons;
    extra["first_level"] = r->schedule.first_level;
    estimate = std::move(r->normalized);
  } else if (o.algorithm == "baseline") {
    BaselineConfig c;
    c.eps = o.eps;
    c.threshold_pct = o.threshold;
    c.seed = o.seed;
    absl::StatusOr<Normalized> r = BaselineLaplace(data->users, c);
    if (!r.ok()) return r.status();
    extra["uniform_fallback"] = r->uniform_fallback;
    estimate = std::move(r->dist);
  } else if (o.algorithm == "dense") {
    absl::StatusOr<DenseResult> r = AggregateDense(data->users, o.eps, o.seed);
    if (!r.ok()) return r.status();
    extra["uniform_fallback"] = r->uniform_fallback;
    extra["coarse_level"] = r->coarse_level;
    estimate = std::move(r->normalized);
  } else if (o.algorithm == "shuffle") {
    ShuffleConfig c;
    c.eps = o.eps;
    c.delta = o.delta;
    c.scale = o.scale;
    c.w = o.w;
    c.mode = o.mode;
    c.gamma = o.gamma;
    c.modulus_headroom = o.headroom;
    c.seed = o.seed;
    absl::StatusOr<ShuffleRun> r = SimulateShuffle(data->users, c);
    if (!r.ok()) return r.status();
    extra["wraparound_violations"] = r->wraparound_violations;
    extra["shares"] = r->communication.shares;
    extra["modulus"] = r->communication.modulus;
    estimate = std::move(r->result.normalized);
  }
  Dataset out;
  out.grid = data->grid;
  out.user_ids = {"aggregate"};
  out.users = {*std::move(estimate)};
  if (absl::Status s = WriteDatasetCsv(o.out, out); !s.ok()) return s;
  return WriteManifest(ManifestPathFor(o.out),
                       {{"command", "aggregate"},
                        {"input", o.input},
                        {"algorithm", o.algorithm},
                        {"eps", o.eps},
                        {"w", o.w},
                        {"gamma", GammaJson(o.gamma)},
                        {"mode", ModeName(o.mode)},
                        {"seed", o.seed},
                        {"threshold_pct", o.threshold.has_value()
                                              ? json(*o.threshold)
                                              : json(nullptr)},
                        {"B", o.scale},
                        {"delta", o.delta},
                        {"modulus_headroom", o.headroom},
                        {"users", data->users.size()},
                        {"delta_grid", data->grid.side()},
                        {"details", extra},
                        {"outputs", {o.out}}});
}

// ---------------------------------------------------------------- heatmap

struct HeatmapOptions {
  std::string input;
  std::string out;
  std::string csv;
  double sigma = 0.05;
  int32_t width = 0;
  int32_t height = 0;
};

absl::Status RunHeatmap(const HeatmapOptions& o) {
  absl::StatusOr<Dataset> data = ReadDatasetCsv(o.input);
  if (!data.ok()) return data.status();
  if (data->users.empty()) return absl::InvalidArgumentError("no users in input");
  absl::StatusOr<SparseDist> sum = SumDists(data->users);
  if (!sum.ok()) return sum.status();
  const SparseDist mean =
      sum->Scaled(1.0 / static_cast<double>(data->users.size()));
  const int32_t side = data->grid.side();
  const Region region{o.width > 0 ? o.width : side,
                      o.height > 0 ? o.height : side};
  absl::StatusOr<HeatmapGrid> map =
      RenderHeatmap(MaskToRegion(mean, region), o.sigma, region);
  if (!map.ok()) return map.status();
  json outputs = {o.out};
  if (absl::Status s = WritePgm(o.out, *map); !s.ok()) return s;
  if (!o.csv.empty()) {
    if (absl::Status s = WriteHeatmapCsv(o.csv, *map); !s.ok()) return s;
    outputs.push_back(o.csv);
  }
  return WriteManifest(ManifestPathFor(o.out),
                       {{"command", "heatmap"},
                        {"input", o.input},
                        {"sigma", o.sigma},
                        {"width", region.width},
                        {"height", region.height},
                        {"delta_grid", side},
                        {"outputs", outputs}});
}

// ---------------------------------------------------------------- metrics

struct MetricsOptions {
  std::string a;
  std::string b;
  std::string out;
  size_t exact_emd_support = MetricOptions{}.exact_emd_support;
};

absl::Status RunMetrics(const MetricsOptions& o) {
  absl::StatusOr<HeatmapGrid> a = ReadHeatmap(o.a);
  if (!a.ok()) return a.status();
  absl::StatusOr<HeatmapGrid> b = ReadHeatmap(o.b);
  if (!b.ok()) return b.status();
  MetricOptions options;
  options.exact_emd_support = o.exact_emd_support;
  absl::StatusOr<MetricSet> m = CompareHeatmaps(*a, *b, options);
  if (!m.ok()) return m.status();
  const std::string text = absl::StrFormat(
      "sim,pearson,kl,emd,emd_is_surrogate\n%.9g,%.9g,%.9g,%.9g,%d\n", m->sim,
      m->pearson, m->kl, m->emd, m->emd_is_surrogate ? 1 : 0);
  std::cout << text;
  if (o.out.empty()) return absl::OkStatus();
  if (absl::Status s = WriteText(o.out, text); !s.ok()) return s;
  return WriteManifest(ManifestPathFor(o.out),
                       {{"command", "metrics"},
                        {"a", o.a},
                        {"b", o.b},
                        {"exact_emd_support", o.exact_emd_support},
                        {"outputs", {o.out}}});
}

// ---------------------------------------------------------------- shuffle-sim

struct ShuffleOptions {
  std::vector<int64_t> scales = {256};
  double eps = 1.0;
  double delta = 1e-5;
  int64_t users = 0;
  int64_t delta_grid = 256;
  int64_t w = 20;
  std::optional<double> gamma;
  AggregationMode mode = AggregationMode::kExperiment;
  int64_t headroom = 1;
  uint64_t seed = 0;
  double sigma = 0.05;
  std::string input;
  std::string out;
  std::string metrics_out;
};

absl::Status RunShuffle(const ShuffleOptions& o) {
  std::shared_ptr<Dataset> data;
  int64_t side = o.delta_grid;
  int64_t n = o.users;
  if (!o.input.empty()) {
    absl::StatusOr<Dataset> d = ReadDatasetCsv(o.input);
    if (!d.ok()) return d.status();
    data = std::make_shared<Dataset>(*std::move(d));
    side = data->grid.side();
    n = static_cast<int64_t>(data->users.size());
  }
  if (n < 2) return absl::InvalidArgumentError("--n (or --input) must give at least 2 users");
  absl::StatusOr<Grid> grid = Grid::Create(side);
  if (!grid.ok()) return grid.status();
  ShuffleConfig c;
  c.eps = o.eps;
  c.delta = o.delta;
  c.w = o.w;
  c.gamma = o.gamma;
  c.mode = o.mode;
  c.modulus_headroom = o.headroom;
  c.seed = o.seed;

  std::string comm = "B,r,m,q,messages_per_user,bytes_per_user\n";
  std::string metrics =
      "algorithm,B,sim,pearson,kl,emd,emd_is_surrogate,wraparound_violations\n";
  std::optional<HeatmapGrid> truth;
  if (data != nullptr) {
    const SparseDist mean = SumDists(data->users)->Scaled(1.0 / n);
    absl::StatusOr<HeatmapGrid> t = RenderHeatmap(mean, o.sigma);
    if (!t.ok()) return t.status();
    truth = *std::move(t);
    AggregationConfig central;
    central.eps = o.eps;
    central.w = o.w;
    central.gamma = o.gamma;
    central.mode = o.mode;
    central.seed = o.seed;
    absl::StatusOr<AggregateResult> r = AggregateCentral(data->users, central);
    if (!r.ok()) return r.status();
    absl::StatusOr<HeatmapGrid> h = RenderHeatmap(r->normalized, o.sigma);
    if (!h.ok()) return h.status();
    absl::StatusOr<MetricSet> m = CompareHeatmaps(*truth, *h);
    if (!m.ok()) return m.status();
    absl::StrAppendFormat(&metrics, "central,,%.9g,%.9g,%.9g,%.9g,%d,0\n",
                          m->sim, m->pearson, m->kl, m->emd,
                          m->emd_is_surrogate ? 1 : 0);
  }
  for (int64_t b : o.scales) {
    c.scale = b;
    absl::StatusOr<ShuffleParams> p = MakeShuffleParams(*grid, n, c);
    if (!p.ok()) return p.status();
    const Communication cc = CommunicationCost(*p);
    absl::StrAppendFormat(&comm, "%d,%d,%d,%d,%d,%d\n", cc.scale, cc.shares,
                          cc.measurements, cc.modulus, cc.messages_per_user,
                          cc.bytes_per_user);
    if (data == nullptr) continue;
    absl::StatusOr<ShuffleRun> run = SimulateShuffle(data->users, c);
    if (!run.ok()) return run.status();
    absl::StatusOr<HeatmapGrid> h =
        RenderHeatmap(run->result.normalized, o.sigma);
    if (!h.ok()) return h.status();
    absl::StatusOr<MetricSet> m = CompareHeatmaps(*truth, *h);
    if (!m.ok()) return m.status();
    absl::StrAppendFormat(&metrics, "shuffle,%d,%.9g,%.9g,%.9g,%.9g,%d,%d\n", b,
                          m->sim, m->pearson, m->kl, m->emd,
                          m->emd_is_surrogate ? 1 : 0,
                          run->wraparound_violations);
  }
  std::cout << comm;
  json outputs = json::array();
  if (!o.out.empty()) {
    if (absl::Status s = WriteText(o.out, comm); !s.ok()) return s;
    outputs.push_back(o.out);
  }
  if (data != nullptr) {
    if (o.metrics_out.empty()) {
      std::cout << metrics;
    } else {
      if (absl::Status s = WriteText(o.metrics_out, metrics); !s.ok()) return s;
      outputs.push_back(o.metrics_out);
    }
  }
  if (outputs.empty()) return absl::OkStatus();
  return WriteManifest(ManifestPathFor(outputs[0].get<std::string>()),
                       {{"command", "shuffle-sim"},
                        {"B", o.scales},
                        {"eps", o.eps},
                        {"delta", o.delta},
                        {"n", n},
                        {"delta_grid", side},
                        {"w", o.w},
                        {"gamma", GammaJson(o.gamma)},
                        {"mode", ModeName(o.mode)},
                        {"modulus_headroom", o.headroom},
                        {"seed", o.seed},
                        {"sigma", o.sigma},
                        {"input", o.input},
                        {"outputs", outputs}});
}

// ---------------------------------------------------------------- coreset-check

struct CoresetOptions {
  std::string input;
  std::string out;
  std::vector<int> ks = {1, 2};
  std::vector<double> eps = {1.0};
  double lambda = 0.0;
  int64_t w = 20;
  std::optional<double> gamma;
  AggregationMode mode = AggregationMode::kExperiment;
  int candidate_level = 2;
  int trials = 20;
  uint64_t seed = 0;
};

absl::Status RunCoreset(const CoresetOptions& o) {
  absl::StatusOr<Dataset> data = ReadDatasetCsv(o.input);
  if (!data.ok()) return data.status();
  std::vector<GridPoint> points;
  for (size_t j = 0; j < data->users.size(); ++j) {
    if (data->users[j].size() != 1) {
      return absl::InvalidArgumentError(absl::StrCat(
          "user ", data->user_ids[j], " is not a single point; coreset-check "
          "expects one point per user"));
    }
    points.push_back(data->users[j].entries()[0].point);
  }
  if (points.empty()) return absl::InvalidArgumentError("no users in input");
  if (o.trials < 1) return absl::InvalidArgumentError("--trials must be >= 1");
  const std::vector<GridPoint> candidates =
      CandidateCenters(data->grid, o.candidate_level);
  std::string csv = "k,lambda,eps,empirical_kappa,fitted_C\n";
  for (double eps : o.eps) {
    for (int k : o.ks) {
      double total = 0.0;
      for (int t = 0; t < o.trials; ++t) {
        AggregationConfig c;
        c.eps = eps;
        c.w = o.w;
        c.gamma = o.gamma;
        c.mode = o.mode;
        c.seed = DeriveSeed({o.seed, static_cast<uint64_t>(t)});
        absl::StatusOr<SparseDist> core = Coreset(data->grid, points, c);
        if (!core.ok()) return core.status();
        absl::StatusOr<CoresetReport> r = CoresetCheck(
            data->grid, points, *core, k, o.lambda, eps, candidates);
        if (!r.ok()) return r.status();
        total += r->kappa;
      }
      const double kappa = total / o.trials;
      absl::StrAppendFormat(&csv, "%d,%g,%g,%.9g,%.9g\n", k, o.lambda, eps,
                            kappa, kappa * eps / std::sqrt(k));
    }
  }
  std::cout << csv;
  if (o.out.empty()) return absl::OkStatus();
  if (absl::Status s = WriteText(o.out, csv); !s.ok()) return s;
  return WriteManifest(ManifestPathFor(o.out),
                       {{"command", "coreset-check"},
                        {"input", o.input},
                        {"k", o.ks},
                        {"eps", o.eps},
                        {"lambda", o.lambda},
                        {"w", o.w},
                        {"gamma", GammaJson(o.gamma)},
                        {"mode", ModeName(o.mode)},
                        {"candidate_level", o.candidate_level},
                        {"trials", o.trials},
                        {"seed", o.seed},
                        {"outputs", {o.out}}});
}

// ---------------------------------------------------------------- sweep

struct SweepOptions {
  SweepConfig config;
  std::vector<int64_t> deltas = {256};
  std::string input;
  std::string region;
  std::string out;
};

absl::Status RunSweepCommand(SweepOptions o) {
  SweepConfig& c = o.config;
  c.levels.clear();
  for (int64_t d : o.deltas) {
    absl::StatusOr<int> l = LevelsForSide(d);
    if (!l.ok()) return l.status();
    c.levels.push_back(*l);
  }
  if (!o.input.empty()) {
    absl::StatusOr<Dataset> d = ReadDatasetCsv(o.input);
    if (!d.ok()) return d.status();
    c.dataset = std::make_shared<Dataset>(*std::move(d));
  }
  if (!o.region.empty()) {
    std::vector<std::string> parts = absl::StrSplit(o.region, 'x');
    Region r;
    if (parts.size() != 2 || !absl::SimpleAtoi(parts[0], &r.width) ||
        !absl::SimpleAtoi(parts[1], &r.height)) {
      return absl::InvalidArgumentError("--region takes WIDTHxHEIGHT, e.g. 320x240");
    }
    c.region = r;
  }
  c.workers = WorkersFromEnv();
  absl::StatusOr<std::vector<SweepRow>> rows = RunSweep(c);
  if (!rows.ok()) return rows.status();
  int failures = 0;
  for (const SweepRow& r : *rows) {
    if (r.error.empty()) continue;
    ++failures;
    std::cerr << r.run_id << " trial " << r.trial << " " << r.algorithm
              << ": " << r.error << "\n";
  }
  const std::vector<SummaryRow> summary = Summarize(*rows);
  const std::filesystem::path out(o.out);
  const std::string summary_path =
      (out.parent_path() / (out.stem().string() + "_summary.csv")).string();
  if (absl::Status s = WriteText(o.out, SweepCsv(*rows)); !s.ok()) return s;
  if (absl::Status s = WriteText(summary_path, SummaryCsv(summary)); !s.ok()) {
    return s;
  }
  return WriteManifest(
      ManifestPathFor(o.out),
      {{"command", "sweep"},
       {"eps", c.eps},
       {"n", c.users},
       {"delta_grid", o.deltas},
       {"w", c.w},
       {"gamma", GammaJson(c.gamma)},
       {"mode", ModeName(c.mode)},
       {"sigma", c.sigma},
       {"trials", c.trials},
       {"seed", c.seed},
       {"thresholds_pct", c.thresholds},
       {"dense", c.dense},
       {"shuffle_B", c.shuffle_scales},
       {"shuffle_delta", c.shuffle_delta},
       {"gaussians", c.gaussians},
       {"samples_per_user", c.samples_per_user},
       {"mixture_seed", c.mixture_seed},
       {"input", o.input},
       {"region", o.region},
       {"exact_emd_support", c.exact_emd_support},
       {"record_timing", c.record_timing},
       {"failed_rows", failures},
       {"outputs", {o.out, summary_path}}});
}

// ---------------------------------------------------------------- wiring

void AddMechanismFlags(CLI::App* cmd, double* eps, int64_t* w,
                       std::optional<double>* gamma, AggregationMode* mode,
                       uint64_t* seed) {
  cmd->add_option("--eps", *eps, "privacy budget")->check(CLI::PositiveNumber);
  cmd->add_option("--w", *w, "cells kept per level")->check(CLI::PositiveNumber);
  cmd->add_option("--gamma", *gamma, "budget decay factor (default by mode)");
  cmd->add_option("--mode", *mode, "theory or experiment")
      ->transform(CLI::CheckedTransformer(kModes, CLI::ignore_case));
  cmd->add_option("--seed", *seed, "random seed");
}

int Main(int argc, char** argv) {
  CLI::App app{"Private aggregation of grid distributions under EMD", "dpemd"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  std::function<absl::Status()> run;

  SynthOptions synth;
  CLI::App* s = app.add_subcommand("synth", "generate Gaussian-mixture users");
  s->add_option("--gaussians", synth.gaussians)->check(CLI::PositiveNumber);
  s->add_option("--samples-per-user", synth.samples_per_user)
      ->check(CLI::PositiveNumber);
  s->add_option("--users,-n", synth.users)->check(CLI::PositiveNumber);
  s->add_option("--delta", synth.delta, "grid side, a power of two");
  s->add_option("--mixture-seed", synth.mixture_seed);
  s->add_option("--seed", synth.seed);
  s->add_option("--out", synth.out, "dataset CSV")->required();
  s->callback([&] { run = [&] { return RunSynth(synth); }; });

  IngestOptions ingest;
  CLI::App* i = app.add_subcommand("ingest", "check-in file to cell datasets");
  i->add_option("--input", ingest.input, "tab-separated, plain or gzip")
      ->required()
      ->check(CLI::ExistingFile);
  i->add_option("--out-dir", ingest.out_dir)->required();
  i->add_option("--bbox", ingest.bbox, "lon_min,lon_max,lat_min,lat_max")
      ->delimiter(',')
      ->expected(4);
  i->add_option("--coarse", ingest.coarse)->check(CLI::PositiveNumber);
  i->add_option("--top", ingest.top)->check(CLI::PositiveNumber);
  i->add_option("--delta", ingest.delta, "grid side per cell");
  i->add_option("--min-users", ingest.min_users);
  i->add_option("--from", ingest.date_from, "inclusive ISO-8601 lower bound");
  i->add_option("--to", ingest.date_to, "inclusive ISO-8601 upper bound");
  i->callback([&] { run = [&] { return RunIngest(ingest); }; });

  AggregateOptions agg;
  CLI::App* a = app.add_subcommand("aggregate", "private estimate of the mean");
  a->add_option("--input", agg.input)->required()->check(CLI::ExistingFile);
  a->add_option("--out", agg.out)->required();
  a->add_option("--algorithm", agg.algorithm)
      ->check(CLI::IsMember({"ours", "baseline", "dense", "shuffle"}));
  AddMechanismFlags(a, &agg.eps, &agg.w, &agg.gamma, &agg.mode, &agg.seed);
  a->add_option("--threshold", agg.threshold, "baseline: percent of cells kept")
      ->check(CLI::Range(0.0, 100.0));
  a->add_option("--B", agg.scale, "shuffle: rounding scale")
      ->check(CLI::PositiveNumber);
  a->add_option("--delta", agg.delta, "shuffle: privacy delta");
  a->add_option("--headroom", agg.headroom, "shuffle: modulus multiplier")
      ->check(CLI::PositiveNumber);
  a->callback([&] { run = [&] { return RunAggregate(agg); }; });

  HeatmapOptions heat;
  CLI::App* h = app.add_subcommand("heatmap", "render the mean of a dataset");
  h->add_option("--input", heat.input)->required()->check(CLI::ExistingFile);
  h->add_option("--out", heat.out, "PGM output")->required();
  h->add_option("--csv", heat.csv, "also write the values as CSV");
  h->add_option("--sigma", heat.sigma, "kernel width, unit-square units")
      ->check(CLI::PositiveNumber);
  h->add_option("--width", heat.width, "render only the first columns");
  h->add_option("--height", heat.height, "render only the first rows");
  h->callback([&] { run = [&] { return RunHeatmap(heat); }; });

  MetricsOptions met;
  CLI::App* m = app.add_subcommand("metrics", "compare two heatmaps");
  m->add_option("--a", met.a, "reference heatmap (.pgm or .csv)")
      ->required()
      ->check(CLI::ExistingFile);
  m->add_option("--b", met.b, "estimate heatmap (.pgm or .csv)")
      ->required()
      ->check(CLI::ExistingFile);
  m->add_option("--out", met.out, "CSV output");
  m->add_option("--exact-emd-support", met.exact_emd_support);
  m->callback([&] { run = [&] { return RunMetrics(met); }; });

  ShuffleOptions sh;
  CLI::App* sm = app.add_subcommand("shuffle-sim", "shuffle-model simulation");
  sm->add_option("--B", sh.scales, "rounding scales")->delimiter(',');
  sm->add_option("--eps", sh.eps)->check(CLI::PositiveNumber);
  sm->add_option("--delta", sh.delta);
  sm->add_option("--n", sh.users, "users, when no --input is given");
  sm->add_option("--delta-grid", sh.delta_grid, "grid side, when no --input");
  sm->add_option("--w", sh.w)->check(CLI::PositiveNumber);
  sm->add_option("--gamma", sh.gamma);
  sm->add_option("--mode", sh.mode)
      ->transform(CLI::CheckedTransformer(kModes, CLI::ignore_case));
  sm->add_option("--headroom", sh.headroom)->check(CLI::PositiveNumber);
  sm->add_option("--seed", sh.seed);
  sm->add_option("--sigma", sh.sigma)->check(CLI::PositiveNumber);
  sm->add_option("--input", sh.input, "dataset to run end to end")
      ->check(CLI::ExistingFile);
  sm->add_option("--out", sh.out, "communication CSV");
  sm->add_option("--metrics-out", sh.metrics_out, "accuracy CSV");
  sm->callback([&] { run = [&] { return RunShuffle(sh); }; });

  CoresetOptions core;
  CLI::App* c = app.add_subcommand("coreset-check", "k-median coreset error");
  c->add_option("--input", core.input, "dataset with one point per user")
      ->required()
      ->check(CLI::ExistingFile);
  c->add_option("--out", core.out, "CSV output");
  c->add_option("--k", core.ks)->delimiter(',');
  c->add_option("--eps", core.eps)->delimiter(',');
  c->add_option("--lambda", core.lambda)->check(CLI::NonNegativeNumber);
  c->add_option("--w", core.w)->check(CLI::PositiveNumber);
  c->add_option("--gamma", core.gamma);
  c->add_option("--mode", core.mode)
      ->transform(CLI::CheckedTransformer(kModes, CLI::ignore_case));
  c->add_option("--candidate-level", core.candidate_level,
                "centers are the corners of cells at this level");
  c->add_option("--trials", core.trials);
  c->add_option("--seed", core.seed);
  c->callback([&] { run = [&] { return RunCoreset(core); }; });

  SweepOptions sw;
  CLI::App* w = app.add_subcommand(
      "sweep", "experiment grid; workers from DPEMD_WORKERS");
  w->add_option("--eps", sw.config.eps)->delimiter(',');
  w->add_option("--n", sw.config.users)->delimiter(',');
  w->add_option("--delta", sw.deltas, "grid sides")->delimiter(',');
  w->add_option("--w", sw.config.w)->check(CLI::PositiveNumber);
  w->add_option("--gamma", sw.config.gamma);
  w->add_option("--mode", sw.config.mode)
      ->transform(CLI::CheckedTransformer(kModes, CLI::ignore_case));
  w->add_option("--sigma", sw.config.sigma)->check(CLI::PositiveNumber);
  w->add_option("--trials", sw.config.trials);
  w->add_option("--seed", sw.config.seed);
  w->add_option("--thresholds", sw.config.thresholds, "baseline top-t, percent")
      ->delimiter(',');
  w->add_flag("--dense", sw.config.dense, "include dense aggregation");
  w->add_option("--shuffle-B", sw.config.shuffle_scales,
                "include the shuffle model at these scales")
      ->delimiter(',');
  w->add_option("--shuffle-delta", sw.config.shuffle_delta);
  w->add_option("--gaussians", sw.config.gaussians);
  w->add_option("--samples-per-user", sw.config.samples_per_user);
  w->add_option("--mixture-seed", sw.config.mixture_seed);
  w->add_option("--input", sw.input, "sample users from this dataset")
      ->check(CLI::ExistingFile);
  w->add_option("--region", sw.region, "evaluate WIDTHxHEIGHT only");
  w->add_option("--exact-emd-support", sw.config.exact_emd_support);
  w->add_flag("--record-timing", sw.config.record_timing,
              "fill wall_ms (breaks byte-identical output)");
  w->add_option("--heatmaps", sw.config.heatmap_dir,
                "directory for trial-0 PGM heatmaps");
  w->add_option("--out", sw.out, "per-trial CSV")->required();
  w->callback([&] { run = [&] { return RunSweepCommand(sw); }; });

  CLI11_PARSE(app, argc, argv);
  const absl::Status status = run();
  if (!status.ok()) {
    std::cerr << "dpemd " << app.get_subcommands()[0]->get_name() << ": "
              << status.message() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace
}  // namespace dpemd

int main(int argc, char** argv) { return dpemd::Main(argc, argv); }
