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

// End-to-end acceptance checks. Prints one PASS or FAIL line per criterion.
//
//   acceptance_test [--only=1,7] [--known-failures=3,12]
//
// Exits nonzero when a criterion outside the known-failure list fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "absl/status/statusor.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "dpemd/aggregator.h"
#include "dpemd/clustering.h"
#include "dpemd/datagen.h"
#include "dpemd/distribution.h"
#include "dpemd/emd.h"
#include "dpemd/grid.h"
#include "dpemd/heatmap.h"
#include "dpemd/noise.h"
#include "dpemd/pyramid.h"
#include "dpemd/shuffle.h"
#include "test_oracles.h"

namespace dpemd {
namespace {

using Clock = std::chrono::steady_clock;

constexpr size_t kExact = size_t{1} << 40;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

template <typename T>
const T& Must(const absl::StatusOr<T>& v, const char* what) {
  if (!v.ok()) {
    std::fprintf(stderr, "%s: %s\n", what, v.status().ToString().c_str());
    std::exit(2);
  }
  return *v;
}

double Mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// Least-squares slope of y against 0, 1, 2, ...
double Slope(std::span<const double> y) {
  const double n = y.size();
  const double xbar = (n - 1) / 2;
  const double ybar = Mean(y);
  double num = 0.0;
  double den = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    num += (i - xbar) * (y[i] - ybar);
    den += (i - xbar) * (i - xbar);
  }
  return num / den;
}

std::vector<SparseDist> MixtureUsers(int gaussians, int samples, int64_t n,
                                     int levels, uint64_t mixture_seed,
                                     uint64_t user_seed) {
  MixtureSpec spec = RandomMixture(gaussians, samples, n, levels, mixture_seed);
  spec.seed = user_seed;
  return Must(SynthUsers(spec), "synth").users;
}

HeatmapGrid Heat(const SparseDist& p, double sigma) {
  return Must(RenderHeatmap(p, sigma), "heatmap");
}

MetricSet Compare(const HeatmapGrid& truth, const SparseDist& est,
                  double sigma, size_t exact_support) {
  MetricOptions options;
  options.exact_emd_support = exact_support;
  return Must(CompareHeatmaps(truth, Heat(est, sigma), options), "metrics");
}

SparseDist Ours(std::span<const SparseDist> users, double eps, uint64_t seed) {
  AggregationConfig config;
  config.eps = eps;
  config.seed = seed;
  return Must(AggregateCentral(users, config), "aggregate").normalized;
}

SparseDist Baseline(std::span<const SparseDist> users, double eps,
                    uint64_t seed, std::optional<double> pct = {}) {
  BaselineConfig config;
  config.eps = eps;
  config.seed = seed;
  config.threshold_pct = pct;
  return Must(BaselineLaplace(users, config), "baseline").dist;
}

// Per-k constants C_k = m_k eps / sqrt(k) and their least-squares fit to
// m_k = C sqrt(k) / eps.
struct ConstantFit {
  std::vector<double> per_k;
  double fitted = 0.0;
  double worst = 0.0;  // max |C_k / C - 1|
};

ConstantFit FitConstant(std::span<const int> ks, std::span<const double> means,
                        double eps) {
  ConstantFit f;
  double num = 0.0;
  double den = 0.0;
  for (size_t i = 0; i < ks.size(); ++i) {
    f.per_k.push_back(means[i] * eps / std::sqrt(ks[i]));
    num += means[i] * std::sqrt(ks[i]);
    den += ks[i];
  }
  f.fitted = eps * num / den;
  for (double c : f.per_k) {
    f.worst = std::max(f.worst, std::fabs(c / f.fitted - 1.0));
  }
  return f;
}

std::string Join(std::span<const double> v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    absl::StrAppend(&out, i > 0 ? "/" : "", absl::StrFormat("%.4g", v[i]));
  }
  return out;
}

Verdict ZeroNoiseExact() {
  const auto start = Clock::now();
  const Grid g = Grid::WithLevels(6);
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 1 + trial % 5;
    const double total = 1.0 + trial % 7;
    const SparseDist s = testing::RandomDist(g, k, rng, total);
    AggregationConfig config;
    config.w = 20;
    config.disable_noise = true;
    const SparseDist est = Must(AggregateSum(s, config), "aggregate").unnormalized;
    worst = std::max(worst, Must(Emd(est, s), "emd").cost);
  }
  const double secs = Seconds(start);
  return {worst <= 1e-6 && secs < 30.0,
          absl::StrFormat("max EMD %.3g over 50 inputs, %.1f s", worst, secs)};
}

Verdict BudgetAccounting() {
  std::mt19937_64 rng(102);
  std::uniform_real_distribution<double> eps(0.01, 20.0);
  std::uniform_int_distribution<int> levels(0, 12);
  std::uniform_int_distribution<int64_t> w(1, 5000);
  std::uniform_real_distribution<double> gamma(0.51, 0.99);
  double worst_sum = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double e = eps(rng);
    const NoiseSchedule s =
        Must(BudgetSchedule(e, levels(rng), w(rng), gamma(rng)), "schedule");
    const double sum = std::accumulate(s.epsilons.begin(), s.epsilons.end(), 0.0);
    worst_sum = std::max(worst_sum, std::fabs(sum - e));
  }
  const Grid g = Grid::WithLevels(5);
  double worst_l1 = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<SparseDist> users;
    const int n = 2 + trial % 9;
    for (int j = 0; j < n; ++j) {
      users.push_back(testing::RandomDist(g, 1 + (trial + j) % 6, rng));
    }
    const auto with = CellSumPyramid(g, Must(SumDists(users), "sum").ToDense());
    const auto without = CellSumPyramid(
        g, Must(SumDists(std::span<const SparseDist>(users).first(n - 1)),
                "sum")
               .ToDense());
    for (int i = 0; i <= g.levels(); ++i) {
      double l1 = 0.0;
      for (size_t k = 0; k < with[i].size(); ++k) {
        l1 += std::fabs(with[i][k] - without[i][k]);
      }
      worst_l1 = std::max(worst_l1, l1);
    }
  }
  return {worst_sum <= 1e-12 && worst_l1 <= 1.0 + 1e-9,
          absl::StrFormat("max |sum - eps| %.3g, max per-level change %.12g",
                          worst_sum, worst_l1)};
}

double MeanSingleUserError(const Grid& g, int k, double eps, int trials) {
  std::vector<double> errs;
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(1000 * k + t);
    const SparseDist s = testing::RandomDist(g, k, rng);
    AggregationConfig config;
    config.eps = eps;
    config.w = 20;
    config.seed = static_cast<uint64_t>(t);
    const SparseDist est = Must(AggregateSum(s, config), "aggregate").unnormalized;
    errs.push_back(Must(EmdNorm(g, Must(DenseDifference(s, est), "diff")),
                        "emd norm"));
  }
  return Mean(errs);
}

Verdict ErrorScaling() {
  const auto start = Clock::now();
  const Grid g = Grid::WithLevels(6);
  const std::vector<int> ks = {1, 2, 4};
  std::vector<double> at1;
  std::vector<double> at2;
  for (int k : ks) {
    at1.push_back(MeanSingleUserError(g, k, 1.0, 100));
    at2.push_back(MeanSingleUserError(g, k, 2.0, 100));
  }
  const ConstantFit fit = FitConstant(ks, at1, 1.0);
  const double ratio = std::accumulate(at2.begin(), at2.end(), 0.0) /
                       std::accumulate(at1.begin(), at1.end(), 0.0);
  const double secs = Seconds(start);
  const bool stable = fit.worst <= 0.25;
  const bool inverse = ratio >= 0.4 && ratio <= 0.6;
  return {stable && inverse && secs < 300.0,
          absl::StrFormat("mean error %s for k=1/2/4, C_k %s vs fitted %.4g "
                          "(worst %.0f%%, %s); eps=2 ratio %.3f (%s); %.1f s",
                          Join(at1), Join(fit.per_k), fit.fitted,
                          100 * fit.worst, stable ? "ok" : "outside 25%",
                          ratio, inverse ? "ok" : "outside [0.4, 0.6]", secs)};
}

// Random signed vectors with about 30% nonzero entries. The unbalanced part
// of z pays the slack price 2 in the EMD norm but only 2 - 2^-levels across
// the pyramid rows, so a point mass already exceeds the l1 side. The report
// also checks the bound with that difference added back.
Verdict PyramidExpansion() {
  const Grid g = Grid::WithLevels(3);
  std::mt19937_64 rng(104);
  std::uniform_real_distribution<double> value(-1.0, 1.0);
  std::bernoulli_distribution keep(0.3);
  const double finest = std::ldexp(1.0, -g.levels());
  int violations = 0;
  int corrected_violations = 0;
  double worst_excess = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> z(g.num_points(), 0.0);
    for (double& x : z) {
      if (keep(rng)) x = value(rng);
    }
    const double norm = testing::ReferenceEmdNorm(g, z);
    const double l1 = Must(PyramidL1(g, z), "pyramid l1");
    const double imbalance =
        std::fabs(std::accumulate(z.begin(), z.end(), 0.0));
    if (norm > l1 + 1e-9) {
      ++violations;
      worst_excess = std::max(worst_excess, (norm - l1) / imbalance);
    }
    if (norm > l1 + finest * imbalance + 1e-9) ++corrected_violations;
  }
  const SparseDist point = SparseDist::PointMass(g, {3, 5});
  const double point_norm = testing::ReferenceEmdNorm(g, point.ToDense());
  const double point_l1 = Must(PyramidL1(g, point.ToDense()), "pyramid l1");
  return {violations == 0,
          absl::StrFormat("%d violations in 200 vectors, largest excess %.4f "
                          "x |sum z|; point mass %.4g vs %.4g; with "
                          "2^-levels |sum z| added: %d violations",
                          violations, worst_excess, point_norm, point_l1,
                          corrected_violations)};
}

Verdict NormalizationBound() {
  const Grid g = Grid::WithLevels(4);
  std::mt19937_64 rng(105);
  std::uniform_real_distribution<double> scale(0.7, 1.3);
  int pairs = 0;
  int violations = 0;
  int rejected = 0;
  double worst = 0.0;
  while (pairs < 200) {
    const double n = 2.0 + pairs % 9;
    const SparseDist s = testing::RandomDist(g, 1 + pairs % 5, rng, n);
    const SparseDist est =
        testing::RandomDist(g, 1 + pairs % 6, rng, scale(rng) * n);
    const double zeta =
        Must(EmdNorm(g, Must(DenseDifference(est, s), "diff")), "emd norm");
    if (zeta > n / 2) {
      ++rejected;
      continue;
    }
    ++pairs;
    const double err =
        Must(Emd(Normalize(est).dist, s.Scaled(1.0 / n)), "emd").cost;
    if (err > 4.0 * zeta / n + 1e-9) ++violations;
    if (zeta > 0) worst = std::max(worst, err / (4.0 * zeta / n));
  }
  return {violations == 0,
          absl::StrFormat("%d violations in 200 pairs (%d redrawn), "
                          "largest error / bound %.3f",
                          violations, rejected, worst)};
}

Verdict HeatmapInequalities() {
  const Grid g = Grid::WithLevels(3);
  std::mt19937_64 rng(106);
  constexpr double kSlack = 1e-4;
  int violations = 0;
  int truncated_violations = 0;
  for (double sigma : {0.05, 0.1}) {
    const int32_t pad = KernelRadius(sigma, g.side());
    for (int trial = 0; trial < 100; ++trial) {
      const SparseDist p = testing::RandomDist(g, 1 + trial % 5, rng);
      const SparseDist q = testing::RandomDist(g, 1 + trial % 4, rng);
      const double emd = Must(Emd(p, q), "emd").cost;
      auto check = [&](const HeatmapGrid& hp, const HeatmapGrid& hq) {
        int bad = 0;
        bad += Must(HeatmapEmdDistance(hp, hq, kExact), "emd").value >
               emd + kSlack;
        bad += KlDivergence(hp.values, hq.values, 1e-12) >
               emd / (2 * sigma * sigma) + kSlack;
        bad += TotalVariation(hp.values, hq.values) >
               std::sqrt(emd) / (2 * sigma) + kSlack;
        return bad;
      };
      violations += check(Must(RenderHeatmapPadded(p, sigma, pad), "pad"),
                          Must(RenderHeatmapPadded(q, sigma, pad), "pad"));
      truncated_violations += check(Heat(p, sigma), Heat(q, sigma));
    }
  }
  return {violations == 0,
          absl::StrFormat("%d violations over 200 padded pairs; "
                          "truncated heatmaps (not asserted): %d",
                          violations, truncated_violations)};
}

Verdict BaselineComparison() {
  const auto start = Clock::now();
  constexpr double kSigma = 0.05;
  const std::vector<double> thresholds = {0.001, 0.01, 0.1, 1.0};
  int emd_wins = 0;
  int sim_wins = 0;
  std::vector<double> ours_emd;
  std::vector<std::vector<double>> top_emd(thresholds.size());
  for (uint64_t d = 0; d < 10; ++d) {
    const std::vector<SparseDist> users = MixtureUsers(10, 10, 200, 8, d, d);
    const HeatmapGrid truth =
        Heat(Must(SumDists(users), "sum").Scaled(1.0 / users.size()), kSigma);
    const MetricSet ours =
        Compare(truth, Ours(users, 1.0, d), kSigma, MetricOptions{}.exact_emd_support);
    const MetricSet base = Compare(truth, Baseline(users, 1.0, d), kSigma,
                                   MetricOptions{}.exact_emd_support);
    emd_wins += ours.emd < base.emd;
    sim_wins += ours.sim > base.sim;
    ours_emd.push_back(ours.emd);
    for (size_t t = 0; t < thresholds.size(); ++t) {
      top_emd[t].push_back(Compare(truth, Baseline(users, 1.0, d, thresholds[t]),
                                   kSigma, MetricOptions{}.exact_emd_support)
                               .emd);
    }
  }
  std::vector<double> top_means;
  for (const auto& v : top_emd) top_means.push_back(Mean(v));
  const double best_top = *std::min_element(top_means.begin(), top_means.end());
  const double ours_mean = Mean(ours_emd);
  const double secs = Seconds(start);
  return {emd_wins >= 8 && sim_wins >= 8 && ours_mean < best_top &&
              secs < 600.0,
          absl::StrFormat("EMD wins %d/10, Similarity wins %d/10, mean EMD "
                          "%.4g vs thresholded %s; %.1f s",
                          emd_wins, sim_wins, ours_mean, Join(top_means),
                          secs)};
}

Verdict ResolutionRobustness() {
  constexpr double kSigma = 0.05;
  std::vector<double> ours;
  std::vector<double> base;
  for (int levels : {6, 7, 8}) {
    const std::vector<SparseDist> users = MixtureUsers(10, 10, 200, levels, 7, 7);
    const HeatmapGrid truth =
        Heat(Must(SumDists(users), "sum").Scaled(1.0 / users.size()), kSigma);
    std::vector<double> o;
    std::vector<double> b;
    for (uint64_t t = 0; t < 5; ++t) {
      o.push_back(Compare(truth, Ours(users, 10.0, t), kSigma, kExact).emd);
      b.push_back(Compare(truth, Baseline(users, 10.0, t), kSigma, kExact).emd);
    }
    ours.push_back(Mean(o));
    base.push_back(Mean(b));
  }
  const auto [lo, hi] = std::minmax_element(ours.begin(), ours.end());
  const double spread = (*hi - *lo) / *lo;
  const bool increasing = base[0] < base[1] && base[1] < base[2];
  return {spread < 0.10 && increasing,
          absl::StrFormat("ours %s (spread %.1f%%), baseline %s at side "
                          "64/128/256",
                          Join(ours), 100 * spread, Join(base))};
}

double SparsityCurveSlope(std::span<const int> gaussians,
                          std::span<const int> samples, std::string* curve) {
  constexpr double kSigma = 0.05;
  std::vector<double> means;
  for (size_t i = 0; i < samples.size(); ++i) {
    std::vector<double> errs;
    for (uint64_t seed = 0; seed < 10; ++seed) {
      const std::vector<SparseDist> users =
          MixtureUsers(gaussians[i], samples[i], 200, 6, seed, seed);
      const HeatmapGrid truth =
          Heat(Must(SumDists(users), "sum").Scaled(1.0 / users.size()), kSigma);
      errs.push_back(Compare(truth, Ours(users, 1.0, seed), kSigma, kExact).emd);
    }
    means.push_back(Mean(errs));
  }
  *curve = Join(means);
  return Slope(means);
}

Verdict SparsityStudy() {
  const std::vector<int> samples = {1, 3, 10, 30};
  const std::vector<int> fixed = {20, 20, 20, 20};
  const std::vector<int> scaled = {5, 10, 20, 80};
  std::string fixed_curve;
  std::string scaled_curve;
  const double a = SparsityCurveSlope(fixed, samples, &fixed_curve);
  const double b = SparsityCurveSlope(scaled, samples, &scaled_curve);
  return {a < b, absl::StrFormat("20 fixed Gaussians: EMD %s slope %.4g; "
                                 "5..80 Gaussians: EMD %s slope %.4g",
                                 fixed_curve, a, scaled_curve, b)};
}

// P(K = k) for the discrete Laplace law with parameter a = e^-eps.
double DiscreteLaplacePmf(int64_t k, double eps) {
  const double a = std::exp(-eps);
  return (1 - a) / (1 + a) * std::pow(a, std::llabs(k));
}

Verdict ShuffleModel() {
  // Share sums.
  const Grid g4 = Grid::WithLevels(4);
  int bad_sums = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    std::vector<SparseDist> users = MixtureUsers(5, 3, 12, 4, seed, seed);
    ShuffleConfig config;
    config.eps = 5.0;
    config.seed = seed;
    const ShuffleParams params =
        Must(MakeShuffleParams(g4, users.size(), config), "params");
    Rng rng({seed, 99});
    for (const SparseDist& u : users) {
      const EncodedClient enc = Must(EncodeClient(u, params, rng), "encode");
      std::vector<int64_t> sums(params.measurements, 0);
      for (const ShuffleMessage& m : enc.messages) {
        sums[m.coord] = (sums[m.coord] + m.share) % params.modulus;
      }
      for (int64_t c = 0; c < params.measurements; ++c) {
        const int64_t want =
            ((enc.noisy[c] % params.modulus) + params.modulus) % params.modulus;
        bad_sums += sums[c] != want;
      }
    }
  }

  // Aggregate noise law.
  constexpr int kDraws = 20000;
  constexpr int64_t kUsers = 50;
  Rng rng({106, 0});
  std::map<int64_t, int64_t> counts;
  for (int i = 0; i < kDraws; ++i) {
    int64_t total = 0;
    for (int64_t j = 0; j < kUsers; ++j) total += rng.DiscreteLaplaceShare(kUsers, 1.0);
    ++counts[total];
  }
  int64_t reach = 0;
  while (kDraws * DiscreteLaplacePmf(reach + 1, 1.0) >= 5.0) ++reach;
  double stat = 0.0;
  for (int64_t k = -reach; k <= reach; ++k) {
    double expected = kDraws * DiscreteLaplacePmf(k, 1.0);
    int64_t observed = counts.count(k) ? counts[k] : 0;
    if (k == -reach || k == reach) {
      // Fold the tail into the edge bin.
      const double a = std::exp(-1.0);
      expected = kDraws * DiscreteLaplacePmf(reach, 1.0) / (1 - a);
      for (const auto& [v, c] : counts) {
        if ((k < 0 && v < k) || (k > 0 && v > k)) observed += c;
      }
    }
    stat += (observed - expected) * (observed - expected) / expected;
  }
  const boost::math::chi_squared law(static_cast<double>(2 * reach));
  const double p_value = boost::math::cdf(boost::math::complement(law, stat));

  // End-to-end agreement with the central mechanism at B = 256.
  constexpr double kSigma = 0.05;
  std::vector<double> central[4];
  std::vector<double> shuffled[4];
  for (uint64_t d = 0; d < 5; ++d) {
    const std::vector<SparseDist> users = MixtureUsers(10, 10, 50, 4, d, d);
    const HeatmapGrid truth =
        Heat(Must(SumDists(users), "sum").Scaled(1.0 / users.size()), kSigma);
    for (uint64_t t = 0; t < 100; ++t) {
      ShuffleConfig config;
      config.eps = 5.0;
      config.scale = 256;
      config.seed = t;
      const MetricSet c = Compare(truth, Ours(users, 5.0, t), kSigma, kExact);
      const MetricSet s = Compare(
          truth, Must(SimulateShuffle(users, config), "shuffle").result.normalized,
          kSigma, kExact);
      const double cv[] = {c.sim, c.pearson, c.kl, c.emd};
      const double sv[] = {s.sim, s.pearson, s.kl, s.emd};
      for (int m = 0; m < 4; ++m) {
        central[m].push_back(cv[m]);
        shuffled[m].push_back(sv[m]);
      }
    }
  }
  std::vector<double> gaps;
  for (int m = 0; m < 4; ++m) {
    const double c = Mean(central[m]);
    gaps.push_back(std::fabs(Mean(shuffled[m]) - c) / std::fabs(c));
  }
  const double worst_gap = *std::max_element(gaps.begin(), gaps.end());

  // Communication against the closed form.
  bool comm_ok = true;
  int r_reference = 0;
  for (int64_t scale : {1, 16, 256, 4096}) {
    ShuffleConfig config;
    config.eps = 5.0;
    config.delta = 1e-5;
    config.scale = scale;
    config.mode = AggregationMode::kTheory;
    const ShuffleParams params = Must(MakeShuffleParams(g4, 50, config), "params");
    const Communication comm = CommunicationCost(params);
    const double m = static_cast<double>(params.measurements);
    const double q = static_cast<double>(scale * 50);
    const int r = static_cast<int>(std::ceil(
        (2 * std::log(std::exp(5.0) + 1) + 2 * std::log(m / 1e-5) +
         std::log(q)) / std::log(50.0) + 1));
    const int64_t bits = static_cast<int64_t>(r) * params.measurements *
                         static_cast<int64_t>(std::ceil(std::log2(m * q)));
    comm_ok = comm_ok && comm.shares == r && comm.bits_per_user == bits &&
              comm.modulus == scale * 50;
    if (scale == 256) {
      r_reference = r;
      comm_ok = comm_ok && r == 15 && params.measurements == 341;
    }
  }

  const bool pass = bad_sums == 0 && p_value > 0.01 && worst_gap <= 0.02 &&
                    comm_ok;
  return {pass,
          absl::StrFormat("share-sum mismatches %d; chi-square p %.3f "
                          "(%d bins); shuffle vs central gaps "
                          "sim/pearson/kl/emd %s; r=%d, communication %s",
                          bad_sums, p_value, 2 * reach + 1, Join(gaps),
                          r_reference, comm_ok ? "matches" : "mismatch")};
}

Verdict DenseScaling() {
  const Grid g = Grid::WithLevels(6);
  std::vector<double> scaled;
  std::vector<double> medians;
  for (int64_t n : {64, 256, 1024}) {
    std::vector<double> errs;
    for (uint64_t t = 0; t < 20; ++t) {
      const std::vector<SparseDist> users = MixtureUsers(10, 10, n, 6, 11, t);
      const SparseDist truth =
          Must(SumDists(users), "sum").Scaled(1.0 / users.size());
      const DenseResult est = Must(AggregateDense(users, 1.0, t), "dense");
      errs.push_back(Must(LatticeEmd(truth.ToDense(), est.normalized.ToDense(),
                                     g.side(), g.side(), g.spacing()),
                          "lattice emd"));
    }
    medians.push_back(Median(errs));
    scaled.push_back(medians.back() * std::sqrt(static_cast<double>(n)));
  }
  double log_sum = 0.0;
  for (double s : scaled) log_sum += std::log(s);
  const double constant = std::exp(log_sum / scaled.size());
  bool pass = true;
  for (double s : scaled) {
    pass = pass && s <= 1.5 * constant && s >= constant / 1.5;
  }
  return {pass, absl::StrFormat("median EMD %s at n=64/256/1024, "
                                "sqrt(n)*EMD %s vs constant %.4g",
                                Join(medians), Join(scaled), constant)};
}

Verdict CoresetStability() {
  const Grid g = Grid::WithLevels(6);
  const std::vector<SparseDist> sites = MixtureUsers(10, 1, 3, 6, 12, 12);
  std::vector<GridPoint> points;
  for (int i = 0; i < 200; ++i) {
    points.push_back(sites[i % 3].entries()[0].point);
  }
  std::vector<GridPoint> doubled = points;
  doubled.insert(doubled.end(), points.begin(), points.end());
  const std::vector<GridPoint> candidates = CandidateCenters(g, 2);
  const std::vector<int> ks = {1, 2};
  std::vector<double> kappa;
  std::vector<double> kappa_doubled;
  for (int k : ks) {
    std::vector<double> a;
    std::vector<double> b;
    for (uint64_t t = 0; t < 20; ++t) {
      AggregationConfig config;
      config.eps = 1.0;
      config.w = 20;
      config.seed = t;
      const SparseDist core = Must(Coreset(g, points, config), "coreset");
      const SparseDist core2 = Must(Coreset(g, doubled, config), "coreset");
      a.push_back(Must(CoresetCheck(g, points, core, k, 0.0, 1.0, candidates),
                       "check").kappa);
      b.push_back(Must(CoresetCheck(g, doubled, core2, k, 0.0, 1.0, candidates),
                       "check").kappa);
    }
    kappa.push_back(Mean(a));
    kappa_doubled.push_back(Mean(b));
  }
  const ConstantFit fit = FitConstant(ks, kappa, 1.0);
  double drift = 0.0;
  for (size_t i = 0; i < ks.size(); ++i) {
    drift = std::max(drift, std::fabs(kappa_doubled[i] / kappa[i] - 1.0));
  }
  const bool stable = fit.worst <= 0.30;
  const bool n_free = drift <= 0.10;
  return {stable && n_free,
          absl::StrFormat("kappa %s for k=1/2, C_k %s vs fitted %.4g "
                          "(worst %.0f%%, %s); doubled n changes kappa by "
                          "%.1f%% (%s)",
                          Join(kappa), Join(fit.per_k), fit.fitted,
                          100 * fit.worst, stable ? "ok" : "outside 30%",
                          100 * drift, n_free ? "ok" : "outside 10%")};
}

std::set<int> ParseList(absl::string_view text) {
  std::set<int> out;
  for (absl::string_view part : absl::StrSplit(text, ',', absl::SkipEmpty())) {
    int v = 0;
    if (!absl::SimpleAtoi(part, &v)) {
      std::fprintf(stderr, "bad criterion number '%s'\n",
                   std::string(part).c_str());
      std::exit(2);
    }
    out.insert(v);
  }
  return out;
}

}  // namespace
}  // namespace dpemd

int main(int argc, char** argv) {
  using dpemd::Verdict;
  std::set<int> only;
  std::set<int> known;
  for (int i = 1; i < argc; ++i) {
    const std::string_view arg = argv[i];
    if (arg.starts_with("--only=")) {
      only = dpemd::ParseList(std::string(arg.substr(7)));
    } else if (arg.starts_with("--known-failures=")) {
      known = dpemd::ParseList(std::string(arg.substr(17)));
    } else {
      std::fprintf(stderr,
                   "usage: %s [--only=N,...] [--known-failures=N,...]\n",
                   argv[0]);
      return 2;
    }
  }
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria =
      {{"zero-noise exactness", dpemd::ZeroNoiseExact},
       {"budget accounting", dpemd::BudgetAccounting},
       {"error scaling in k and eps", dpemd::ErrorScaling},
       {"EMD norm below pyramid l1", dpemd::PyramidExpansion},
       {"normalization bound", dpemd::NormalizationBound},
       {"heatmap inequalities", dpemd::HeatmapInequalities},
       {"baseline comparison", dpemd::BaselineComparison},
       {"resolution robustness", dpemd::ResolutionRobustness},
       {"sparsity study", dpemd::SparsityStudy},
       {"shuffle model", dpemd::ShuffleModel},
       {"dense aggregation rate", dpemd::DenseScaling},
       {"coreset constant", dpemd::CoresetStability}};
  int unexpected = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.contains(id)) continue;
    const Verdict v = criteria[i].second();
    std::string note;
    if (!v.pass && known.contains(id)) {
      note = " [known failure]";
    } else if (!v.pass) {
      ++unexpected;
    } else if (known.contains(id)) {
      note = " [listed as known failure but passed]";
    }
    std::printf("%s %2d %s: %s%s\n", v.pass ? "PASS" : "FAIL", id,
                criteria[i].first, v.detail.c_str(), note.c_str());
    std::fflush(stdout);
  }
  return unexpected == 0 ? 0 : 1;
}
