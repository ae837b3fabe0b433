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

#include "dpemd/datagen.h"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "dpemd/noise.h"

namespace dpemd {
namespace {

constexpr int kMaxRedraws = 1000000;
constexpr uint64_t kMixtureStream = 0;
constexpr uint64_t kUserStreamBase = 1;

struct Cholesky {
  double l11, l21, l22;
};

absl::StatusOr<Cholesky> Factor(const Gaussian2d& g) {
  if (!(g.var_x > 0.0) || !(g.var_y > 0.0) ||
      !(g.var_x * g.var_y - g.cov_xy * g.cov_xy > 0.0)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "covariance [[", g.var_x, ", ", g.cov_xy, "], [", g.cov_xy, ", ",
        g.var_y, "]] is not positive definite"));
  }
  const double l11 = std::sqrt(g.var_x);
  const double l21 = g.cov_xy / l11;
  return Cholesky{l11, l21, std::sqrt(g.var_y - l21 * l21)};
}

}  // namespace

MixtureSpec RandomMixture(int num_gaussians, int samples_per_user,
                          int64_t users, int levels, uint64_t seed) {
  MixtureSpec spec;
  spec.samples_per_user = samples_per_user;
  spec.users = users;
  spec.levels = levels;
  spec.seed = seed;
  Rng rng({seed, kMixtureStream});
  for (int c = 0; c < num_gaussians; ++c) {
    Gaussian2d g;
    g.mean_x = 0.1 + 0.8 * rng.Uniform();
    g.mean_y = 0.1 + 0.8 * rng.Uniform();
    const double u1 = 1e-4 + (1e-2 - 1e-4) * rng.Uniform();
    const double u2 = 1e-4 + (1e-2 - 1e-4) * rng.Uniform();
    const double theta = 2.0 * std::numbers::pi * rng.Uniform();
    const double c0 = std::cos(theta);
    const double s0 = std::sin(theta);
    g.var_x = c0 * c0 * u1 + s0 * s0 * u2;
    g.var_y = s0 * s0 * u1 + c0 * c0 * u2;
    g.cov_xy = c0 * s0 * (u1 - u2);
    spec.components.push_back(g);
  }
  return spec;
}

double SupportFraction(std::span<const SparseDist> users) {
  if (users.empty()) return 0.0;
  const Grid& grid = users[0].grid();
  std::vector<bool> seen(grid.num_points(), false);
  size_t count = 0;
  for (const SparseDist& u : users) {
    for (const SparseDist::Entry& e : u.entries()) {
      const size_t k = grid.Index(e.point);
      if (!seen[k]) {
        seen[k] = true;
        ++count;
      }
    }
  }
  return static_cast<double>(count) / static_cast<double>(grid.num_points());
}

absl::StatusOr<SyntheticData> SynthUsers(const MixtureSpec& spec) {
  if (spec.components.empty() || spec.samples_per_user < 1 || spec.users < 1) {
    return absl::InvalidArgumentError(
        "need at least one component, sample and user");
  }
  if (spec.levels < 0 || spec.levels > kMaxGridLevels) {
    return absl::InvalidArgumentError(absl::StrCat("bad levels ", spec.levels));
  }
  std::vector<Cholesky> factors;
  for (const Gaussian2d& g : spec.components) {
    absl::StatusOr<Cholesky> f = Factor(g);
    if (!f.ok()) return f.status();
    factors.push_back(*f);
  }
  const Grid grid = Grid::WithLevels(spec.levels);
  SyntheticData out;
  out.users.reserve(spec.users);
  for (int64_t j = 0; j < spec.users; ++j) {
    Rng rng({spec.seed, kUserStreamBase + static_cast<uint64_t>(j)});
    std::vector<SparseDist::Entry> entries;
    const double mass = 1.0 / spec.samples_per_user;
    for (int s = 0; s < spec.samples_per_user; ++s) {
      const size_t c = rng.Below(spec.components.size());
      const Gaussian2d& g = spec.components[c];
      const Cholesky& f = factors[c];
      int tries = 0;
      double x;
      double y;
      do {
        if (++tries > kMaxRedraws) {
          return absl::FailedPreconditionError(absl::StrCat(
              "component ", c, " almost never lands in the unit square"));
        }
        const double z1 = rng.StandardNormal();
        const double z2 = rng.StandardNormal();
        x = g.mean_x + f.l11 * z1;
        y = g.mean_y + f.l21 * z1 + f.l22 * z2;
      } while (!(x >= 0.0 && x < 1.0 && y >= 0.0 && y < 1.0));
      absl::StatusOr<GridPoint> p = grid.Snap(x, y);
      if (!p.ok()) return p.status();
      entries.push_back({*p, mass});
    }
    absl::StatusOr<SparseDist> d =
        SparseDist::FromEntries(grid, std::move(entries));
    if (!d.ok()) return d.status();
    out.users.push_back(d->Scaled(1.0 / d->Total()));
  }
  out.sparsity = SupportFraction(out.users);
  return out;
}

ParsedCheckins ParseCheckins(std::istream& in) {
  ParsedCheckins out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++out.lines;
    std::vector<absl::string_view> f = absl::StrSplit(line, '\t');
    CheckinRecord r;
    if (f.size() < 4 || f.size() > 5 || f[0].empty() ||
        !absl::SimpleAtod(f[2], &r.lat) || !absl::SimpleAtod(f[3], &r.lon)) {
      ++out.malformed;
      continue;
    }
    if (!(r.lat >= -90.0 && r.lat <= 90.0 && r.lon >= -180.0 &&
          r.lon <= 180.0)) {
      ++out.out_of_range;
      continue;
    }
    r.user_id = std::string(f[0]);
    r.timestamp = std::string(f[1]);
    if (f.size() == 5) r.location_id = std::string(f[4]);
    out.records.push_back(std::move(r));
  }
  return out;
}

absl::StatusOr<ParsedCheckins> ReadCheckinsFile(const std::string& path) {
  gzFile file = gzopen(path.c_str(), "rb");
  if (file == nullptr) {
    return absl::NotFoundError(absl::StrCat("cannot open ", path));
  }
  std::string data;
  char buf[1 << 16];
  int got;
  while ((got = gzread(file, buf, sizeof(buf))) > 0) data.append(buf, got);
  int err = Z_OK;
  const char* msg = gzerror(file, &err);
  const bool failed = got < 0 || (err != Z_OK && err != Z_STREAM_END);
  const std::string detail = msg != nullptr ? msg : "";
  gzclose(file);
  if (failed) {
    return absl::DataLossError(absl::StrCat("reading ", path, ": ", detail));
  }
  std::istringstream in(data);
  return ParseCheckins(in);
}

absl::StatusOr<std::vector<CellDataset>> BuildCells(
    std::span<const CheckinRecord> records, const CellOptions& options) {
  const BoundingBox& box = options.bbox;
  if (!(box.lon_max > box.lon_min && box.lat_max > box.lat_min)) {
    return absl::InvalidArgumentError("empty bounding box");
  }
  if (options.coarse < 1 || options.top_cells < 1) {
    return absl::InvalidArgumentError("coarse and top_cells must be >= 1");
  }
  if (options.levels < 0 || options.levels > kMaxGridLevels) {
    return absl::InvalidArgumentError("bad levels");
  }
  struct Placed {
    const CheckinRecord* record;
    double u;  // coarse-grid coordinates
    double v;
  };
  std::vector<Placed> kept;
  std::map<int64_t, int64_t> counts;
  const double n = options.coarse;
  for (const CheckinRecord& r : records) {
    if (!(r.lon > box.lon_min && r.lon < box.lon_max && r.lat > box.lat_min &&
          r.lat < box.lat_max)) {
      continue;
    }
    if (!options.date_from.empty() && r.timestamp < options.date_from) continue;
    if (!options.date_to.empty() && r.timestamp > options.date_to) continue;
    const double u = (r.lon - box.lon_min) / (box.lon_max - box.lon_min) * n;
    const double v = (r.lat - box.lat_min) / (box.lat_max - box.lat_min) * n;
    const int64_t cx = std::min<int64_t>(options.coarse - 1,
                                         static_cast<int64_t>(u));
    const int64_t cy = std::min<int64_t>(options.coarse - 1,
                                         static_cast<int64_t>(v));
    ++counts[cy * options.coarse + cx];
    kept.push_back({&r, u, v});
  }
  std::vector<std::pair<int64_t, int64_t>> ranked(counts.begin(),
                                                  counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > static_cast<size_t>(options.top_cells)) {
    ranked.resize(options.top_cells);
  }

  const Grid grid = Grid::WithLevels(options.levels);
  std::vector<CellDataset> out;
  for (size_t rank = 0; rank < ranked.size(); ++rank) {
    const int64_t cell = ranked[rank].first;
    CellDataset ds;
    ds.rank = static_cast<int>(rank);
    ds.coarse_x = static_cast<int32_t>(cell % options.coarse);
    ds.coarse_y = static_cast<int32_t>(cell / options.coarse);
    ds.checkins = ranked[rank].second;
    const double lon_step = (box.lon_max - box.lon_min) / n;
    const double lat_step = (box.lat_max - box.lat_min) / n;
    ds.bounds = {box.lon_min + ds.coarse_x * lon_step,
                 box.lon_min + (ds.coarse_x + 1) * lon_step,
                 box.lat_min + ds.coarse_y * lat_step,
                 box.lat_min + (ds.coarse_y + 1) * lat_step};
    std::map<std::string, std::vector<SparseDist::Entry>> per_user;
    for (const Placed& p : kept) {
      const int64_t cx = std::min<int64_t>(options.coarse - 1,
                                           static_cast<int64_t>(p.u));
      const int64_t cy = std::min<int64_t>(options.coarse - 1,
                                           static_cast<int64_t>(p.v));
      if (cy * options.coarse + cx != cell) continue;
      const double lx = std::clamp(p.u - cx, 0.0, std::nextafter(1.0, 0.0));
      const double ly = std::clamp(p.v - cy, 0.0, std::nextafter(1.0, 0.0));
      absl::StatusOr<GridPoint> gp = grid.Snap(lx, ly);
      if (!gp.ok()) return gp.status();
      per_user[p.record->user_id].push_back({*gp, 1.0});
    }
    for (auto& [user, entries] : per_user) {
      absl::StatusOr<SparseDist> d =
          SparseDist::FromEntries(grid, std::move(entries));
      if (!d.ok()) return d.status();
      ds.user_ids.push_back(user);
      ds.users.push_back(d->Scaled(1.0 / d->Total()));
    }
    ds.meets_min_users =
        static_cast<int64_t>(ds.users.size()) >= options.min_users;
    out.push_back(std::move(ds));
  }
  return out;
}

}  // namespace dpemd
