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

// Input data: synthetic Gaussian-mixture users and check-in ingestion.

#ifndef DPEMD_DATAGEN_H_
#define DPEMD_DATAGEN_H_

#include <cstdint>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dpemd/distribution.h"
#include "dpemd/grid.h"

namespace dpemd {

struct Gaussian2d {
  double mean_x = 0.5;
  double mean_y = 0.5;
  // Covariance entries; must be symmetric positive definite.
  double var_x = 1e-3;
  double cov_xy = 0.0;
  double var_y = 1e-3;
};

struct MixtureSpec {
  std::vector<Gaussian2d> components;
  int samples_per_user = 1;
  int64_t users = 1;
  int levels = 6;
  uint64_t seed = 0;
};

// Means uniform on [0.1, 0.9)^2; covariance diag(u1, u2) with
// u ~ U[1e-4, 1e-2], rotated by a uniform angle.
MixtureSpec RandomMixture(int num_gaussians, int samples_per_user,
                          int64_t users, int levels, uint64_t seed);

struct SyntheticData {
  std::vector<SparseDist> users;
  // Fraction of grid points with mass in the sum over users.
  double sparsity = 0.0;
};

// Each user draws samples_per_user points: a uniform component, then a
// bivariate normal draw, redrawn until it lands in [0, 1)^2. Counts are
// normalized per user. User j draws from its own stream, so a prefix of the
// users does not depend on the total count.
absl::StatusOr<SyntheticData> SynthUsers(const MixtureSpec& spec);

double SupportFraction(std::span<const SparseDist> users);

struct CheckinRecord {
  std::string user_id;
  std::string timestamp;
  double lat = 0.0;
  double lon = 0.0;
  std::string location_id;
};

struct ParsedCheckins {
  std::vector<CheckinRecord> records;
  int64_t lines = 0;
  int64_t malformed = 0;
  int64_t out_of_range = 0;
};

// Tab-separated: user_id, timestamp, lat, lon[, location_id]. Blank lines
// are ignored; bad lines are counted and skipped.
ParsedCheckins ParseCheckins(std::istream& in);
// Plain text or gzip.
absl::StatusOr<ParsedCheckins> ReadCheckinsFile(const std::string& path);

struct BoundingBox {
  double lon_min = -135.0;
  double lon_max = -60.0;
  double lat_min = 0.0;
  double lat_max = 50.0;
};

struct CellOptions {
  BoundingBox bbox;
  int coarse = 300;
  int top_cells = 30;
  int levels = 8;
  int64_t min_users = 200;
  // Inclusive ISO-8601 bounds compared as strings; empty means unbounded.
  std::string date_from;
  std::string date_to;
};

struct CellDataset {
  int rank = 0;
  int32_t coarse_x = 0;
  int32_t coarse_y = 0;
  int64_t checkins = 0;
  BoundingBox bounds;
  std::vector<std::string> user_ids;
  std::vector<SparseDist> users;
  bool meets_min_users = false;
};

// Keeps records strictly inside the box, ranks coarse cells by check-in
// count (ties by row-major cell index) and turns each of the top cells into
// per-user distributions on a 2^levels grid. Rows run south to north.
absl::StatusOr<std::vector<CellDataset>> BuildCells(
    std::span<const CheckinRecord> records, const CellOptions& options);

}  // namespace dpemd

#endif  // DPEMD_DATAGEN_H_
