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

// File formats used by the command-line tools.
//
// Dataset CSV: header "user_id,ix,iy,mass", one row per support point of a
// user's distribution, users in file order. Masses are written with 17
// significant digits so that reading a file back gives the same doubles.
// The grid size lives in a JSON manifest beside the CSV (same stem,
// ".json" extension) under "delta_grid".
//
// Heatmap PGM: binary P5, maxval 65535, big-endian samples, row 0 first.
// Values are divided by the map's maximum before quantizing. A comment line
// "# dpemd spacing=<s> sigma=<sigma>" records the cell spacing.
//
// Heatmap CSV: one line per row, comma-separated values, row 0 first.

#ifndef DPEMD_IO_H_
#define DPEMD_IO_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpemd/distribution.h"
#include "dpemd/grid.h"
#include "dpemd/heatmap.h"
#include "nlohmann/json.hpp"

namespace dpemd {

inline constexpr char kVersion[] = "0.1.0";

struct Dataset {
  Grid grid = Grid::WithLevels(0);
  std::vector<std::string> user_ids;
  std::vector<SparseDist> users;
};

absl::Status WriteDatasetCsv(const std::string& path, const Dataset& data);

// `side` overrides the manifest. Without either, the grid is the smallest
// power of two that holds every point.
absl::StatusOr<Dataset> ReadDatasetCsv(const std::string& path,
                                       std::optional<int64_t> side = {});

// "dir/name.csv" -> "dir/name.json".
std::string ManifestPathFor(const std::string& output_path);

// Adds "tool", "version" and writes pretty-printed JSON.
absl::Status WriteManifest(const std::string& path, nlohmann::json manifest);
absl::StatusOr<nlohmann::json> ReadJson(const std::string& path);

absl::Status WritePgm(const std::string& path, const HeatmapGrid& heatmap);
// Values are scaled to sum to 1.
absl::StatusOr<HeatmapGrid> ReadPgm(const std::string& path);

absl::Status WriteHeatmapCsv(const std::string& path,
                             const HeatmapGrid& heatmap);
absl::StatusOr<HeatmapGrid> ReadHeatmapCsv(const std::string& path,
                                           double spacing);

// Picks the reader from the extension (.pgm or .csv).
absl::StatusOr<HeatmapGrid> ReadHeatmap(const std::string& path);

}  // namespace dpemd

#endif  // DPEMD_IO_H_
