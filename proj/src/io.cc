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

#include "dpemd/io.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"

namespace dpemd {
namespace {

using nlohmann::json;

absl::Status WriteFile(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return absl::PermissionDeniedError(absl::StrCat("cannot write ", path));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) return absl::DataLossError(absl::StrCat("short write to ", path));
  return absl::OkStatus();
}

absl::StatusOr<std::string> ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int64_t CoveringSide(int64_t max_coord) {
  int64_t side = 1;
  while (side <= max_coord) side <<= 1;
  return side;
}

double DefaultSpacing(size_t width, size_t height) {
  return 1.0 / static_cast<double>(CoveringSide(
                   static_cast<int64_t>(std::max(width, height)) - 1));
}

absl::Status ParseError(const std::string& path, int64_t line,
                        absl::string_view what) {
  return absl::InvalidArgumentError(
      absl::StrCat(path, ":", line, ": ", what));
}

}  // namespace

std::string ManifestPathFor(const std::string& output_path) {
  return std::filesystem::path(output_path).replace_extension(".json").string();
}

absl::Status WriteManifest(const std::string& path, json manifest) {
  manifest["tool"] = "dpemd";
  manifest["version"] = kVersion;
  return WriteFile(path, manifest.dump(2) + "\n");
}

absl::StatusOr<json> ReadJson(const std::string& path) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return text.status();
  json j = json::parse(*text, nullptr, false);
  if (j.is_discarded()) {
    return absl::InvalidArgumentError(absl::StrCat(path, " is not valid JSON"));
  }
  return j;
}

absl::Status WriteDatasetCsv(const std::string& path, const Dataset& data) {
  if (data.user_ids.size() != data.users.size()) {
    return absl::InvalidArgumentError("one id per user is required");
  }
  std::string out = "user_id,ix,iy,mass\n";
  for (size_t j = 0; j < data.users.size(); ++j) {
    const std::string& id = data.user_ids[j];
    if (id.empty() || id.find_first_of(",\n\r") != std::string::npos) {
      return absl::InvalidArgumentError(
          absl::StrCat("user id '", id, "' cannot be stored in CSV"));
    }
    for (const SparseDist::Entry& e : data.users[j].entries()) {
      absl::StrAppendFormat(&out, "%s,%d,%d,%.17g\n", id, e.point.ix,
                            e.point.iy, e.mass);
    }
  }
  return WriteFile(path, out);
}

absl::StatusOr<Dataset> ReadDatasetCsv(const std::string& path,
                                       std::optional<int64_t> side) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return text.status();
  if (!side.has_value()) {
    const std::string manifest = ManifestPathFor(path);
    if (std::filesystem::exists(manifest)) {
      absl::StatusOr<json> j = ReadJson(manifest);
      if (!j.ok()) return j.status();
      if (j->contains("delta_grid")) side = (*j)["delta_grid"].get<int64_t>();
    }
  }
  std::vector<std::string> order;
  std::map<std::string, std::vector<SparseDist::Entry>> rows;
  int64_t max_coord = 0;
  int64_t line_no = 0;
  for (absl::string_view line : absl::StrSplit(*text, '\n')) {
    ++line_no;
    line = absl::StripSuffix(line, "\r");
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "user_id,ix,iy,mass") {
        return ParseError(path, line_no, "expected header user_id,ix,iy,mass");
      }
      continue;
    }
    std::vector<absl::string_view> f = absl::StrSplit(line, ',');
    int32_t ix;
    int32_t iy;
    double mass;
    if (f.size() != 4 || f[0].empty() || !absl::SimpleAtoi(f[1], &ix) ||
        !absl::SimpleAtoi(f[2], &iy) || !absl::SimpleAtod(f[3], &mass)) {
      return ParseError(path, line_no, "expected user_id,ix,iy,mass");
    }
    if (ix < 0 || iy < 0) return ParseError(path, line_no, "negative coordinate");
    const std::string id(f[0]);
    auto [it, inserted] = rows.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.push_back({{ix, iy}, mass});
    max_coord = std::max<int64_t>(max_coord, std::max(ix, iy));
  }
  absl::StatusOr<Grid> grid =
      Grid::Create(side.value_or(CoveringSide(max_coord)));
  if (!grid.ok()) return grid.status();
  Dataset data;
  data.grid = *grid;
  for (const std::string& id : order) {
    absl::StatusOr<SparseDist> d =
        SparseDist::FromEntries(*grid, std::move(rows[id]));
    if (!d.ok()) {
      return absl::Status(d.status().code(),
                          absl::StrCat(path, ": user ", id, ": ",
                                       d.status().message()));
    }
    data.user_ids.push_back(id);
    data.users.push_back(*std::move(d));
  }
  return data;
}

absl::Status WritePgm(const std::string& path, const HeatmapGrid& heatmap) {
  double peak = 0.0;
  for (double v : heatmap.values) peak = std::max(peak, v);
  std::string out = absl::StrFormat(
      "P5\n# dpemd spacing=%.17g sigma=%.17g\n%d %d\n65535\n", heatmap.spacing,
      heatmap.sigma, heatmap.width, heatmap.height);
  out.reserve(out.size() + 2 * heatmap.values.size());
  for (double v : heatmap.values) {
    const double scaled = peak > 0.0 ? std::max(v, 0.0) / peak * 65535.0 : 0.0;
    const auto q = static_cast<uint16_t>(std::lround(scaled));
    out.push_back(static_cast<char>(q >> 8));
    out.push_back(static_cast<char>(q & 0xff));
  }
  return WriteFile(path, out);
}

absl::StatusOr<HeatmapGrid> ReadPgm(const std::string& path) {
  absl::StatusOr<std::string> bytes = ReadFile(path);
  if (!bytes.ok()) return bytes.status();
  const std::string& b = *bytes;
  size_t pos = 0;
  double spacing = 0.0;
  double sigma = 0.0;
  // Header tokens, skipping comments.
  auto next_token = [&]() -> std::string {
    while (pos < b.size()) {
      if (std::isspace(static_cast<unsigned char>(b[pos]))) {
        ++pos;
      } else if (b[pos] == '#') {
        const size_t end = b.find('\n', pos);
        const std::string comment =
            b.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
        std::istringstream c(comment);
        std::string token;
        while (c >> token) {
          absl::string_view word = token;
          if (absl::ConsumePrefix(&word, "spacing=")) {
            std::ignore = absl::SimpleAtod(word, &spacing);
          } else if (absl::ConsumePrefix(&word, "sigma=")) {
            std::ignore = absl::SimpleAtod(word, &sigma);
          }
        }
        pos = end == std::string::npos ? b.size() : end + 1;
      } else {
        break;
      }
    }
    const size_t start = pos;
    while (pos < b.size() && !std::isspace(static_cast<unsigned char>(b[pos]))) {
      ++pos;
    }
    return b.substr(start, pos - start);
  };
  int64_t width;
  int64_t height;
  int64_t maxval;
  if (next_token() != "P5" || !absl::SimpleAtoi(next_token(), &width) ||
      !absl::SimpleAtoi(next_token(), &height) ||
      !absl::SimpleAtoi(next_token(), &maxval) || width < 1 || height < 1 ||
      maxval < 1 || maxval > 65535) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": bad PGM header"));
  }
  ++pos;  // the single whitespace byte after maxval
  const size_t sample = maxval > 255 ? 2 : 1;
  const size_t n = static_cast<size_t>(width) * static_cast<size_t>(height);
  if (b.size() < pos + n * sample) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": truncated PGM"));
  }
  HeatmapGrid h;
  h.width = static_cast<size_t>(width);
  h.height = static_cast<size_t>(height);
  h.spacing = spacing > 0.0 ? spacing : DefaultSpacing(h.width, h.height);
  h.sigma = sigma;
  h.values.resize(n);
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const auto* p = reinterpret_cast<const unsigned char*>(b.data() + pos);
    const double v =
        sample == 2 ? (p[2 * i] << 8) | p[2 * i + 1] : static_cast<double>(p[i]);
    h.values[i] = v;
    total += v;
  }
  if (total > 0.0) {
    for (double& v : h.values) v /= total;
  }
  h.normalized = total > 0.0;
  return h;
}

absl::Status WriteHeatmapCsv(const std::string& path,
                             const HeatmapGrid& heatmap) {
  std::string out;
  for (size_t y = 0; y < heatmap.height; ++y) {
    for (size_t x = 0; x < heatmap.width; ++x) {
      absl::StrAppendFormat(&out, x == 0 ? "%.17g" : ",%.17g", heatmap.at(x, y));
    }
    out.push_back('\n');
  }
  return WriteFile(path, out);
}

absl::StatusOr<HeatmapGrid> ReadHeatmapCsv(const std::string& path,
                                           double spacing) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return text.status();
  HeatmapGrid h;
  int64_t line_no = 0;
  for (absl::string_view line : absl::StrSplit(*text, '\n')) {
    ++line_no;
    line = absl::StripSuffix(line, "\r");
    if (line.empty()) continue;
    std::vector<absl::string_view> f = absl::StrSplit(line, ',');
    if (h.height > 0 && f.size() != h.width) {
      return ParseError(path, line_no, "ragged row");
    }
    h.width = f.size();
    for (absl::string_view v : f) {
      double d;
      if (!absl::SimpleAtod(v, &d)) return ParseError(path, line_no, "bad number");
      h.values.push_back(d);
    }
    ++h.height;
  }
  if (h.values.empty()) return absl::InvalidArgumentError(path + ": empty heatmap");
  h.spacing = spacing > 0.0 ? spacing : DefaultSpacing(h.width, h.height);
  double total = 0.0;
  for (double v : h.values) total += v;
  h.normalized = std::fabs(total - 1.0) <= 1e-9;
  return h;
}

absl::StatusOr<HeatmapGrid> ReadHeatmap(const std::string& path) {
  const std::string ext = std::filesystem::path(path).extension().string();
  if (ext == ".pgm") return ReadPgm(path);
  if (ext == ".csv") return ReadHeatmapCsv(path, 0.0);
  return absl::InvalidArgumentError(
      absl::StrCat(path, ": expected a .pgm or .csv heatmap"));
}

}  // namespace dpemd
