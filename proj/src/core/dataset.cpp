// Copyright 2026 The Risk Advisor Authors.
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

#include "riskadvisor/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "riskadvisor/csv.hpp"

namespace riskadvisor::data {

void Dataset::validate() const {
  if (features.rows() != labels.size()) {
    Fail(ErrorKind::kData, "feature rows (" + std::to_string(features.rows()) +
                               ") != label count (" + std::to_string(labels.size()) + ")");
  }
  if (class_count < 2) Fail(ErrorKind::kData, "class_count must be >= 2");
  if (!feature_names.empty() && feature_names.size() != features.cols()) {
    Fail(ErrorKind::kData, "feature_names length does not match feature width");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= class_count) {
      Fail(ErrorKind::kData, "label out of range at row " + std::to_string(i));
    }
  }
  for (double v : features.data()) {
    if (!std::isfinite(v)) Fail(ErrorKind::kData, "non-finite feature value");
  }
  if (is_ood && is_ood->size() != labels.size()) {
    Fail(ErrorKind::kData, "is_ood length does not match row count");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features = features.select_rows(indices);
  out.labels.reserve(indices.size());
  for (auto i : indices) out.labels.push_back(labels[i]);
  out.class_count = class_count;
  out.feature_names = feature_names;
  if (is_ood) {
    std::vector<bool> flags;
    flags.reserve(indices.size());
    for (auto i : indices) flags.push_back((*is_ood)[i]);
    out.is_ood = std::move(flags);
  }
  out.seed = seed;
  return out;
}

Dataset Concat(const Dataset& a, const Dataset& b) {
  if (a.width() != b.width() && a.size() > 0 && b.size() > 0) {
    Fail(ErrorKind::kData, "cannot concatenate datasets of different widths");
  }
  if (a.size() == 0) return b;
  if (b.size() == 0) return a;
  Dataset out = a;
  out.class_count = std::max(a.class_count, b.class_count);
  auto& data = out.features.data();
  data.insert(data.end(), b.features.data().begin(), b.features.data().end());
  out.features = Matrix(a.size() + b.size(), a.width(), std::move(data));
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  if (a.is_ood || b.is_ood) {
    std::vector<bool> flags = a.is_ood.value_or(std::vector<bool>(a.size(), false));
    auto tail = b.is_ood.value_or(std::vector<bool>(b.size(), false));
    flags.insert(flags.end(), tail.begin(), tail.end());
    out.is_ood = std::move(flags);
  }
  return out;
}

namespace {

void CheckGeneratorArgs(std::size_t n, double noise_sd) {
  if (n < 4 || n % 2 != 0) {
    Fail(ErrorKind::kConfig, "n must be even and >= 4 (got " + std::to_string(n) + ")");
  }
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
    Fail(ErrorKind::kConfig, "noise_sd must be finite and >= 0");
  }
}

// Shared tail of the 2-D generators: shuffle row order, then add noise.
// Noise draws happen even for noise_sd == 0 so that the same seed yields the
// same layout at every noise level.
Dataset Finish2d(std::vector<std::array<double, 2>> points, std::vector<int> labels,
                 double noise_sd, Rng& rng, std::uint64_t seed) {
  const std::size_t n = points.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  Dataset d;
  d.features = Matrix(n, 2);
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = points[order[i]];
    d.features(i, 0) = p[0] + noise_sd * rng.normal();
    d.features(i, 1) = p[1] + noise_sd * rng.normal();
    d.labels[i] = labels[order[i]];
  }
  d.class_count = 2;
  d.feature_names = {"x0", "x1"};
  d.seed = seed;
  return d;
}

}  // namespace

Dataset GenCircles(std::size_t n, double noise_sd, std::uint64_t seed) {
  CheckGeneratorArgs(n, noise_sd);
  Rng rng(seed);
  constexpr double kInnerRadius = 0.5;
  std::vector<std::array<double, 2>> points(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool inner = i >= n / 2;
    const double radius = inner ? kInnerRadius : 1.0;
    const double angle = 2.0 * std::numbers::pi * rng.uniform();
    points[i] = {radius * std::cos(angle), radius * std::sin(angle)};
    labels[i] = inner ? 1 : 0;
  }
  return Finish2d(std::move(points), std::move(labels), noise_sd, rng, seed);
}

std::array<double, 2> MoonArcPoint(int label, double t) {
  if (label == 0) return {std::cos(t), std::sin(t)};
  return {1.0 - std::cos(t), 0.5 - std::sin(t)};
}

Dataset GenMoons(std::size_t n, double noise_sd, std::uint64_t seed) {
  CheckGeneratorArgs(n, noise_sd);
  Rng rng(seed);
  std::vector<std::array<double, 2>> points(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = i >= n / 2 ? 1 : 0;
    points[i] = MoonArcPoint(label, std::numbers::pi * rng.uniform());
    labels[i] = label;
  }
  return Finish2d(std::move(points), std::move(labels), noise_sd, rng, seed);
}

namespace {

// Distance from p to a unit half-circle centred at c. `upper` selects the
// half with y >= c.y.
double HalfCircleDistance(double px, double py, double cx, double cy, bool upper) {
  const double dx = px - cx;
  const double dy = py - cy;
  if ((upper && dy >= 0.0) || (!upper && dy <= 0.0)) {
    return std::abs(std::hypot(dx, dy) - 1.0);
  }
  return std::min(std::hypot(dx - 1.0, dy), std::hypot(dx + 1.0, dy));
}

}  // namespace

double MoonBoundaryDistance(double x, double y) {
  const double d0 = HalfCircleDistance(x, y, 0.0, 0.0, true);
  const double d1 = HalfCircleDistance(x, y, 1.0, 0.5, false);
  return std::abs(d0 - d1) / 2.0;
}

TrainTest GenGmmShift(std::size_t n_train, std::size_t n_test, std::uint64_t seed,
                      const GmmShiftParams& params) {
  if (n_train < 4 || n_test < 4) {
    Fail(ErrorKind::kConfig, "gmm-shift counts must be >= 4");
  }
  if (!(params.sd > 0.0)) Fail(ErrorKind::kConfig, "gmm-shift sd must be > 0");
  int label_b = params.label_b;
  if (label_b < 0) {
    auto dist = [&](const std::array<double, 2>& m) {
      return std::hypot(params.mean_b[0] - m[0], params.mean_b[1] - m[1]);
    };
    label_b = dist(params.mean_a1) < dist(params.mean_a0) ? 1 : 0;
  }
  if (label_b > 1) Fail(ErrorKind::kConfig, "gmm-shift label_b must be 0 or 1");

  Rng rng(seed);
  auto draw = [&](std::size_t n0, std::size_t n1, std::size_t nb) {
    std::vector<std::array<double, 2>> points;
    std::vector<int> labels;
    std::vector<bool> ood;
    auto emit = [&](std::size_t count, const std::array<double, 2>& mean, int label,
                    bool shifted) {
      for (std::size_t i = 0; i < count; ++i) {
        const double x = mean[0] + params.sd * rng.normal();
        const double y = mean[1] + params.sd * rng.normal();
        points.push_back({x, y});
        labels.push_back(label);
        ood.push_back(shifted);
      }
    };
    emit(n0, params.mean_a0, 0, false);
    emit(n1, params.mean_a1, 1, false);
    emit(nb, params.mean_b, label_b, true);

    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    Dataset d;
    d.features = Matrix(points.size(), 2);
    std::vector<bool> flags(points.size());
    d.labels.resize(points.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      d.features(i, 0) = points[order[i]][0];
      d.features(i, 1) = points[order[i]][1];
      d.labels[i] = labels[order[i]];
      flags[i] = ood[order[i]];
    }
    d.is_ood = std::move(flags);
    d.class_count = 2;
    d.feature_names = {"x0", "x1"};
    d.seed = seed;
    return d;
  };

  TrainTest out;
  out.train = draw(n_train - n_train / 2, n_train / 2, 0);
  const std::size_t quarter = n_test / 4;
  out.test = draw(n_test - 2 * quarter, quarter, quarter);
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string Trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

bool ParseFinite(const std::string& cell, double& out) {
  return ParseDouble(cell, out) && std::isfinite(out);
}

bool IsInteger(double v) { return std::floor(v) == v && std::abs(v) < 1e15; }

}  // namespace

Dataset LoadCsv(const std::string& path, const std::string& label_column,
                const std::optional<std::string>& ood_column) {
  CsvTable table = ReadCsvFile(path);
  const auto& header = table.header;
  auto find_column = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw CsvError(CsvErrorCode::kMissingColumn,
                     path + ": missing column '" + name + "'", 0, name);
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t label_idx = find_column(label_column);
  std::optional<std::size_t> ood_idx;
  if (ood_column) ood_idx = find_column(*ood_column);
  if (table.rows.empty()) {
    throw CsvError(CsvErrorCode::kEmptyDataset, path + ": no data rows", 0, "");
  }
  const std::size_t n = table.rows.size();

  std::vector<std::vector<std::string>> cells(header.size(), std::vector<std::string>(n));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < header.size(); ++c) cells[c][r] = Trim(table.rows[r][c]);
  }

  Dataset d;
  std::vector<std::vector<double>> columns;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == label_idx || (ood_idx && c == *ood_idx)) continue;
    std::size_t parseable = 0;
    for (const auto& cell : cells[c]) {
      double v;
      if (ParseFinite(cell, v)) ++parseable;
    }
    if (2 * parseable > n) {
      std::vector<double> col(n);
      for (std::size_t r = 0; r < n; ++r) {
        if (!ParseFinite(cells[c][r], col[r])) {
          throw CsvError(CsvErrorCode::kUnparseableCell,
                         path + ": row " + std::to_string(r + 1) + ", column '" + header[c] +
                             "': cannot parse '" + cells[c][r] + "' as a number",
                         r + 1, header[c]);
        }
      }
      columns.push_back(std::move(col));
      d.feature_names.push_back(header[c]);
    } else {
      std::vector<std::string> categories;
      std::unordered_map<std::string, std::size_t> index;
      std::vector<std::size_t> codes(n);
      for (std::size_t r = 0; r < n; ++r) {
        auto [it, inserted] = index.try_emplace(cells[c][r], categories.size());
        if (inserted) categories.push_back(cells[c][r]);
        codes[r] = it->second;
      }
      for (std::size_t k = 0; k < categories.size(); ++k) {
        std::vector<double> col(n, 0.0);
        for (std::size_t r = 0; r < n; ++r) col[r] = codes[r] == k ? 1.0 : 0.0;
        columns.push_back(std::move(col));
        d.feature_names.push_back(header[c] + "=" + categories[k]);
      }
    }
  }

  d.features = Matrix(n, columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    for (std::size_t r = 0; r < n; ++r) d.features(r, c) = columns[c][r];
  }

  // Integer labels keep their numeric order; anything else is mapped by
  // first appearance.
  const auto& raw_labels = cells[label_idx];
  bool all_integer = true;
  std::vector<double> numeric(n);
  for (std::size_t r = 0; r < n && all_integer; ++r) {
    all_integer = ParseFinite(raw_labels[r], numeric[r]) && IsInteger(numeric[r]);
  }
  d.labels.resize(n);
  std::size_t distinct = 0;
  if (all_integer) {
    std::map<double, int> order;
    for (double v : numeric) order.emplace(v, 0);
    int next = 0;
    for (auto& [v, code] : order) code = next++;
    for (std::size_t r = 0; r < n; ++r) d.labels[r] = order[numeric[r]];
    distinct = order.size();
  } else {
    std::unordered_map<std::string, int> index;
    for (std::size_t r = 0; r < n; ++r) {
      auto [it, inserted] = index.try_emplace(raw_labels[r], static_cast<int>(index.size()));
      d.labels[r] = it->second;
    }
    distinct = index.size();
  }
  d.class_count = std::max<int>(2, static_cast<int>(distinct));

  if (ood_idx) {
    std::vector<bool> flags(n);
    for (std::size_t r = 0; r < n; ++r) {
      const auto& cell = cells[*ood_idx][r];
      if (cell != "0" && cell != "1") {
        throw CsvError(CsvErrorCode::kUnparseableCell,
                       path + ": row " + std::to_string(r + 1) + ", column '" + *ood_column +
                           "': expected 0 or 1, got '" + cell + "'",
                       r + 1, *ood_column);
      }
      flags[r] = cell == "1";
    }
    d.is_ood = std::move(flags);
  }
  d.validate();
  return d;
}

void SaveCsv(const Dataset& d, const std::string& path) {
  d.validate();
  std::ostringstream out;
  std::vector<std::string> names = d.feature_names;
  if (names.empty()) {
    for (std::size_t c = 0; c < d.width(); ++c) names.push_back("x" + std::to_string(c));
  }
  names.push_back("label");
  if (d.is_ood) names.push_back("is_ood");
  WriteCsvRow(out, names);
  std::vector<std::string> cells;
  for (std::size_t r = 0; r < d.size(); ++r) {
    cells.clear();
    for (double v : d.features.row(r)) cells.push_back(FormatDouble(v));
    cells.push_back(std::to_string(d.labels[r]));
    if (d.is_ood) cells.push_back((*d.is_ood)[r] ? "1" : "0");
    WriteCsvRow(out, cells);
  }
  WriteFileAtomic(path, out.str());
}

// ---------------------------------------------------------------------------
// Splitting and scaling

SplitIndices SplitIndicesFor(const Dataset& d, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    Fail(ErrorKind::kConfig, "train_fraction must lie in (0, 1)");
  }
  const std::size_t n = d.size();
  if (n < 2) Fail(ErrorKind::kData, "cannot split fewer than 2 rows");
  Rng rng(spec.seed);
  SplitIndices out;

  if (!spec.stratified) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    auto k = static_cast<std::size_t>(std::llround(spec.train_fraction * n));
    k = std::clamp<std::size_t>(k, 1, n - 1);
    out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
  } else {
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(d.class_count));
    for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(d.labels[i])].push_back(i);
    std::vector<std::size_t> take(members.size(), 0);
    std::vector<double> remainder(members.size(), 0.0);
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < members.size(); ++c) {
      const std::size_t nc = members[c].size();
      if (nc == 0) continue;
      if (nc < 2) {
        Fail(ErrorKind::kData, "class " + std::to_string(c) +
                                   " has fewer than 2 members; cannot stratify");
      }
      const double exact = spec.train_fraction * static_cast<double>(nc);
      take[c] = static_cast<std::size_t>(std::floor(exact + 1e-9));
      remainder[c] = exact - static_cast<double>(take[c]);
      assigned += take[c];
    }
    const auto target = static_cast<std::size_t>(std::llround(spec.train_fraction * n));
    std::vector<std::size_t> by_remainder(members.size());
    std::iota(by_remainder.begin(), by_remainder.end(), 0);
    std::stable_sort(by_remainder.begin(), by_remainder.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t c : by_remainder) {
      if (assigned >= target) break;
      if (remainder[c] > 1e-9) {
        ++take[c];
        ++assigned;
      }
    }
    for (std::size_t c = 0; c < members.size(); ++c) {
      auto& idx = members[c];
      if (idx.empty()) continue;
      take[c] = std::clamp<std::size_t>(take[c], 1, idx.size() - 1);
      rng.shuffle(idx);
      out.train.insert(out.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take[c]));
      out.test.insert(out.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(take[c]), idx.end());
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

TrainTest Split(const Dataset& d, const SplitSpec& spec) {
  auto idx = SplitIndicesFor(d, spec);
  return {d.subset(idx.train), d.subset(idx.test)};
}

Standardizer Standardizer::Fit(const Matrix& train) {
  if (train.empty()) Fail(ErrorKind::kData, "cannot standardize an empty dataset");
  const std::size_t n = train.rows();
  const std::size_t d = train.cols();
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  for (std::size_t c = 0; c < d; ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) sum += train(r, c);
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) ss += (train(r, c) - mean) * (train(r, c) - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    s.mean[c] = mean;
    // Near-constant columns are only centred.
    s.scale[c] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  if (x.cols() != mean.size()) Fail(ErrorKind::kData, "standardizer width mismatch");
  Matrix out = x;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = (x(r, c) - mean[c]) / scale[c];
  }
  return out;
}

void Standardizer::apply_in_place(Dataset& d) const { d.features = apply(d.features); }

Standardizer Standardize(Dataset& train, std::span<Dataset> others) {
  auto s = Standardizer::Fit(train.features);
  s.apply_in_place(train);
  for (auto& d : others) s.apply_in_place(d);
  return s;
}

}  // namespace riskadvisor::data
