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

// Datasets: synthetic failure-scenario generators, CSV ingestion with
// one-hot encoding, stratified splitting and standardization.

#ifndef RISKADVISOR_DATASET_HPP_
#define RISKADVISOR_DATASET_HPP_

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "riskadvisor/common.hpp"

namespace riskadvisor::data {

struct Dataset {
  Matrix features;
  std::vector<int> labels;
  int class_count = 2;
  std::vector<std::string> feature_names;
  std::optional<std::vector<bool>> is_ood;
  std::optional<std::uint64_t> seed;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t width() const noexcept { return features.cols(); }

  /// Throws kData if any invariant is broken (shape, label range, finiteness).
  void validate() const;
  Dataset subset(std::span<const std::size_t> indices) const;

  bool operator==(const Dataset&) const = default;
};

/// Concatenates rows of `b` after `a`. Widths and class counts must agree.
Dataset Concat(const Dataset& a, const Dataset& b);

struct SplitSpec {
  double train_fraction = 0.7;
  bool stratified = true;
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

Dataset GenCircles(std::size_t n, double noise_sd, std::uint64_t seed);
Dataset GenMoons(std::size_t n, double noise_sd, std::uint64_t seed);

/// Point on the noiseless moon of class `label` at arc parameter t in [0, pi].
std::array<double, 2> MoonArcPoint(int label, double t);
/// Distance from (x, y) to the midline between the two noiseless moons,
/// i.e. half the difference of the distances to each arc.
double MoonBoundaryDistance(double x, double y);

struct GmmShiftParams {
  std::array<double, 2> mean_a0{-2.0, 0.0};
  std::array<double, 2> mean_a1{2.0, 0.0};
  std::array<double, 2> mean_b{4.0, -4.0};
  double sd = 1.0;
  /// Label for the shifted cluster; -1 picks the class of the nearer
  /// in-distribution mean.
  int label_b = -1;
};

struct TrainTest {
  Dataset train;
  Dataset test;
};

/// Training set mixes A0:A1 evenly; test mixes A0:A1:B at 2:1:1 with B
/// flagged out-of-distribution.
TrainTest GenGmmShift(std::size_t n_train, std::size_t n_test, std::uint64_t seed,
                      const GmmShiftParams& params = {});

/// Reads a comma-separated file with a header row. Columns whose cells are
/// mostly numeric are numeric (any unparseable cell is an error naming its
/// row and column); the rest are one-hot encoded in first-appearance order.
Dataset LoadCsv(const std::string& path, const std::string& label_column,
                const std::optional<std::string>& ood_column = std::nullopt);

/// Writes features, an integer `label` column and (if present) `is_ood`.
void SaveCsv(const Dataset& d, const std::string& path);

SplitIndices SplitIndicesFor(const Dataset& d, const SplitSpec& spec);
TrainTest Split(const Dataset& d, const SplitSpec& spec);

/// Per-feature affine map fitted on training data.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer Fit(const Matrix& train);
  Matrix apply(const Matrix& x) const;
  void apply_in_place(Dataset& d) const;
};

/// Fits on `train`, applies to `train` and every dataset in `others`.
Standardizer Standardize(Dataset& train, std::span<Dataset> others);

}  // namespace riskadvisor::data

#endif  // RISKADVISOR_DATASET_HPP_
