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

#include "riskadvisor/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace riskadvisor::baselines {

std::vector<double> McpConfidence(const Matrix& probabilities) {
  std::vector<double> out(probabilities.rows());
  for (std::size_t r = 0; r < probabilities.rows(); ++r) {
    auto row = probabilities.row(r);
    const double sum = std::accumulate(row.begin(), row.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-6) {
      Fail(ErrorKind::kData, "mcp_confidence: row " + std::to_string(r + 1) + " sums to " +
                                 FormatDouble(sum));
    }
    out[r] = *std::max_element(row.begin(), row.end());
  }
  return out;
}

std::vector<double> McpConfidence(const bbox::Prediction& prediction) {
  if (!prediction.probabilities) {
    Fail(ErrorKind::kData, "mcp_confidence needs class probabilities; the model only supplies labels");
  }
  return McpConfidence(*prediction.probabilities);
}

namespace {

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double NearestDistance(const Matrix& set, std::span<const double> x) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < set.rows(); ++r) best = std::min(best, SquaredDistance(set.row(r), x));
  return std::sqrt(best);
}

}  // namespace

TrustModel TrustModel::Fit(const data::Dataset& train, const TrustParams& params) {
  if (!(params.alpha >= 0.0 && params.alpha < 1.0)) {
    Fail(ErrorKind::kConfig, "trust alpha must lie in [0, 1)");
  }
  if (params.k_density < 1) Fail(ErrorKind::kConfig, "trust k_density must be >= 1");
  train.validate();

  TrustModel tm;
  tm.params_ = params;
  const auto classes = static_cast<std::size_t>(train.class_count);
  std::vector<std::vector<std::size_t>> members(classes);
  for (std::size_t i = 0; i < train.size(); ++i) {
    members[static_cast<std::size_t>(train.labels[i])].push_back(i);
  }
  for (std::size_t c = 0; c < classes; ++c) {
    const auto& idx = members[c];
    const std::size_t nc = idx.size();
    if (nc < params.k_density + 1) {
      Fail(ErrorKind::kData, "trust score: class " + std::to_string(c) + " has " +
                                 std::to_string(nc) + " points, needs >= k_density + 1 = " +
                                 std::to_string(params.k_density + 1));
    }
    // Brute-force k-th neighbour radius, self excluded.
    std::vector<double> radius(nc);
    std::vector<double> dist(nc);
    for (std::size_t a = 0; a < nc; ++a) {
      for (std::size_t b = 0; b < nc; ++b) {
        dist[b] = SquaredDistance(train.features.row(idx[a]), train.features.row(idx[b]));
      }
      dist[a] = std::numeric_limits<double>::infinity();
      std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(params.k_density - 1),
                       dist.end());
      radius[a] = dist[params.k_density - 1];
    }
    const auto drop = static_cast<std::size_t>(std::floor(params.alpha * static_cast<double>(nc) + 1e-9));
    std::vector<std::size_t> order(nc);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return radius[a] < radius[b]; });
    order.resize(nc - drop);
    std::sort(order.begin(), order.end());
    std::vector<std::size_t> keep;
    keep.reserve(order.size());
    for (auto o : order) keep.push_back(idx[o]);
    tm.filtered_.push_back(train.features.select_rows(keep));
  }
  return tm;
}

double TrustModel::score(std::span<const double> x, int predicted_label) const {
  if (predicted_label < 0 || static_cast<std::size_t>(predicted_label) >= filtered_.size()) {
    Fail(ErrorKind::kData, "trust score: predicted label out of range");
  }
  double d_same = 0.0;
  double d_other = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < filtered_.size(); ++c) {
    if (filtered_[c].empty()) {
      Fail(ErrorKind::kData, "trust score: filtered set for class " + std::to_string(c) + " is empty");
    }
    if (filtered_[c].cols() != x.size()) Fail(ErrorKind::kData, "trust score: width mismatch");
    const double d = NearestDistance(filtered_[c], x);
    if (c == static_cast<std::size_t>(predicted_label)) {
      d_same = d;
    } else {
      d_other = std::min(d_other, d);
    }
  }
  return std::min(d_other / std::max(d_same, kTrustDistanceFloor), kTrustScoreCap);
}

std::vector<double> TrustModel::score(const Matrix& x, std::span<const int> predicted_labels) const {
  if (x.rows() != predicted_labels.size()) {
    Fail(ErrorKind::kData, "trust score: label count does not match rows");
  }
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = score(x.row(r), predicted_labels[r]);
  return out;
}

}  // namespace riskadvisor::baselines
