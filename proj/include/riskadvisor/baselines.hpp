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

// Comparison scorers: the classifier's own max-class-probability confidence
// and the nearest-neighbour Trust Score.

#ifndef RISKADVISOR_BASELINES_HPP_
#define RISKADVISOR_BASELINES_HPP_

#include <vector>

#include "riskadvisor/blackbox.hpp"
#include "riskadvisor/common.hpp"
#include "riskadvisor/dataset.hpp"

namespace riskadvisor::baselines {

inline constexpr double kTrustDistanceFloor = 1e-12;
inline constexpr double kTrustScoreCap = 1e12;

std::vector<double> McpConfidence(const Matrix& probabilities);
/// Throws kData for label-only external models.
std::vector<double> McpConfidence(const bbox::Prediction& prediction);

struct TrustParams {
  double alpha = 0.0625;
  std::size_t k_density = 10;
};

/// Per-class high-density subsets of the training points. A point's density
/// radius is the distance to its k-th nearest same-class neighbour; the
/// floor(alpha * n_c) points with the largest radius are dropped.
class TrustModel {
 public:
  static TrustModel Fit(const data::Dataset& train, const TrustParams& params = {});

  const std::vector<Matrix>& filtered() const noexcept { return filtered_; }
  const TrustParams& params() const noexcept { return params_; }

  /// d_other / max(d_same, 1e-12), capped at 1e12.
  double score(std::span<const double> x, int predicted_label) const;
  std::vector<double> score(const Matrix& x, std::span<const int> predicted_labels) const;

 private:
  std::vector<Matrix> filtered_;
  TrustParams params_;
};

}  // namespace riskadvisor::baselines

#endif  // RISKADVISOR_BASELINES_HPP_
