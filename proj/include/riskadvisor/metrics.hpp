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

// Ranking metrics for failure prediction, abstention and OOD detection.

#ifndef RISKADVISOR_METRICS_HPP_
#define RISKADVISOR_METRICS_HPP_

#include <vector>

#include "riskadvisor/common.hpp"

namespace riskadvisor::eval {

enum class Orientation { kHigherIsPositive, kLowerIsPositive };

struct RankedScores {
  std::vector<double> scores;
  std::vector<bool> positives;
  Orientation orientation = Orientation::kHigherIsPositive;
};

/// Mann-Whitney statistic P(s_pos > s_neg) + P(tie) / 2.
double Auroc(const RankedScores& r);
/// Average precision over descending-score groups; tied scores form one
/// group and are added to the prefix together.
double AveragePrecision(const RankedScores& r);

/// OOD points are the positive class.
double OodAuroc(std::span<const double> scores, const std::vector<bool>& is_ood,
                Orientation orientation);

struct ArCurve {
  std::vector<double> rejection_fractions;
  std::vector<double> accuracies;
  double prr = 0.0;
};

/// Rejects the ceil(rho * N) riskiest points (oracle answers them correctly)
/// for rho on a grid of `grid_step`. Equal scores are rejected in ascending
/// index order. `orientation` says which end of the scores is risky.
ArCurve AccuracyRejectionCurve(std::span<const double> scores, const std::vector<bool>& errors,
                               double grid_step,
                               Orientation orientation = Orientation::kHigherIsPositive);

/// Prediction rejection ratio: the area between the random-rejection
/// residual-error line and the method's residual-error curve, divided by the
/// same area for the oracle. 1 = perfect ordering, 0 = random, -1 = reversed.
double Prr(std::span<const double> scores, const std::vector<bool>& errors,
           Orientation orientation = Orientation::kHigherIsPositive);

/// Rejection order: riskiest first, ties by ascending index.
std::vector<std::size_t> RejectionOrder(std::span<const double> scores, Orientation orientation);

}  // namespace riskadvisor::eval

#endif  // RISKADVISOR_METRICS_HPP_
