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

// Sample-and-retrain: grow the training set from a labelled held-out pool in
// the order a scoring strategy suggests and track accuracy on the
// out-of-distribution test points.

#ifndef RISKADVISOR_RETRAIN_HPP_
#define RISKADVISOR_RETRAIN_HPP_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "riskadvisor/advisor.hpp"
#include "riskadvisor/baselines.hpp"
#include "riskadvisor/blackbox.hpp"
#include "riskadvisor/dataset.hpp"

namespace riskadvisor::eval {

enum class Strategy { kEpistemicDesc, kConfidenceAsc, kTrustAsc, kRandom };

const char* ToString(Strategy s);
/// Accepts "epistemic_desc", "confidence_asc", "trust_asc", "random"
/// (dashes are also accepted).
Strategy StrategyFromString(const std::string& s);

using BlackBoxTrainer = std::function<bbox::BlackBoxModel(const data::Dataset&)>;

struct SampleRetrainConfig {
  Strategy strategy = Strategy::kEpistemicDesc;
  double k_percent = 5.0;
  std::size_t rounds = 8;
  /// When false a pool point can be picked at most once.
  bool with_replacement = true;
  sgbt::SgbtParams advisor_params;
  std::size_t advisor_members = 10;
  baselines::TrustParams trust;
  std::uint64_t seed = 0;
};

struct RetrainPoint {
  double pool_percent = 0.0;
  double ood_accuracy = 0.0;
};

struct RetrainCurve {
  Strategy strategy = Strategy::kRandom;
  std::vector<RetrainPoint> points;
};

/// Round 0 is the black box trained on `train`. Each later round scores the
/// whole pool with models fitted on the current training multiset, appends
/// the ceil(k% * |pool|) best-ranked pool points (with their labels) and
/// retrains. Ranking ties fall to the lower pool index.
RetrainCurve SampleRetrain(const data::Dataset& train, const data::Dataset& pool,
                           const data::Dataset& test, const BlackBoxTrainer& trainer,
                           const SampleRetrainConfig& config);

/// Linear interpolation of the curve at `pool_percent`; clamps at the ends.
double CurveValueAt(const RetrainCurve& curve, double pool_percent);

std::string CurveToCsv(const RetrainCurve& curve);

}  // namespace riskadvisor::eval

#endif  // RISKADVISOR_RETRAIN_HPP_
