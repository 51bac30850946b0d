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

#include "riskadvisor/retrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "riskadvisor/csv.hpp"

namespace riskadvisor::eval {

const char* ToString(Strategy s) {
  switch (s) {
    case Strategy::kEpistemicDesc:
      return "epistemic_desc";
    case Strategy::kConfidenceAsc:
      return "confidence_asc";
    case Strategy::kTrustAsc:
      return "trust_asc";
    case Strategy::kRandom:
      return "random";
  }
  return "unknown";
}

Strategy StrategyFromString(const std::string& s) {
  std::string key = s;
  std::replace(key.begin(), key.end(), '-', '_');
  for (auto st : {Strategy::kEpistemicDesc, Strategy::kConfidenceAsc, Strategy::kTrustAsc,
                  Strategy::kRandom}) {
    if (key == ToString(st)) return st;
  }
  Fail(ErrorKind::kConfig, "unknown sample-retrain strategy '" + s + "'");
}

namespace {

double OodAccuracy(const bbox::BlackBoxModel& model, const data::Dataset& ood_test) {
  const auto pred = model.predict(ood_test);
  return bbox::Accuracy(ood_test.labels, pred.labels);
}

// Higher priority is picked first; ties go to the lower index.
std::vector<std::size_t> TopK(const std::vector<double>& priority, const std::vector<char>& eligible,
                              std::size_t k) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < priority.size(); ++i) {
    if (eligible[i]) idx.push_back(i);
  }
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      return priority[a] > priority[b] || (priority[a] == priority[b] && a < b);
                    });
  idx.resize(k);
  return idx;
}

}  // namespace

RetrainCurve SampleRetrain(const data::Dataset& train, const data::Dataset& pool,
                           const data::Dataset& test, const BlackBoxTrainer& trainer,
                           const SampleRetrainConfig& config) {
  if (pool.size() == 0) Fail(ErrorKind::kData, "sample_retrain: pool is empty");
  if (!test.is_ood) Fail(ErrorKind::kData, "sample_retrain: test set has no is_ood flags");
  if (!(config.k_percent > 0.0 && config.k_percent <= 100.0)) {
    Fail(ErrorKind::kConfig, "sample_retrain: k_percent must lie in (0, 100]");
  }
  std::vector<std::size_t> ood_rows;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if ((*test.is_ood)[i]) ood_rows.push_back(i);
  }
  if (ood_rows.empty()) Fail(ErrorKind::kData, "sample_retrain: test set has no OOD points");
  const data::Dataset ood_test = test.subset(ood_rows);

  const auto per_round = static_cast<std::size_t>(
      std::ceil(config.k_percent / 100.0 * static_cast<double>(pool.size()) - 1e-9));
  RetrainCurve curve;
  curve.strategy = config.strategy;

  data::Dataset current = train;
  auto model = trainer(current);
  curve.points.push_back({0.0, OodAccuracy(model, ood_test)});
  std::vector<char> eligible(pool.size(), 1);

  for (std::size_t round = 1; round <= config.rounds; ++round) {
    std::vector<double> priority(pool.size(), 0.0);
    switch (config.strategy) {
      case Strategy::kEpistemicDesc: {
        const auto pred = model.predict(current);
        const auto z = bbox::ComputeErrorIndicator(current.labels, pred.labels).z;
        auto params = config.advisor_params;
        params.seed = DeriveSeed(config.seed, round);
        const auto advisor = advisor::FitAdvisor(current.features, z, params, config.advisor_members);
        priority = advisor.decompose(pool.features).epistemic;
        break;
      }
      case Strategy::kConfidenceAsc: {
        const auto conf = baselines::McpConfidence(model.predict(pool));
        for (std::size_t i = 0; i < conf.size(); ++i) priority[i] = -conf[i];
        break;
      }
      case Strategy::kTrustAsc: {
        const auto trust = baselines::TrustModel::Fit(current, config.trust);
        const auto scores = trust.score(pool.features, model.predict(pool).labels);
        for (std::size_t i = 0; i < scores.size(); ++i) priority[i] = -scores[i];
        break;
      }
      case Strategy::kRandom: {
        Rng rng(DeriveSeed(config.seed, round));
        for (auto& p : priority) p = rng.uniform();
        break;
      }
    }
    const auto picked = TopK(priority, eligible, per_round);
    if (!config.with_replacement) {
      for (auto i : picked) eligible[i] = 0;
    }
    current = data::Concat(current, pool.subset(picked));
    model = trainer(current);
    const double percent = config.k_percent * static_cast<double>(round);
    curve.points.push_back({percent, OodAccuracy(model, ood_test)});
  }
  return curve;
}

double CurveValueAt(const RetrainCurve& curve, double pool_percent) {
  const auto& pts = curve.points;
  if (pts.empty()) Fail(ErrorKind::kData, "empty retrain curve");
  if (pool_percent <= pts.front().pool_percent) return pts.front().ood_accuracy;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pool_percent <= pts[i].pool_percent) {
      const double span = pts[i].pool_percent - pts[i - 1].pool_percent;
      const double t = span > 0 ? (pool_percent - pts[i - 1].pool_percent) / span : 1.0;
      return pts[i - 1].ood_accuracy + t * (pts[i].ood_accuracy - pts[i - 1].ood_accuracy);
    }
  }
  return pts.back().ood_accuracy;
}

std::string CurveToCsv(const RetrainCurve& curve) {
  std::ostringstream out;
  WriteCsvRow(out, {"fraction", "value"});
  for (const auto& p : curve.points) {
    WriteCsvRow(out, {FormatDouble(p.pool_percent / 100.0), FormatDouble(p.ood_accuracy)});
  }
  return out.str();
}

}  // namespace riskadvisor::eval
