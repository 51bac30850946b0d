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

// An ensemble of independently seeded SGBT error predictors and the
// entropy decomposition of its output.
//
// For member probabilities p_1..p_M at a point (entropies in bits):
//   error_prob = mean_m p_m
//   total      = H(error_prob)
//   aleatoric  = mean_m H(p_m)
//   epistemic  = total - aleatoric            (>= 0 by concavity of H)
//   risk       = w_model * error_prob + w_epistemic * epistemic
//                + w_aleatoric * aleatoric

#ifndef RISKADVISOR_ADVISOR_HPP_
#define RISKADVISOR_ADVISOR_HPP_

#include <string>
#include <vector>

#include "riskadvisor/common.hpp"
#include "riskadvisor/sgbt.hpp"

namespace riskadvisor::advisor {

struct RiskWeights {
  double model = 1.0;
  double epistemic = 1.0;
  double aleatoric = 1.0;

  bool operator==(const RiskWeights&) const = default;
};

struct PointUncertainty {
  double error_prob = 0.0;
  double total = 0.0;
  double aleatoric = 0.0;
  double epistemic = 0.0;
  double risk_score = 0.0;
};

struct UncertaintyReport {
  Matrix member_probs;  // N x M
  std::vector<double> error_prob;
  std::vector<double> total;
  std::vector<double> aleatoric;
  std::vector<double> epistemic;
  std::vector<double> risk_score;

  std::size_t size() const noexcept { return error_prob.size(); }
};

/// Shannon entropy in bits of a Bernoulli(p); 0 log 0 = 0.
double BinaryEntropy(double p);

/// Decomposes one row of member probabilities.
PointUncertainty DecomposeRow(std::span<const double> member_probs, const RiskWeights& weights = {});

/// Decomposes every row of an N x M member-probability matrix.
UncertaintyReport DecomposeProbabilities(Matrix member_probs, const RiskWeights& weights = {});

class AdvisorModel {
 public:
  AdvisorModel() = default;
  AdvisorModel(std::vector<sgbt::SgbtModel> members, RiskWeights weights = {});

  const std::vector<sgbt::SgbtModel>& members() const noexcept { return members_; }
  std::vector<std::uint64_t> member_seeds() const;
  const RiskWeights& weights() const noexcept { return weights_; }
  void set_weights(const RiskWeights& w);
  std::size_t n_features() const;

  Matrix member_probabilities(const Matrix& features) const;
  UncertaintyReport decompose(const Matrix& features) const;

  std::string to_json() const;
  static AdvisorModel FromJson(const std::string& text);

  bool operator==(const AdvisorModel&) const = default;

 private:
  std::vector<sgbt::SgbtModel> members_;
  RiskWeights weights_;
};

/// Member m is trained with seed params.seed + m; otherwise identical.
AdvisorModel FitAdvisor(const Matrix& features, const std::vector<bool>& z,
                        const sgbt::SgbtParams& params, std::size_t members,
                        const RiskWeights& weights = {});

/// Header error_prob,total,aleatoric,epistemic,risk_score[,member_0..].
std::string ReportToCsv(const UncertaintyReport& report, bool include_members = false);
void SaveReportCsv(const UncertaintyReport& report, const std::string& path,
                   bool include_members = false);
/// Reads a report CSV back; member columns are restored when present.
UncertaintyReport LoadReportCsv(const std::string& path);

}  // namespace riskadvisor::advisor

#endif  // RISKADVISOR_ADVISOR_HPP_
