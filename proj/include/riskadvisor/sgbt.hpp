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

// Stochastic gradient-boosted regression trees for a binary target under
// binomial log-loss.
//
// Every round draws ceil(sample_rate * N) training rows without replacement,
// fits a CART regression tree to the negative gradient z - p on those rows,
// and sets each leaf to one Newton step sum(r) / sum(p(1-p)) (clamped to
// [-4, 4]). Leaf values are stored unshrunk; the learning rate is applied at
// prediction time:
//
//   p(x) = clamp(sigmoid(base_score + learning_rate * sum_t tree_t(x)),
//                1e-6, 1 - 1e-6)

#ifndef RISKADVISOR_SGBT_HPP_
#define RISKADVISOR_SGBT_HPP_

#include <optional>
#include <string>
#include <vector>

#include "riskadvisor/common.hpp"

namespace riskadvisor::sgbt {

inline constexpr double kProbEpsilon = 1e-6;
inline constexpr double kLeafClamp = 4.0;

struct SgbtParams {
  std::size_t n_trees = 1000;
  std::size_t max_depth = 4;
  double learning_rate = 0.1;
  double sample_rate = 0.5;
  std::size_t min_samples_leaf = 5;
  std::uint64_t seed = 0;

  /// Throws kConfig naming the first out-of-range field.
  void validate() const;
  bool operator==(const SgbtParams&) const = default;
};

struct TreeNode {
  /// -1 marks a leaf.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

/// Flat tree; node 0 is the root. Rows go left iff x[feature] <= threshold.
class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes);

  double predict(std::span<const double> x) const;
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t depth() const;

  bool operator==(const RegressionTree&) const = default;

 private:
  std::vector<TreeNode> nodes_;
};

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;

  bool found() const noexcept { return feature >= 0; }
};

/// Exhaustive variance-reduction search over every feature and every
/// midpoint between consecutive distinct values among `rows`. Gain is the
/// drop in mean squared deviation of the residuals:
///   (SSE_parent - SSE_left - SSE_right) / n.
/// Ties prefer the lower feature index, then the lower threshold. Returns a
/// not-found split when no candidate has positive gain.
Split FindBestSplit(const Matrix& features, std::span<const double> residuals,
                    std::span<const std::size_t> rows, std::size_t min_samples_leaf = 1);

class SgbtModel {
 public:
  SgbtModel() = default;
  SgbtModel(SgbtParams params, std::size_t n_features, double base_score,
            std::vector<RegressionTree> trees);

  const SgbtParams& params() const noexcept { return params_; }
  std::size_t n_features() const noexcept { return n_features_; }
  double base_score() const noexcept { return base_score_; }
  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }

  /// Unclamped log-odds.
  double raw_score(std::span<const double> x) const;
  double predict_proba(std::span<const double> x) const;
  std::vector<double> predict_proba(const Matrix& features) const;

  std::string to_json() const;
  static SgbtModel FromJson(const std::string& text);

  bool operator==(const SgbtModel&) const = default;

 private:
  SgbtParams params_;
  std::size_t n_features_ = 0;
  double base_score_ = 0.0;
  std::vector<RegressionTree> trees_;
};

struct FitTrace {
  /// Mean training log-loss of the raw scores (the boosted objective, no
  /// probability clamp) after each round; entry 0 is the base-score-only model.
  std::vector<double> train_log_loss;
  std::vector<std::size_t> subsample_sizes;
};

SgbtModel FitSgbt(const Matrix& features, const std::vector<bool>& z, const SgbtParams& params,
                  FitTrace* trace = nullptr);

double Sigmoid(double x);
double ClampProbability(double p);
/// Mean binary log-loss of `p` against `z`.
double LogLoss(std::span<const double> p, const std::vector<bool>& z);
/// Mean binary log-loss of sigmoid(raw) against `z`, computed from log-odds.
double RawLogLoss(std::span<const double> raw, const std::vector<bool>& z);

}  // namespace riskadvisor::sgbt

#endif  // RISKADVISOR_SGBT_HPP_
