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

// The classifier under audit. Two reference models (softmax regression and a
// ReLU MLP) are trained in-process; any other system is audited through a
// table of its per-row predictions.

#ifndef RISKADVISOR_BLACKBOX_HPP_
#define RISKADVISOR_BLACKBOX_HPP_

#include <optional>
#include <string>
#include <vector>

#include "riskadvisor/common.hpp"
#include "riskadvisor/dataset.hpp"

namespace riskadvisor::bbox {

enum class ModelKind { kLogistic, kMlp, kExternal };

const char* ToString(ModelKind kind);

struct LogisticParams {
  double l2 = 1e-4;
  std::size_t epochs = 500;
  double lr = 0.1;
  std::uint64_t seed = 0;
};

struct MlpParams {
  std::vector<std::size_t> hidden{32, 16};
  std::size_t epochs = 200;
  double lr = 0.05;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
};

/// Fully connected layer; weights are (outputs x inputs).
struct DenseLayer {
  Matrix weights;
  std::vector<double> bias;

  bool operator==(const DenseLayer&) const = default;
};

struct Prediction {
  std::vector<int> labels;
  std::optional<Matrix> probabilities;
};

class BlackBoxModel {
 public:
  static BlackBoxModel FromLayers(ModelKind kind, int class_count, std::vector<DenseLayer> layers);
  static BlackBoxModel FromTable(int class_count, std::vector<int> labels,
                                 std::optional<Matrix> probabilities);

  ModelKind kind() const noexcept { return kind_; }
  int class_count() const noexcept { return class_count_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  bool has_probabilities() const noexcept;
  /// Feature width expected by built-ins; external tables accept any width.
  std::size_t input_width() const;

  /// Built-ins evaluate the network; external models echo their stored
  /// table, which must have exactly one entry per dataset row.
  Prediction predict(const data::Dataset& d) const;
  Prediction predict(const Matrix& features) const;

  std::string to_json() const;
  static BlackBoxModel FromJson(const std::string& text);

  bool operator==(const BlackBoxModel&) const = default;

 private:
  ModelKind kind_ = ModelKind::kLogistic;
  int class_count_ = 2;
  std::vector<DenseLayer> layers_;
  std::vector<int> table_labels_;
  std::optional<Matrix> table_probabilities_;
};

/// Softmax regression by full-batch gradient descent on mean cross-entropy
/// plus l2/2 * ||W||^2 (biases unpenalized), starting from zero weights.
BlackBoxModel TrainLogistic(const data::Dataset& train, const LogisticParams& params = {});

/// ReLU network with softmax output trained by mini-batch SGD. Weights start
/// Glorot-uniform from `params.seed`, biases at zero.
BlackBoxModel TrainMlp(const data::Dataset& train, const MlpParams& params = {});

/// Reads `pred_label[,proba_0..proba_{C-1}]` rows.
BlackBoxModel LoadExternalPredictions(const std::string& path, int class_count);

/// Row-wise argmax; ties go to the lowest class index.
int Argmax(std::span<const double> row);

struct ErrorIndicator {
  std::vector<bool> z;
  double positive_rate = 0.0;
};

ErrorIndicator ComputeErrorIndicator(std::span<const int> labels_true,
                                     std::span<const int> labels_pred);

double Accuracy(std::span<const int> labels_true, std::span<const int> labels_pred);

}  // namespace riskadvisor::bbox

#endif  // RISKADVISOR_BLACKBOX_HPP_
