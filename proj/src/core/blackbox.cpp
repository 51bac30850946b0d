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

#include "riskadvisor/blackbox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "riskadvisor/csv.hpp"

namespace riskadvisor::bbox {

using json = nlohmann::json;

const char* ToString(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLogistic:
      return "logistic";
    case ModelKind::kMlp:
      return "mlp";
    case ModelKind::kExternal:
      return "external";
  }
  return "unknown";
}

int Argmax(std::span<const double> row) {
  int best = 0;
  for (std::size_t c = 1; c < row.size(); ++c) {
    if (row[c] > row[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  return best;
}

namespace {

void SoftmaxInPlace(std::span<double> logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (auto& v : logits) {
    v = std::exp(v - top);
    sum += v;
  }
  for (auto& v : logits) v /= sum;
}

// Forward pass for one row. `acts[l]` receives the post-activation output of
// layer l (softmax probabilities for the last layer).
void Forward(const std::vector<DenseLayer>& layers, std::span<const double> x,
             std::vector<std::vector<double>>& acts) {
  acts.resize(layers.size());
  std::span<const double> input = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    auto& out = acts[l];
    out.assign(layer.bias.begin(), layer.bias.end());
    for (std::size_t o = 0; o < out.size(); ++o) {
      auto w = layer.weights.row(o);
      double s = out[o];
      for (std::size_t i = 0; i < input.size(); ++i) s += w[i] * input[i];
      out[o] = s;
    }
    if (l + 1 < layers.size()) {
      for (auto& v : out) v = std::max(0.0, v);
    } else {
      SoftmaxInPlace(out);
    }
    input = out;
  }
}

double RowLoss(std::span<const double> proba, int label) {
  return -std::log(std::max(proba[static_cast<std::size_t>(label)], 1e-300));
}

void CheckTrainable(const data::Dataset& train) {
  train.validate();
  if (train.size() == 0) Fail(ErrorKind::kData, "training set is empty");
  if (train.width() == 0) Fail(ErrorKind::kData, "training set has no features");
}

void CheckFiniteLoss(double loss, std::size_t epoch, const char* model) {
  if (!std::isfinite(loss)) {
    Fail(ErrorKind::kNumeric, std::string(model) + " training diverged at epoch " +
                                  std::to_string(epoch) + " (non-finite loss; lower the learning rate)");
  }
}

}  // namespace

BlackBoxModel BlackBoxModel::FromLayers(ModelKind kind, int class_count,
                                        std::vector<DenseLayer> layers) {
  if (kind == ModelKind::kExternal) Fail(ErrorKind::kConfig, "external models carry tables");
  if (layers.empty()) Fail(ErrorKind::kConfig, "network needs at least one layer");
  if (layers.back().weights.rows() != static_cast<std::size_t>(class_count)) {
    Fail(ErrorKind::kConfig, "output layer width must equal class_count");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].bias.size() != layers[l].weights.rows()) {
      Fail(ErrorKind::kConfig, "layer bias length mismatch");
    }
    if (l > 0 && layers[l].weights.cols() != layers[l - 1].weights.rows()) {
      Fail(ErrorKind::kConfig, "consecutive layer shapes do not chain");
    }
  }
  BlackBoxModel m;
  m.kind_ = kind;
  m.class_count_ = class_count;
  m.layers_ = std::move(layers);
  return m;
}

BlackBoxModel BlackBoxModel::FromTable(int class_count, std::vector<int> labels,
                                       std::optional<Matrix> probabilities) {
  if (class_count < 2) Fail(ErrorKind::kConfig, "class_count must be >= 2");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= class_count) {
      Fail(ErrorKind::kData, "predicted label out of range at row " + std::to_string(i + 1));
    }
  }
  if (probabilities && (probabilities->rows() != labels.size() ||
                        probabilities->cols() != static_cast<std::size_t>(class_count))) {
    Fail(ErrorKind::kData, "probability table shape does not match labels/class_count");
  }
  BlackBoxModel m;
  m.kind_ = ModelKind::kExternal;
  m.class_count_ = class_count;
  m.table_labels_ = std::move(labels);
  m.table_probabilities_ = std::move(probabilities);
  return m;
}

bool BlackBoxModel::has_probabilities() const noexcept {
  return kind_ != ModelKind::kExternal || table_probabilities_.has_value();
}

std::size_t BlackBoxModel::input_width() const {
  return layers_.empty() ? 0 : layers_.front().weights.cols();
}

Prediction BlackBoxModel::predict(const data::Dataset& d) const {
  if (kind_ == ModelKind::kExternal) {
    if (d.size() != table_labels_.size()) {
      Fail(ErrorKind::kData, "external prediction table has " +
                                 std::to_string(table_labels_.size()) + " rows but dataset has " +
                                 std::to_string(d.size()));
    }
    return {table_labels_, table_probabilities_};
  }
  return predict(d.features);
}

Prediction BlackBoxModel::predict(const Matrix& features) const {
  if (kind_ == ModelKind::kExternal) {
    if (features.rows() != table_labels_.size()) {
      Fail(ErrorKind::kData, "external prediction table length mismatch");
    }
    return {table_labels_, table_probabilities_};
  }
  if (features.cols() != input_width()) {
    Fail(ErrorKind::kData, "feature width " + std::to_string(features.cols()) +
                               " does not match model width " + std::to_string(input_width()));
  }
  Prediction p;
  p.labels.resize(features.rows());
  Matrix proba(features.rows(), static_cast<std::size_t>(class_count_));
  std::vector<std::vector<double>> acts;
  for (std::size_t r = 0; r < features.rows(); ++r) {
    Forward(layers_, features.row(r), acts);
    std::copy(acts.back().begin(), acts.back().end(), proba.row(r).begin());
    p.labels[r] = Argmax(proba.row(r));
  }
  p.probabilities = std::move(proba);
  return p;
}

namespace {

json MatrixToJson(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  }
  return rows;
}

Matrix MatrixFromJson(const json& j, std::size_t expected_cols) {
  const std::size_t rows = j.size();
  Matrix m(rows, expected_cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = j.at(r);
    if (row.size() != expected_cols) Fail(ErrorKind::kData, "ragged matrix in model JSON");
    for (std::size_t c = 0; c < expected_cols; ++c) m(r, c) = row.at(c).get<double>();
  }
  return m;
}

}  // namespace

std::string BlackBoxModel::to_json() const {
  json j;
  j["version"] = 1;
  j["kind"] = ToString(kind_);
  j["class_count"] = class_count_;
  if (kind_ == ModelKind::kExternal) {
    j["labels"] = table_labels_;
    if (table_probabilities_) j["probabilities"] = MatrixToJson(*table_probabilities_);
  } else {
    json layers = json::array();
    for (const auto& layer : layers_) {
      json lj;
      lj["inputs"] = layer.weights.cols();
      lj["weights"] = MatrixToJson(layer.weights);
      lj["bias"] = layer.bias;
      layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);
  }
  return j.dump(1);
}

BlackBoxModel BlackBoxModel::FromJson(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("version").get<int>() != 1) Fail(ErrorKind::kData, "unsupported bbox model version");
    const auto kind = j.at("kind").get<std::string>();
    const int classes = j.at("class_count").get<int>();
    if (kind == "external") {
      std::optional<Matrix> proba;
      if (j.contains("probabilities")) {
        proba = MatrixFromJson(j["probabilities"], static_cast<std::size_t>(classes));
      }
      return FromTable(classes, j.at("labels").get<std::vector<int>>(), std::move(proba));
    }
    ModelKind mk;
    if (kind == "logistic") {
      mk = ModelKind::kLogistic;
    } else if (kind == "mlp") {
      mk = ModelKind::kMlp;
    } else {
      Fail(ErrorKind::kData, "unknown bbox kind '" + kind + "'");
    }
    std::vector<DenseLayer> layers;
    for (const auto& lj : j.at("layers")) {
      DenseLayer layer;
      layer.weights = MatrixFromJson(lj.at("weights"), lj.at("inputs").get<std::size_t>());
      layer.bias = lj.at("bias").get<std::vector<double>>();
      layers.push_back(std::move(layer));
    }
    return FromLayers(mk, classes, std::move(layers));
  } catch (const json::exception& e) {
    Fail(ErrorKind::kData, std::string("malformed bbox model JSON: ") + e.what());
  }
}

BlackBoxModel TrainLogistic(const data::Dataset& train, const LogisticParams& params) {
  CheckTrainable(train);
  if (!(params.l2 >= 0.0)) Fail(ErrorKind::kConfig, "l2 must be >= 0");
  if (!(params.lr > 0.0)) Fail(ErrorKind::kConfig, "lr must be > 0");
  const std::size_t n = train.size();
  const std::size_t d = train.width();
  const auto classes = static_cast<std::size_t>(train.class_count);

  DenseLayer layer{Matrix(classes, d), std::vector<double>(classes, 0.0)};
  Matrix grad_w(classes, d);
  std::vector<double> grad_b(classes);
  std::vector<double> proba(classes);
  const double inv_n = 1.0 / static_cast<double>(n);

  for (std::size_t epoch = 0; epoch <= params.epochs; ++epoch) {
    std::fill(grad_w.data().begin(), grad_w.data().end(), 0.0);
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
    double loss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      auto x = train.features.row(r);
      for (std::size_t c = 0; c < classes; ++c) {
        auto w = layer.weights.row(c);
        double s = layer.bias[c];
        for (std::size_t j = 0; j < d; ++j) s += w[j] * x[j];
        proba[c] = s;
      }
      SoftmaxInPlace(proba);
      const auto y = static_cast<std::size_t>(train.labels[r]);
      loss += RowLoss(proba, train.labels[r]);
      for (std::size_t c = 0; c < classes; ++c) {
        const double delta = proba[c] - (c == y ? 1.0 : 0.0);
        auto g = grad_w.row(c);
        for (std::size_t j = 0; j < d; ++j) g[j] += delta * x[j];
        grad_b[c] += delta;
      }
    }
    double penalty = 0.0;
    for (double w : layer.weights.data()) penalty += w * w;
    loss = loss * inv_n + 0.5 * params.l2 * penalty;
    CheckFiniteLoss(loss, epoch, "logistic");
    if (epoch == params.epochs) break;
    for (std::size_t c = 0; c < classes; ++c) {
      auto w = layer.weights.row(c);
      auto g = grad_w.row(c);
      for (std::size_t j = 0; j < d; ++j) w[j] -= params.lr * (g[j] * inv_n + params.l2 * w[j]);
      layer.bias[c] -= params.lr * grad_b[c] * inv_n;
    }
  }
  std::vector<DenseLayer> layers;
  layers.push_back(std::move(layer));
  return BlackBoxModel::FromLayers(ModelKind::kLogistic, train.class_count, std::move(layers));
}

BlackBoxModel TrainMlp(const data::Dataset& train, const MlpParams& params) {
  CheckTrainable(train);
  if (params.hidden.empty()) Fail(ErrorKind::kConfig, "mlp needs at least one hidden layer");
  if (std::find(params.hidden.begin(), params.hidden.end(), 0u) != params.hidden.end()) {
    Fail(ErrorKind::kConfig, "hidden layer widths must be >= 1");
  }
  if (!(params.lr > 0.0)) Fail(ErrorKind::kConfig, "lr must be > 0");
  if (params.batch_size == 0) Fail(ErrorKind::kConfig, "batch_size must be >= 1");

  const std::size_t n = train.size();
  const auto classes = static_cast<std::size_t>(train.class_count);
  std::vector<std::size_t> widths{train.width()};
  widths.insert(widths.end(), params.hidden.begin(), params.hidden.end());
  widths.push_back(classes);

  Rng rng(params.seed);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t fan_in = widths[l];
    const std::size_t fan_out = widths[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    DenseLayer layer{Matrix(fan_out, fan_in), std::vector<double>(fan_out, 0.0)};
    for (auto& w : layer.weights.data()) w = rng.uniform(-limit, limit);
    layers.push_back(std::move(layer));
  }

  std::vector<DenseLayer> grads = layers;
  std::vector<std::vector<double>> acts;
  std::vector<std::vector<double>> deltas(layers.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += params.batch_size) {
      const std::size_t end = std::min(n, start + params.batch_size);
      for (auto& g : grads) {
        std::fill(g.weights.data().begin(), g.weights.data().end(), 0.0);
        std::fill(g.bias.begin(), g.bias.end(), 0.0);
      }
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t r = order[b];
        auto x = train.features.row(r);
        Forward(layers, x, acts);
        const auto y = static_cast<std::size_t>(train.labels[r]);
        epoch_loss += RowLoss(acts.back(), train.labels[r]);

        const std::size_t last = layers.size() - 1;
        deltas[last] = acts[last];
        deltas[last][y] -= 1.0;
        for (std::size_t l = last + 1; l-- > 0;) {
          std::span<const double> input = l == 0 ? x : std::span<const double>(acts[l - 1]);
          auto& g = grads[l];
          const auto& delta = deltas[l];
          for (std::size_t o = 0; o < delta.size(); ++o) {
            if (delta[o] == 0.0) continue;
            auto grow = g.weights.row(o);
            for (std::size_t i = 0; i < input.size(); ++i) grow[i] += delta[o] * input[i];
            g.bias[o] += delta[o];
          }
          if (l == 0) break;
          auto& prev = deltas[l - 1];
          prev.assign(input.size(), 0.0);
          for (std::size_t o = 0; o < delta.size(); ++o) {
            if (delta[o] == 0.0) continue;
            auto w = layers[l].weights.row(o);
            for (std::size_t i = 0; i < input.size(); ++i) prev[i] += delta[o] * w[i];
          }
          // ReLU gate: the activation is zero exactly where the unit is off.
          for (std::size_t i = 0; i < input.size(); ++i) {
            if (acts[l - 1][i] <= 0.0) prev[i] = 0.0;
          }
        }
      }
      const double step = params.lr / static_cast<double>(end - start);
      for (std::size_t l = 0; l < layers.size(); ++l) {
        auto& w = layers[l].weights.data();
        const auto& gw = grads[l].weights.data();
        for (std::size_t k = 0; k < w.size(); ++k) w[k] -= step * gw[k];
        for (std::size_t k = 0; k < layers[l].bias.size(); ++k) {
          layers[l].bias[k] -= step * grads[l].bias[k];
        }
      }
    }
    CheckFiniteLoss(epoch_loss, epoch, "mlp");
  }
  return BlackBoxModel::FromLayers(ModelKind::kMlp, train.class_count, std::move(layers));
}

BlackBoxModel LoadExternalPredictions(const std::string& path, int class_count) {
  if (class_count < 2) Fail(ErrorKind::kConfig, "class_count must be >= 2");
  const CsvTable table = ReadCsvFile(path);
  const std::size_t label_col = table.column("pred_label", path);
  const auto classes = static_cast<std::size_t>(class_count);

  std::vector<std::size_t> proba_cols;
  for (std::size_t c = 0; c < classes; ++c) {
    const std::string name = "proba_" + std::to_string(c);
    if (std::find(table.header.begin(), table.header.end(), name) != table.header.end()) {
      proba_cols.push_back(table.column(name, path));
    }
  }
  if (!proba_cols.empty() && proba_cols.size() != classes) {
    throw CsvError(CsvErrorCode::kMissingColumn,
                   path + ": probability columns must cover proba_0..proba_" +
                       std::to_string(classes - 1),
                   0, "proba_" + std::to_string(proba_cols.size()));
  }

  const std::size_t n = table.rows.size();
  std::vector<int> labels(n);
  std::optional<Matrix> proba;
  if (!proba_cols.empty()) proba = Matrix(n, classes);
  for (std::size_t r = 0; r < n; ++r) {
    double v;
    const auto& cell = table.rows[r][label_col];
    if (!ParseDouble(cell, v) || std::floor(v) != v || v < 0 || v >= class_count) {
      throw CsvError(CsvErrorCode::kInvalidValue,
                     path + ": row " + std::to_string(r + 1) + ": pred_label '" + cell +
                         "' is not a class index in [0, " + std::to_string(class_count) + ")",
                     r + 1, "pred_label");
    }
    labels[r] = static_cast<int>(v);
    if (proba) {
      double sum = 0.0;
      for (std::size_t c = 0; c < classes; ++c) {
        const auto& pc = table.rows[r][proba_cols[c]];
        double p;
        if (!ParseDouble(pc, p) || !std::isfinite(p) || p < 0.0 || p > 1.0) {
          throw CsvError(CsvErrorCode::kUnparseableCell,
                         path + ": row " + std::to_string(r + 1) + ", column 'proba_" +
                             std::to_string(c) + "': invalid probability '" + pc + "'",
                         r + 1, "proba_" + std::to_string(c));
        }
        (*proba)(r, c) = p;
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-6) {
        throw CsvError(CsvErrorCode::kInvalidValue,
                       path + ": row " + std::to_string(r + 1) + ": probabilities sum to " +
                           FormatDouble(sum) + ", expected 1",
                       r + 1, "");
      }
    }
  }
  return BlackBoxModel::FromTable(class_count, std::move(labels), std::move(proba));
}

ErrorIndicator ComputeErrorIndicator(std::span<const int> labels_true,
                                     std::span<const int> labels_pred) {
  if (labels_true.size() != labels_pred.size()) {
    Fail(ErrorKind::kData, "error_indicator: length mismatch (" +
                               std::to_string(labels_true.size()) + " vs " +
                               std::to_string(labels_pred.size()) + ")");
  }
  ErrorIndicator e;
  e.z.resize(labels_true.size());
  std::size_t positives = 0;
  for (std::size_t i = 0; i < labels_true.size(); ++i) {
    e.z[i] = labels_true[i] != labels_pred[i];
    positives += e.z[i] ? 1 : 0;
  }
  e.positive_rate = labels_true.empty()
                        ? 0.0
                        : static_cast<double>(positives) / static_cast<double>(labels_true.size());
  return e;
}

double Accuracy(std::span<const int> labels_true, std::span<const int> labels_pred) {
  return 1.0 - ComputeErrorIndicator(labels_true, labels_pred).positive_rate;
}

}  // namespace riskadvisor::bbox
