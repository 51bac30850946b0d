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

#include "riskadvisor/sgbt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json_internal.hpp"

namespace riskadvisor::sgbt {

using json = nlohmann::json;

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double ClampProbability(double p) {
  return std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
}

double LogLoss(std::span<const double> p, const std::vector<bool>& z) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = ClampProbability(p[i]);
    total -= z[i] ? std::log(q) : std::log1p(-q);
  }
  return p.empty() ? 0.0 : total / static_cast<double>(p.size());
}

double RawLogLoss(std::span<const double> raw, const std::vector<bool>& z) {
  // softplus(-f) for positives, softplus(f) for negatives, without overflow.
  double total = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double f = z[i] ? -raw[i] : raw[i];
    total += std::max(f, 0.0) + std::log1p(std::exp(-std::abs(f)));
  }
  return raw.empty() ? 0.0 : total / static_cast<double>(raw.size());
}

void SgbtParams::validate() const {
  if (max_depth < 1) Fail(ErrorKind::kConfig, "max_depth must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    Fail(ErrorKind::kConfig, "learning_rate must lie in (0, 1]");
  }
  if (!(sample_rate > 0.0 && sample_rate <= 1.0)) {
    Fail(ErrorKind::kConfig, "sample_rate must lie in (0, 1]");
  }
  if (min_samples_leaf < 1) Fail(ErrorKind::kConfig, "min_samples_leaf must be >= 1");
}

// ---------------------------------------------------------------------------
// Trees

RegressionTree::RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) Fail(ErrorKind::kData, "tree has no nodes");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.is_leaf()) continue;
    const auto size = static_cast<int>(nodes_.size());
    if (n.left <= static_cast<int>(i) || n.right <= static_cast<int>(i) || n.left >= size ||
        n.right >= size) {
      Fail(ErrorKind::kData, "tree node " + std::to_string(i) + " has invalid children");
    }
  }
}

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                       : n.right);
  }
  return nodes_[i].value;
}

std::size_t RegressionTree::depth() const {
  std::vector<std::size_t> depth_of(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    deepest = std::max(deepest, depth_of[i]);
    if (n.is_leaf()) continue;
    depth_of[static_cast<std::size_t>(n.left)] = depth_of[i] + 1;
    depth_of[static_cast<std::size_t>(n.right)] = depth_of[i] + 1;
  }
  return deepest;
}

namespace {

// Rows of one node, listed once per feature in ascending feature order
// (ties by row index).
using SortedRows = std::vector<std::vector<std::size_t>>;

// next_up[f][r], when given, is the smallest value of feature f above x(r, f)
// over the whole training set. Thresholds then sit between consecutive
// distinct training values even when the node holds a subsample.
using NextValues = std::vector<std::vector<double>>;

Split BestSplitSorted(const Matrix& x, std::span<const double> residuals, const SortedRows& sorted,
                      std::size_t min_samples_leaf, const NextValues* next_up = nullptr) {
  Split best;
  if (sorted.empty()) return best;
  const std::size_t n = sorted[0].size();
  if (n < 2 * std::max<std::size_t>(min_samples_leaf, 1)) return best;

  double sum = 0.0;
  double sum_sq = 0.0;
  for (auto r : sorted[0]) {
    sum += residuals[r];
    sum_sq += residuals[r] * residuals[r];
  }
  const double nd = static_cast<double>(n);
  const double parent_term = sum * sum / nd;
  const double parent_sse = sum_sq - parent_term;
  // Constant residuals leave only rounding noise to split on.
  if (!(parent_sse > 1e-12 * sum_sq)) return best;
  double best_gain = 1e-12 * parent_sse;

  const std::size_t n_features = std::min(sorted.size(), x.cols());
  for (std::size_t f = 0; f < n_features; ++f) {
    const auto& rows = sorted[f];
    double left_sum = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left_sum += residuals[rows[i]];
      const std::size_t n_left = i + 1;
      const std::size_t n_right = n - n_left;
      if (n_left < min_samples_leaf) continue;
      if (n_right < min_samples_leaf) break;
      const double a = x(rows[i], f);
      const double b = x(rows[i + 1], f);
      if (!(a < b)) continue;
      const double right_sum = sum - left_sum;
      const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                          right_sum * right_sum / static_cast<double>(n_right) - parent_term;
      if (gain > best_gain) {
        const double upper = next_up ? (*next_up)[f][rows[i]] : b;
        double mid = a + (upper - a) / 2.0;
        if (!(mid < upper)) mid = a;
        best_gain = gain;
        best.feature = static_cast<int>(f);
        best.threshold = mid;
        best.gain = gain / nd;
      }
    }
  }
  return best;
}

SortedRows SortRows(const Matrix& x, std::span<const std::size_t> rows) {
  SortedRows sorted(x.cols());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    auto& s = sorted[f];
    s.assign(rows.begin(), rows.end());
    std::sort(s.begin(), s.end(), [&](std::size_t a, std::size_t b) {
      const double va = x(a, f);
      const double vb = x(b, f);
      return va < vb || (va == vb && a < b);
    });
  }
  return sorted;
}

struct TreeBuilder {
  const Matrix& x;
  std::span<const double> residuals;
  std::span<const double> hessians;
  std::size_t max_depth;
  std::size_t min_samples_leaf;
  const NextValues* next_up;
  std::vector<TreeNode> nodes;

  double LeafValue(const std::vector<std::size_t>& rows) const {
    double g = 0.0;
    double h = 0.0;
    for (auto r : rows) {
      g += residuals[r];
      h += hessians[r];
    }
    if (g == 0.0) return 0.0;
    if (!(h > 0.0)) return g > 0.0 ? kLeafClamp : -kLeafClamp;
    return std::clamp(g / h, -kLeafClamp, kLeafClamp);
  }

  // Preorder construction: a node's id precedes its left subtree, which
  // precedes its right subtree.
  int Build(SortedRows sorted, std::size_t depth) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    Split split;
    if (depth < max_depth) split = BestSplitSorted(x, residuals, sorted, min_samples_leaf, next_up);
    if (!split.found()) {
      nodes[static_cast<std::size_t>(id)].value = LeafValue(sorted[0]);
      return id;
    }
    const auto f = static_cast<std::size_t>(split.feature);
    SortedRows left(sorted.size());
    SortedRows right(sorted.size());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
      for (auto r : sorted[k]) {
        (x(r, f) <= split.threshold ? left[k] : right[k]).push_back(r);
      }
    }
    sorted.clear();
    const int l = Build(std::move(left), depth + 1);
    const int r = Build(std::move(right), depth + 1);
    auto& node = nodes[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return id;
  }
};

}  // namespace

Split FindBestSplit(const Matrix& features, std::span<const double> residuals,
                    std::span<const std::size_t> rows, std::size_t min_samples_leaf) {
  if (residuals.size() != features.rows()) {
    Fail(ErrorKind::kData, "find_best_split: residual count does not match feature rows");
  }
  return BestSplitSorted(features, residuals, SortRows(features, rows), min_samples_leaf);
}

// ---------------------------------------------------------------------------
// Model

SgbtModel::SgbtModel(SgbtParams params, std::size_t n_features, double base_score,
                     std::vector<RegressionTree> trees)
    : params_(params), n_features_(n_features), base_score_(base_score), trees_(std::move(trees)) {}

double SgbtModel::raw_score(std::span<const double> x) const {
  if (x.size() != n_features_) {
    Fail(ErrorKind::kData, "sgbt: feature width " + std::to_string(x.size()) +
                               " does not match model width " + std::to_string(n_features_));
  }
  double s = base_score_;
  for (const auto& t : trees_) s += params_.learning_rate * t.predict(x);
  return s;
}

double SgbtModel::predict_proba(std::span<const double> x) const {
  return ClampProbability(Sigmoid(raw_score(x)));
}

std::vector<double> SgbtModel::predict_proba(const Matrix& features) const {
  if (features.cols() != n_features_) {
    Fail(ErrorKind::kData, "sgbt: feature width " + std::to_string(features.cols()) +
                               " does not match model width " + std::to_string(n_features_));
  }
  std::vector<double> out(features.rows());
  for (std::size_t r = 0; r < features.rows(); ++r) out[r] = predict_proba(features.row(r));
  return out;
}

SgbtModel FitSgbt(const Matrix& features, const std::vector<bool>& z, const SgbtParams& params,
                  FitTrace* trace) {
  params.validate();
  const std::size_t n = features.rows();
  if (n < 2) Fail(ErrorKind::kData, "sgbt needs at least 2 training rows");
  if (z.size() != n) Fail(ErrorKind::kData, "sgbt: target length does not match feature rows");
  for (double v : features.data()) {
    if (!std::isfinite(v)) Fail(ErrorKind::kData, "sgbt: non-finite feature value");
  }

  const auto positives = static_cast<double>(std::count(z.begin(), z.end(), true));
  const double p0 = ClampProbability(positives / static_cast<double>(n));
  const double base = std::log(p0 / (1.0 - p0));

  const auto sample_size = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(params.sample_rate * static_cast<double>(n) - 1e-9)), 1, n);

  // Global per-feature order, filtered down to each round's sample.
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  const SortedRows global = SortRows(features, all);
  NextValues next_up(features.cols(), std::vector<double>(n));
  for (std::size_t f = 0; f < features.cols(); ++f) {
    const auto& order = global[f];
    double above = std::numeric_limits<double>::infinity();
    for (std::size_t k = n; k-- > 0;) {
      const double v = features(order[k], f);
      next_up[f][order[k]] = above;
      if (k > 0 && features(order[k - 1], f) < v) above = v;
    }
  }

  std::vector<double> raw(n, base);
  std::vector<double> residuals(n);
  std::vector<double> hessians(n);
  std::vector<char> in_sample(n, 0);
  std::vector<std::size_t> pool(n);
  std::vector<RegressionTree> trees;
  trees.reserve(params.n_trees);

  auto record_loss = [&] {
    if (trace) trace->train_log_loss.push_back(RawLogLoss(raw, z));
  };
  if (trace) {
    trace->train_log_loss.clear();
    trace->subsample_sizes.clear();
  }
  record_loss();

  for (std::size_t round = 0; round < params.n_trees; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = Sigmoid(raw[i]);
      residuals[i] = (z[i] ? 1.0 : 0.0) - p;
      hessians[i] = p * (1.0 - p);
    }

    Rng rng(DeriveSeed(params.seed, round));
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < sample_size; ++i) {
      std::swap(pool[i], pool[i + rng.below(n - i)]);
    }
    std::fill(in_sample.begin(), in_sample.end(), 0);
    for (std::size_t i = 0; i < sample_size; ++i) in_sample[pool[i]] = 1;

    SortedRows root(features.cols());
    for (std::size_t f = 0; f < features.cols(); ++f) {
      root[f].reserve(sample_size);
      for (auto r : global[f]) {
        if (in_sample[r]) root[f].push_back(r);
      }
    }
    if (features.cols() == 0) {
      root.emplace_back(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(sample_size));
      std::sort(root[0].begin(), root[0].end());
    }

    TreeBuilder builder{features,         residuals, hessians, params.max_depth,
                        params.min_samples_leaf, &next_up, {}};
    builder.Build(std::move(root), 0);
    RegressionTree tree(std::move(builder.nodes));
    for (std::size_t i = 0; i < n; ++i) {
      raw[i] += params.learning_rate * tree.predict(features.row(i));
    }
    trees.push_back(std::move(tree));
    if (trace) trace->subsample_sizes.push_back(sample_size);
    record_loss();
  }
  return SgbtModel(params, features.cols(), base, std::move(trees));
}

// ---------------------------------------------------------------------------
// JSON

json ParamsToJson(const SgbtParams& p) {
  return json{{"n_trees", p.n_trees},
              {"max_depth", p.max_depth},
              {"learning_rate", p.learning_rate},
              {"sample_rate", p.sample_rate},
              {"min_samples_leaf", p.min_samples_leaf},
              {"seed", p.seed}};
}

SgbtParams ParamsFromJson(const json& j) {
  SgbtParams p;
  p.n_trees = j.at("n_trees").get<std::size_t>();
  p.max_depth = j.at("max_depth").get<std::size_t>();
  p.learning_rate = j.at("learning_rate").get<double>();
  p.sample_rate = j.at("sample_rate").get<double>();
  p.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.validate();
  return p;
}

namespace {

json NodeToJson(const std::vector<TreeNode>& nodes, std::size_t i) {
  const auto& n = nodes[i];
  if (n.is_leaf()) return json{{"value", n.value}};
  return json{{"feature", n.feature},
              {"threshold", n.threshold},
              {"left", NodeToJson(nodes, static_cast<std::size_t>(n.left))},
              {"right", NodeToJson(nodes, static_cast<std::size_t>(n.right))}};
}

int NodeFromJson(const json& j, std::vector<TreeNode>& nodes, std::size_t n_features) {
  const int id = static_cast<int>(nodes.size());
  nodes.emplace_back();
  if (j.contains("value")) {
    nodes.back().value = j["value"].get<double>();
    return id;
  }
  const int feature = j.at("feature").get<int>();
  if (feature < 0 || static_cast<std::size_t>(feature) >= n_features) {
    Fail(ErrorKind::kData, "tree split feature out of range");
  }
  const double threshold = j.at("threshold").get<double>();
  const int l = NodeFromJson(j.at("left"), nodes, n_features);
  const int r = NodeFromJson(j.at("right"), nodes, n_features);
  auto& node = nodes[static_cast<std::size_t>(id)];
  node.feature = feature;
  node.threshold = threshold;
  node.left = l;
  node.right = r;
  return id;
}

}  // namespace

json ModelToJson(const SgbtModel& m) {
  json trees = json::array();
  for (const auto& t : m.trees()) trees.push_back(NodeToJson(t.nodes(), 0));
  return json{{"version", 1},
              {"params", ParamsToJson(m.params())},
              {"n_features", m.n_features()},
              {"base_score", m.base_score()},
              {"trees", std::move(trees)}};
}

SgbtModel ModelFromJson(const json& j) {
  try {
    if (j.at("version").get<int>() != 1) Fail(ErrorKind::kData, "unsupported sgbt model version");
    const auto params = ParamsFromJson(j.at("params"));
    const auto n_features = j.at("n_features").get<std::size_t>();
    std::vector<RegressionTree> trees;
    for (const auto& tj : j.at("trees")) {
      std::vector<TreeNode> nodes;
      NodeFromJson(tj, nodes, n_features);
      trees.emplace_back(std::move(nodes));
    }
    return SgbtModel(params, n_features, j.at("base_score").get<double>(), std::move(trees));
  } catch (const json::exception& e) {
    Fail(ErrorKind::kData, std::string("malformed sgbt model JSON: ") + e.what());
  }
}

std::string SgbtModel::to_json() const { return ModelToJson(*this).dump(); }

SgbtModel SgbtModel::FromJson(const std::string& text) {
  try {
    return ModelFromJson(json::parse(text));
  } catch (const json::exception& e) {
    Fail(ErrorKind::kData, std::string("malformed sgbt model JSON: ") + e.what());
  }
}

}  // namespace riskadvisor::sgbt
