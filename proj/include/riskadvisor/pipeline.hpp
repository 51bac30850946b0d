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

// End-to-end orchestration: experiment configs, scenario bundles, decision
// grids and the advisor hyper-parameter search. JSON crosses this boundary as
// text so the C API can pass it through unchanged.

#ifndef RISKADVISOR_PIPELINE_HPP_
#define RISKADVISOR_PIPELINE_HPP_

#include <string>
#include <vector>

#include "riskadvisor/advisor.hpp"
#include "riskadvisor/baselines.hpp"
#include "riskadvisor/blackbox.hpp"
#include "riskadvisor/dataset.hpp"
#include "riskadvisor/retrain.hpp"

namespace riskadvisor::pipeline {

struct BboxSpec {
  bbox::ModelKind kind = bbox::ModelKind::kLogistic;
  bbox::LogisticParams logistic;
  bbox::MlpParams mlp;

  /// Trains with `seed` replacing the seed stored in the params.
  bbox::BlackBoxModel Train(const data::Dataset& train, std::uint64_t seed) const;
};

struct DatasetSpec {
  /// circles, moons, gmm_shift or csv.
  std::string generator = "circles";
  std::size_t n = 2000;
  double noise_sd = 0.08;
  std::size_t n_train = 1000;
  std::size_t n_test = 1000;
  /// gmm_shift only: size of the labelled pool drawn like the test set.
  std::size_t n_pool = 0;
  data::GmmShiftParams gmm;
  std::string csv_path;
  /// Optional fixed test file; without it csv_path is split.
  std::string csv_test_path;
  std::string label_column = "label";
  std::string ood_column;
  double train_fraction = 0.7;
  bool stratified = true;
  bool standardize = true;
};

struct GridSearchSpace {
  std::vector<std::size_t> max_depth{3, 4, 5, 6};
  std::vector<double> sample_rate{0.25, 0.5, 0.75};
  std::vector<std::size_t> n_trees{100, 1000};
  std::size_t folds = 5;
};

struct RetrainSpec {
  bool enabled = false;
  std::vector<eval::Strategy> strategies{eval::Strategy::kEpistemicDesc, eval::Strategy::kConfidenceAsc,
                                         eval::Strategy::kTrustAsc, eval::Strategy::kRandom};
  double k_percent = 5.0;
  std::size_t rounds = 8;
  bool with_replacement = true;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  BboxSpec bbox;
  sgbt::SgbtParams advisor;
  std::size_t members = 10;
  advisor::RiskWeights weights;
  bool grid_search = false;
  GridSearchSpace grid;
  bool mcp = true;
  bool trust = true;
  baselines::TrustParams trust_params;
  bool eval_failure = true;
  bool eval_abstention = true;
  bool eval_ood = true;
  double ar_grid_step = 0.01;
  RetrainSpec retrain;
  std::uint64_t seed = 1;
  std::size_t repeats = 1;
  std::string output_dir = "run";

  /// Full document with every default spelled out.
  std::string ToJson() const;
  /// Missing keys keep their defaults; unknown keys and bad values are
  /// kConfig errors naming the field.
  static ExperimentConfig FromJson(const std::string& text);
};

/// Seeds used by one repeat. Repeat r runs with base seed `seed + r`.
struct RepeatSeeds {
  std::uint64_t seed = 0;
  std::uint64_t data = 0;
  std::uint64_t split = 0;
  std::uint64_t bbox = 0;
  std::uint64_t advisor = 0;
  std::uint64_t retrain = 0;
};

RepeatSeeds SeedsFor(std::uint64_t base_seed, std::size_t repeat);

struct PreparedData {
  data::Dataset train;
  data::Dataset test;
  std::optional<data::Dataset> pool;
};

/// Generates (or loads) and splits the data, then standardizes on train.
PreparedData PrepareData(const DatasetSpec& spec, const RepeatSeeds& seeds);

/// Everything the evaluators rank, aligned with the test rows.
struct ScoreSet {
  std::vector<bool> errors;
  std::optional<std::vector<bool>> is_ood;
  double bbox_accuracy = 0.0;
  advisor::UncertaintyReport report;
  std::optional<std::vector<double>> mcp;
  std::optional<std::vector<double>> trust;
};

/// `trust` may be null to skip the Trust Score.
ScoreSet ComputeScores(const data::Dataset& test, const bbox::BlackBoxModel& model,
                       const advisor::AdvisorModel& advisor, const baselines::TrustModel* trust);

/// JSON object {"auroc": {...}, "aupr": {...}} keyed by score name.
std::string FailureMetricsJson(const ScoreSet& s);
/// JSON object {"ood_auroc": {...}}; needs is_ood flags.
std::string OodMetricsJson(const ScoreSet& s);
/// JSON object {"prr": {...}, "curves": {...}}.
std::string AbstentionMetricsJson(const ScoreSet& s, double grid_step);

struct ScenarioResult {
  std::string metrics_json;
  std::string manifest_json;
  std::vector<std::string> artifacts;
};

/// Writes the experiment bundle under config.output_dir. On failure the
/// files written so far are removed before the error propagates.
ScenarioResult RunScenario(const ExperimentConfig& config);

std::string CurveJson(const eval::RetrainCurve& curve);

enum class GridKind { kBboxProba, kErrorProb, kAleatoric, kEpistemic, kRisk };
const char* ToString(GridKind k);
GridKind GridKindFromString(const std::string& s);

struct Bounds {
  double xmin = 0.0;
  double xmax = 1.0;
  double ymin = 0.0;
  double ymax = 1.0;
};

/// Bounding box of the rows, widened by 10% of the extent on every side.
Bounds DefaultBounds(const Matrix& points);

struct GridCell {
  double x = 0.0;
  double y = 0.0;
  double value = 0.0;
};

/// resolution x resolution lattice, y-major. bbox_proba needs `model` and
/// reports P(class 1); the other kinds need `advisor`.
std::vector<GridCell> EmitGrid(GridKind kind, const bbox::BlackBoxModel* model,
                               const advisor::AdvisorModel* advisor, const Bounds& bounds,
                               std::size_t resolution);
std::string GridToCsv(const std::vector<GridCell>& cells);
std::string GridToSvg(const std::vector<GridCell>& cells, std::size_t resolution,
                      const std::string& title);

struct GridSearchCell {
  sgbt::SgbtParams params;
  double mean_val_log_loss = 0.0;
};

struct GridSearchResult {
  sgbt::SgbtParams best;
  std::vector<GridSearchCell> cells;

  std::string ToJson() const;
};

/// k-fold cross-validation of a single SGBT over the grid; folds are
/// stratified on z. The cell with the lowest mean validation log-loss wins,
/// earlier cells on ties.
GridSearchResult GridSearchSgbt(const Matrix& features, const std::vector<bool>& z,
                                const sgbt::SgbtParams& base, const GridSearchSpace& space);

}  // namespace riskadvisor::pipeline

#endif  // RISKADVISOR_PIPELINE_HPP_
