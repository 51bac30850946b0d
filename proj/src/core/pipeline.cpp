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

#include "riskadvisor/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "json_internal.hpp"
#include "parallel.hpp"
#include "riskadvisor/csv.hpp"
#include "riskadvisor/metrics.hpp"

namespace riskadvisor::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

bbox::BlackBoxModel BboxSpec::Train(const data::Dataset& train, std::uint64_t seed) const {
  switch (kind) {
    case bbox::ModelKind::kLogistic: {
      auto p = logistic;
      p.seed = seed;
      return bbox::TrainLogistic(train, p);
    }
    case bbox::ModelKind::kMlp: {
      auto p = mlp;
      p.seed = seed;
      return bbox::TrainMlp(train, p);
    }
    case bbox::ModelKind::kExternal:
      break;
  }
  Fail(ErrorKind::kConfig, "bbox.kind must be logistic or mlp");
}

// ---------------------------------------------------------------- config

namespace {

// Strict reader for one JSON object: unknown keys and type mismatches become
// kConfig errors carrying the dotted field path.
class ObjReader {
 public:
  ObjReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) Fail(ErrorKind::kConfig, "config field '" + path_ + "' must be an object");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (!it->is_number_unsigned()) {
        Fail(ErrorKind::kConfig, "config field '" + Field(key) + "' must be a non-negative integer");
      }
    }
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      Fail(ErrorKind::kConfig, "config field '" + Field(key) + "' has the wrong type");
    }
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string Field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) {
        Fail(ErrorKind::kConfig, "unknown config field '" + Field(item.key()) + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json GmmToJson(const data::GmmShiftParams& g) {
  return json{{"mean_a0", g.mean_a0}, {"mean_a1", g.mean_a1}, {"mean_b", g.mean_b},
              {"sd", g.sd},           {"label_b", g.label_b}};
}

void ConfigError(const std::string& field, const std::string& why) {
  Fail(ErrorKind::kConfig, "config field '" + field + "' " + why);
}

void Validate(const ExperimentConfig& c) {
  const auto& d = c.dataset;
  static const std::set<std::string> kGenerators{"circles", "moons", "gmm_shift", "csv"};
  if (!kGenerators.count(d.generator)) {
    ConfigError("dataset.generator", "must be one of circles, moons, gmm_shift, csv");
  }
  if (d.generator == "circles" || d.generator == "moons") {
    if (d.n < 4) ConfigError("dataset.n", "must be >= 4");
  }
  if (d.generator == "gmm_shift") {
    if (d.n_train < 4) ConfigError("dataset.n_train", "must be >= 4");
    if (d.n_test < 4) ConfigError("dataset.n_test", "must be >= 4");
    if (d.n_pool != 0 && d.n_pool < 4) ConfigError("dataset.n_pool", "must be 0 or >= 4");
    if (!(d.gmm.sd > 0.0)) ConfigError("dataset.gmm.sd", "must be positive");
    if (d.gmm.label_b < -1 || d.gmm.label_b > 1) ConfigError("dataset.gmm.label_b", "must be -1, 0 or 1");
  } else if (d.n_pool != 0) {
    ConfigError("dataset.n_pool", "is only supported by the gmm_shift generator");
  }
  if (d.generator == "csv" && d.csv_path.empty()) ConfigError("dataset.csv_path", "is required for csv");
  if (!(d.noise_sd >= 0.0)) ConfigError("dataset.noise_sd", "must be >= 0");
  if (!(d.train_fraction > 0.0 && d.train_fraction < 1.0)) {
    ConfigError("dataset.train_fraction", "must lie in (0, 1)");
  }
  if (c.bbox.kind == bbox::ModelKind::kExternal) ConfigError("bbox.kind", "must be logistic or mlp");
  if (c.bbox.logistic.epochs == 0) ConfigError("bbox.logistic.epochs", "must be >= 1");
  if (!(c.bbox.logistic.lr > 0.0)) ConfigError("bbox.logistic.lr", "must be positive");
  if (!(c.bbox.logistic.l2 >= 0.0)) ConfigError("bbox.logistic.l2", "must be >= 0");
  if (c.bbox.mlp.hidden.empty()) ConfigError("bbox.mlp.hidden", "must list at least one layer");
  for (auto h : c.bbox.mlp.hidden) {
    if (h == 0) ConfigError("bbox.mlp.hidden", "layer widths must be >= 1");
  }
  if (c.bbox.mlp.epochs == 0) ConfigError("bbox.mlp.epochs", "must be >= 1");
  if (c.bbox.mlp.batch_size == 0) ConfigError("bbox.mlp.batch_size", "must be >= 1");
  if (!(c.bbox.mlp.lr > 0.0)) ConfigError("bbox.mlp.lr", "must be positive");
  try {
    c.advisor.validate();
  } catch (const Error& e) {
    Fail(ErrorKind::kConfig, std::string("advisor: ") + e.what());
  }
  if (c.members == 0) ConfigError("advisor.members", "must be >= 1");
  for (double w : {c.weights.model, c.weights.epistemic, c.weights.aleatoric}) {
    if (!std::isfinite(w)) ConfigError("advisor.weights", "must be finite");
  }
  if (c.grid.max_depth.empty() || c.grid.sample_rate.empty() || c.grid.n_trees.empty()) {
    ConfigError("advisor.grid", "lists must be non-empty");
  }
  if (c.grid.folds < 2) ConfigError("advisor.grid.folds", "must be >= 2");
  if (!(c.trust_params.alpha >= 0.0 && c.trust_params.alpha < 1.0)) {
    ConfigError("baselines.trust_alpha", "must lie in [0, 1)");
  }
  if (c.trust_params.k_density == 0) ConfigError("baselines.trust_k", "must be >= 1");
  const double steps = 1.0 / c.ar_grid_step;
  if (!(c.ar_grid_step > 0.0 && c.ar_grid_step <= 1.0) || std::abs(std::round(steps) - steps) > 1e-6) {
    ConfigError("eval.ar_grid_step", "must divide 1 evenly");
  }
  if (c.retrain.enabled) {
    if (d.generator != "gmm_shift" || d.n_pool == 0) {
      ConfigError("eval.sample_retrain", "needs the gmm_shift generator with dataset.n_pool > 0");
    }
    if (!(c.retrain.k_percent > 0.0 && c.retrain.k_percent <= 100.0)) {
      ConfigError("eval.sample_retrain.k_percent", "must lie in (0, 100]");
    }
    if (c.retrain.strategies.empty()) ConfigError("eval.sample_retrain.strategies", "must be non-empty");
  }
  if (c.repeats == 0) ConfigError("repeats", "must be >= 1");
  if (c.output_dir.empty()) ConfigError("output_dir", "must be non-empty");
}

}  // namespace

std::string ExperimentConfig::ToJson() const {
  json strategies = json::array();
  for (auto s : retrain.strategies) strategies.push_back(eval::ToString(s));
  json j{
      {"dataset",
       {{"generator", dataset.generator},
        {"n", dataset.n},
        {"noise_sd", dataset.noise_sd},
        {"n_train", dataset.n_train},
        {"n_test", dataset.n_test},
        {"n_pool", dataset.n_pool},
        {"gmm", GmmToJson(dataset.gmm)},
        {"csv_path", dataset.csv_path},
        {"csv_test_path", dataset.csv_test_path},
        {"label_column", dataset.label_column},
        {"ood_column", dataset.ood_column},
        {"train_fraction", dataset.train_fraction},
        {"stratified", dataset.stratified},
        {"standardize", dataset.standardize}}},
      {"bbox",
       {{"kind", bbox::ToString(bbox.kind)},
        {"logistic", {{"l2", bbox.logistic.l2}, {"epochs", bbox.logistic.epochs}, {"lr", bbox.logistic.lr}}},
        {"mlp",
         {{"hidden", bbox.mlp.hidden},
          {"epochs", bbox.mlp.epochs},
          {"lr", bbox.mlp.lr},
          {"batch_size", bbox.mlp.batch_size}}}}},
      {"advisor",
       {{"n_trees", advisor.n_trees},
        {"max_depth", advisor.max_depth},
        {"learning_rate", advisor.learning_rate},
        {"sample_rate", advisor.sample_rate},
        {"min_samples_leaf", advisor.min_samples_leaf},
        {"members", members},
        {"weights", {{"model", weights.model}, {"epistemic", weights.epistemic}, {"aleatoric", weights.aleatoric}}},
        {"grid_search", grid_search},
        {"grid",
         {{"max_depth", grid.max_depth},
          {"sample_rate", grid.sample_rate},
          {"n_trees", grid.n_trees},
          {"folds", grid.folds}}}}},
      {"baselines",
       {{"mcp", mcp}, {"trust", trust}, {"trust_alpha", trust_params.alpha}, {"trust_k", trust_params.k_density}}},
      {"eval",
       {{"failure", eval_failure},
        {"abstention", eval_abstention},
        {"ood", eval_ood},
        {"ar_grid_step", ar_grid_step},
        {"sample_retrain",
         {{"enabled", retrain.enabled},
          {"strategies", strategies},
          {"k_percent", retrain.k_percent},
          {"rounds", retrain.rounds},
          {"with_replacement", retrain.with_replacement}}}}},
      {"seed", seed},
      {"repeats", repeats},
      {"output_dir", output_dir}};
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::FromJson(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    Fail(ErrorKind::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
  // A manifest carries its config verbatim.
  if (doc.is_object() && doc.contains("config") && doc.contains("tool_version")) doc = doc["config"];

  ExperimentConfig c;
  ObjReader top(doc, "");
  if (const auto* dj = top.child("dataset")) {
    ObjReader r(*dj, "dataset");
    auto& d = c.dataset;
    r.get("generator", d.generator);
    r.get("n", d.n);
    r.get("noise_sd", d.noise_sd);
    r.get("n_train", d.n_train);
    r.get("n_test", d.n_test);
    r.get("n_pool", d.n_pool);
    if (const auto* gj = r.child("gmm")) {
      ObjReader g(*gj, "dataset.gmm");
      g.get("mean_a0", d.gmm.mean_a0);
      g.get("mean_a1", d.gmm.mean_a1);
      g.get("mean_b", d.gmm.mean_b);
      g.get("sd", d.gmm.sd);
      g.get("label_b", d.gmm.label_b);
      g.finish();
    }
    r.get("csv_path", d.csv_path);
    r.get("csv_test_path", d.csv_test_path);
    r.get("label_column", d.label_column);
    r.get("ood_column", d.ood_column);
    r.get("train_fraction", d.train_fraction);
    r.get("stratified", d.stratified);
    r.get("standardize", d.standardize);
    r.finish();
  }
  if (const auto* bj = top.child("bbox")) {
    ObjReader r(*bj, "bbox");
    std::string kind = bbox::ToString(c.bbox.kind);
    r.get("kind", kind);
    if (kind == "logistic") {
      c.bbox.kind = bbox::ModelKind::kLogistic;
    } else if (kind == "mlp") {
      c.bbox.kind = bbox::ModelKind::kMlp;
    } else {
      ConfigError("bbox.kind", "must be logistic or mlp");
    }
    if (const auto* lj = r.child("logistic")) {
      ObjReader l(*lj, "bbox.logistic");
      l.get("l2", c.bbox.logistic.l2);
      l.get("epochs", c.bbox.logistic.epochs);
      l.get("lr", c.bbox.logistic.lr);
      l.finish();
    }
    if (const auto* mj = r.child("mlp")) {
      ObjReader m(*mj, "bbox.mlp");
      m.get("hidden", c.bbox.mlp.hidden);
      m.get("epochs", c.bbox.mlp.epochs);
      m.get("lr", c.bbox.mlp.lr);
      m.get("batch_size", c.bbox.mlp.batch_size);
      m.finish();
    }
    r.finish();
  }
  if (const auto* aj = top.child("advisor")) {
    ObjReader r(*aj, "advisor");
    r.get("n_trees", c.advisor.n_trees);
    r.get("max_depth", c.advisor.max_depth);
    r.get("learning_rate", c.advisor.learning_rate);
    r.get("sample_rate", c.advisor.sample_rate);
    r.get("min_samples_leaf", c.advisor.min_samples_leaf);
    r.get("members", c.members);
    if (const auto* wj = r.child("weights")) {
      ObjReader w(*wj, "advisor.weights");
      w.get("model", c.weights.model);
      w.get("epistemic", c.weights.epistemic);
      w.get("aleatoric", c.weights.aleatoric);
      w.finish();
    }
    r.get("grid_search", c.grid_search);
    if (const auto* gj = r.child("grid")) {
      ObjReader g(*gj, "advisor.grid");
      g.get("max_depth", c.grid.max_depth);
      g.get("sample_rate", c.grid.sample_rate);
      g.get("n_trees", c.grid.n_trees);
      g.get("folds", c.grid.folds);
      g.finish();
    }
    r.finish();
  }
  if (const auto* bj = top.child("baselines")) {
    ObjReader r(*bj, "baselines");
    r.get("mcp", c.mcp);
    r.get("trust", c.trust);
    r.get("trust_alpha", c.trust_params.alpha);
    r.get("trust_k", c.trust_params.k_density);
    r.finish();
  }
  if (const auto* ej = top.child("eval")) {
    ObjReader r(*ej, "eval");
    r.get("failure", c.eval_failure);
    r.get("abstention", c.eval_abstention);
    r.get("ood", c.eval_ood);
    r.get("ar_grid_step", c.ar_grid_step);
    if (const auto* sj = r.child("sample_retrain")) {
      ObjReader s(*sj, "eval.sample_retrain");
      s.get("enabled", c.retrain.enabled);
      std::vector<std::string> names;
      s.get("strategies", names);
      if (sj->contains("strategies")) {
        c.retrain.strategies.clear();
        for (const auto& n : names) {
          try {
            c.retrain.strategies.push_back(eval::StrategyFromString(n));
          } catch (const Error&) {
            ConfigError("eval.sample_retrain.strategies", "has unknown strategy '" + n + "'");
          }
        }
      }
      s.get("k_percent", c.retrain.k_percent);
      s.get("rounds", c.retrain.rounds);
      s.get("with_replacement", c.retrain.with_replacement);
      s.finish();
    }
    r.finish();
  }
  top.get("seed", c.seed);
  top.get("repeats", c.repeats);
  top.get("output_dir", c.output_dir);
  top.finish();
  Validate(c);
  return c;
}

// ---------------------------------------------------------------- data

RepeatSeeds SeedsFor(std::uint64_t base_seed, std::size_t repeat) {
  RepeatSeeds s;
  s.seed = base_seed + repeat;
  s.data = DeriveSeed(s.seed, 1);
  s.split = DeriveSeed(s.seed, 2);
  s.bbox = DeriveSeed(s.seed, 3);
  s.advisor = DeriveSeed(s.seed, 4);
  s.retrain = DeriveSeed(s.seed, 5);
  return s;
}

PreparedData PrepareData(const DatasetSpec& spec, const RepeatSeeds& seeds) {
  PreparedData out;
  const data::SplitSpec split{spec.train_fraction, spec.stratified, seeds.split};
  if (spec.generator == "circles" || spec.generator == "moons") {
    const auto full = spec.generator == "circles" ? data::GenCircles(spec.n, spec.noise_sd, seeds.data)
                                                  : data::GenMoons(spec.n, spec.noise_sd, seeds.data);
    auto tt = data::Split(full, split);
    out.train = std::move(tt.train);
    out.test = std::move(tt.test);
  } else if (spec.generator == "gmm_shift") {
    auto tt = data::GenGmmShift(spec.n_train, spec.n_test, seeds.data, spec.gmm);
    out.train = std::move(tt.train);
    out.test = std::move(tt.test);
    if (spec.n_pool > 0) {
      // The pool is a second test-like draw so it contains shifted points.
      out.pool = data::GenGmmShift(4, spec.n_pool, DeriveSeed(seeds.data, 6), spec.gmm).test;
    }
  } else if (spec.generator == "csv") {
    const std::optional<std::string> ood =
        spec.ood_column.empty() ? std::nullopt : std::optional<std::string>(spec.ood_column);
    auto full = data::LoadCsv(spec.csv_path, spec.label_column, ood);
    if (spec.csv_test_path.empty()) {
      auto tt = data::Split(full, split);
      out.train = std::move(tt.train);
      out.test = std::move(tt.test);
    } else {
      out.train = std::move(full);
      out.test = data::LoadCsv(spec.csv_test_path, spec.label_column, ood);
      if (out.test.feature_names != out.train.feature_names) {
        Fail(ErrorKind::kData, "csv_test_path encodes different feature columns than csv_path");
      }
    }
  } else {
    ConfigError("dataset.generator", "must be one of circles, moons, gmm_shift, csv");
  }
  if (spec.standardize) {
    std::vector<data::Dataset> others{std::move(out.test)};
    if (out.pool) others.push_back(std::move(*out.pool));
    data::Standardize(out.train, others);
    out.test = std::move(others[0]);
    if (out.pool) out.pool = std::move(others[1]);
  }
  return out;
}

// ---------------------------------------------------------------- scores

ScoreSet ComputeScores(const data::Dataset& test, const bbox::BlackBoxModel& model,
                       const advisor::AdvisorModel& advisor, const baselines::TrustModel* trust) {
  ScoreSet s;
  const auto pred = model.predict(test);
  s.errors = bbox::ComputeErrorIndicator(test.labels, pred.labels).z;
  s.bbox_accuracy = bbox::Accuracy(test.labels, pred.labels);
  s.is_ood = test.is_ood;
  s.report = advisor.decompose(test.features);
  if (pred.probabilities) s.mcp = baselines::McpConfidence(*pred.probabilities);
  if (trust) s.trust = trust->score(test.features, pred.labels);
  return s;
}

namespace {

struct NamedScore {
  std::string name;
  const std::vector<double>* values;
  eval::Orientation orientation;
};

std::vector<NamedScore> ScoresOf(const ScoreSet& s) {
  using eval::Orientation;
  std::vector<NamedScore> out{{"error_prob", &s.report.error_prob, Orientation::kHigherIsPositive},
                              {"total", &s.report.total, Orientation::kHigherIsPositive},
                              {"aleatoric", &s.report.aleatoric, Orientation::kHigherIsPositive},
                              {"epistemic", &s.report.epistemic, Orientation::kHigherIsPositive},
                              {"risk_score", &s.report.risk_score, Orientation::kHigherIsPositive}};
  if (s.mcp) out.push_back({"mcp_confidence", &*s.mcp, Orientation::kLowerIsPositive});
  if (s.trust) out.push_back({"trust_score", &*s.trust, Orientation::kLowerIsPositive});
  return out;
}

bool BothClasses(const std::vector<bool>& flags) {
  const auto pos = std::count(flags.begin(), flags.end(), true);
  return pos > 0 && static_cast<std::size_t>(pos) < flags.size();
}

json FailureMetrics(const ScoreSet& s) {
  json auroc = json::object();
  json aupr = json::object();
  const bool ok = BothClasses(s.errors);
  for (const auto& ns : ScoresOf(s)) {
    if (!ok) {
      auroc[ns.name] = nullptr;
      aupr[ns.name] = nullptr;
      continue;
    }
    const eval::RankedScores r{*ns.values, s.errors, ns.orientation};
    auroc[ns.name] = eval::Auroc(r);
    aupr[ns.name] = eval::AveragePrecision(r);
  }
  return json{{"auroc", auroc}, {"aupr", aupr}};
}

json OodMetrics(const ScoreSet& s) {
  if (!s.is_ood || !BothClasses(*s.is_ood)) {
    Fail(ErrorKind::kData, "ood evaluation needs both in- and out-of-distribution test points");
  }
  json out = json::object();
  // Uncertainties flag OOD when high; confidence-style scores when low.
  for (const auto& ns : ScoresOf(s)) {
    out[ns.name] = eval::OodAuroc(*ns.values, *s.is_ood, ns.orientation);
  }
  return json{{"ood_auroc", out}};
}

json AbstentionMetrics(const ScoreSet& s, double grid_step) {
  json prr = json::object();
  json curves = json::object();
  for (const auto& ns : ScoresOf(s)) {
    const auto c = eval::AccuracyRejectionCurve(*ns.values, s.errors, grid_step, ns.orientation);
    prr[ns.name] = c.prr;
    curves[ns.name] = c.accuracies;
    if (!curves.contains("rejection_fractions")) curves["rejection_fractions"] = c.rejection_fractions;
  }
  return json{{"prr", prr}, {"curves", curves}};
}

}  // namespace

std::string FailureMetricsJson(const ScoreSet& s) { return FailureMetrics(s).dump(2); }
std::string OodMetricsJson(const ScoreSet& s) { return OodMetrics(s).dump(2); }
std::string AbstentionMetricsJson(const ScoreSet& s, double grid_step) {
  return AbstentionMetrics(s, grid_step).dump(2);
}

std::string CurveJson(const eval::RetrainCurve& curve) {
  json pts = json::array();
  for (const auto& p : curve.points) {
    pts.push_back({{"pool_percent", p.pool_percent}, {"ood_accuracy", p.ood_accuracy}});
  }
  return json{{"strategy", eval::ToString(curve.strategy)}, {"points", pts}}.dump(2);
}

// ---------------------------------------------------------------- scenario

namespace {

// Tracks files written by a run so a failure can remove them.
class ArtifactLog {
 public:
  explicit ArtifactLog(fs::path root) : root_(std::move(root)) {}

  void write(const fs::path& path, const std::string& contents) {
    WriteFileAtomic(path.string(), contents);
    written_.push_back(path);
  }
  void save_csv(const data::Dataset& d, const fs::path& path) {
    data::SaveCsv(d, path.string());
    written_.push_back(path);
  }
  void merge(const ArtifactLog& other) {
    written_.insert(written_.end(), other.written_.begin(), other.written_.end());
  }
  std::vector<std::string> relative_paths() const {
    std::vector<std::string> out;
    for (const auto& p : written_) out.push_back(fs::relative(p, root_).generic_string());
    std::sort(out.begin(), out.end());
    return out;
  }
  void rollback() const {
    std::error_code ec;
    for (const auto& p : written_) fs::remove(p, ec);
  }

 private:
  fs::path root_;
  std::vector<fs::path> written_;
};

json SeedsJson(std::size_t repeat, const RepeatSeeds& s) {
  return json{{"repeat", repeat}, {"seed", s.seed},       {"data", s.data},
              {"split", s.split}, {"bbox", s.bbox},       {"advisor", s.advisor},
              {"retrain", s.retrain}};
}

json RunRepeat(const ExperimentConfig& cfg, const RepeatSeeds& seeds, const fs::path& dir,
               ArtifactLog& log) {
  auto prepared = PrepareData(cfg.dataset, seeds);
  const auto& train = prepared.train;
  const auto& test = prepared.test;
  log.save_csv(train, dir / "train.csv");
  log.save_csv(test, dir / "test.csv");
  if (prepared.pool) log.save_csv(*prepared.pool, dir / "pool.csv");

  const auto model = cfg.bbox.Train(train, seeds.bbox);
  log.write(dir / "bbox.json", model.to_json());

  const auto z = bbox::ComputeErrorIndicator(train.labels, model.predict(train).labels).z;
  auto params = cfg.advisor;
  params.seed = seeds.advisor;
  json metrics = json::object();
  if (cfg.grid_search) {
    const auto gs = GridSearchSgbt(train.features, z, params, cfg.grid);
    params = gs.best;
    log.write(dir / "grid_search.json", gs.ToJson());
    metrics["grid_search_best"] = json::parse(gs.ToJson())["best"];
  }
  const auto adv = advisor::FitAdvisor(train.features, z, params, cfg.members, cfg.weights);
  log.write(dir / "advisor.json", adv.to_json());

  std::optional<baselines::TrustModel> trust;
  if (cfg.trust) trust = baselines::TrustModel::Fit(train, cfg.trust_params);
  auto scores = ComputeScores(test, model, adv, trust ? &*trust : nullptr);
  if (!cfg.mcp) scores.mcp.reset();
  log.write(dir / "report.csv", advisor::ReportToCsv(scores.report, true));

  const auto n_err = std::count(scores.errors.begin(), scores.errors.end(), true);
  metrics["n_train"] = train.size();
  metrics["n_test"] = test.size();
  metrics["bbox_test_accuracy"] = scores.bbox_accuracy;
  metrics["test_error_rate"] = static_cast<double>(n_err) / static_cast<double>(test.size());
  if (cfg.eval_failure) metrics["failure"] = FailureMetrics(scores);
  if (cfg.eval_abstention) metrics["abstention"] = AbstentionMetrics(scores, cfg.ar_grid_step);
  if (cfg.eval_ood && scores.is_ood && BothClasses(*scores.is_ood)) metrics["ood"] = OodMetrics(scores);

  if (cfg.retrain.enabled) {
    const eval::BlackBoxTrainer trainer = [&](const data::Dataset& d) {
      return cfg.bbox.Train(d, seeds.bbox);
    };
    json curves = json::object();
    for (auto strategy : cfg.retrain.strategies) {
      eval::SampleRetrainConfig rc;
      rc.strategy = strategy;
      rc.k_percent = cfg.retrain.k_percent;
      rc.rounds = cfg.retrain.rounds;
      rc.with_replacement = cfg.retrain.with_replacement;
      rc.advisor_params = params;
      rc.advisor_members = cfg.members;
      rc.trust = cfg.trust_params;
      rc.seed = seeds.retrain;
      const auto curve = eval::SampleRetrain(train, *prepared.pool, test, trainer, rc);
      log.write(dir / (std::string("retrain_") + eval::ToString(strategy) + ".csv"),
                eval::CurveToCsv(curve));
      curves[eval::ToString(strategy)] = json::parse(CurveJson(curve))["points"];
    }
    metrics["sample_retrain"] = curves;
  }
  return metrics;
}

// Element-wise mean/sd over repeats. Numbers become {mean, sd, values};
// nulls are skipped by mean and sd.
json Aggregate(const std::vector<const json*>& items) {
  const json& first = *items.front();
  if (first.is_object()) {
    json out = json::object();
    for (const auto& item : first.items()) {
      std::vector<const json*> sub;
      static const json kNull;
      for (const auto* it : items) sub.push_back(it->contains(item.key()) ? &(*it)[item.key()] : &kNull);
      out[item.key()] = Aggregate(sub);
    }
    return out;
  }
  if (first.is_array()) {
    json out = json::array();
    for (std::size_t i = 0; i < first.size(); ++i) {
      std::vector<const json*> sub;
      static const json kNull;
      for (const auto* it : items) sub.push_back(it->is_array() && i < it->size() ? &(*it)[i] : &kNull);
      out.push_back(Aggregate(sub));
    }
    return out;
  }
  const bool numeric = std::any_of(items.begin(), items.end(), [](const json* j) { return j->is_number(); });
  if (numeric) {
    std::vector<double> vals;
    json values = json::array();
    for (const auto* it : items) {
      values.push_back(*it);
      if (it->is_number()) vals.push_back(it->get<double>());
    }
    const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    const double sd = vals.size() > 1 ? std::sqrt(ss / static_cast<double>(vals.size() - 1)) : 0.0;
    return json{{"mean", mean}, {"sd", sd}, {"values", values}};
  }
  return first;
}

}  // namespace

ScenarioResult RunScenario(const ExperimentConfig& config) {
  Validate(config);
  const fs::path root(config.output_dir);
  std::error_code ec;
  const bool root_existed = fs::exists(root, ec);
  fs::create_directories(root, ec);
  if (ec) Fail(ErrorKind::kIo, "cannot create output directory '" + root.string() + "'");

  const std::size_t repeats = config.repeats;
  std::vector<ArtifactLog> logs;
  std::vector<fs::path> dirs;
  for (std::size_t r = 0; r < repeats; ++r) {
    dirs.push_back(repeats == 1 ? root : root / ("repeat_" + std::to_string(r)));
    logs.emplace_back(root);
  }
  ArtifactLog top(root);
  auto rollback = [&] {
    for (const auto& l : logs) l.rollback();
    top.rollback();
    std::error_code rec;
    for (const auto& d : dirs) {
      if (d != root && fs::is_empty(d, rec)) fs::remove(d, rec);
    }
    if (!root_existed && fs::is_empty(root, rec)) fs::remove(root, rec);
  };

  try {
    std::vector<json> per_repeat(repeats);
    std::vector<RepeatSeeds> seeds(repeats);
    for (std::size_t r = 0; r < repeats; ++r) seeds[r] = SeedsFor(config.seed, r);
    ParallelFor(repeats, [&](std::size_t r) { per_repeat[r] = RunRepeat(config, seeds[r], dirs[r], logs[r]); });

    std::vector<const json*> items;
    json seed_list = json::array();
    for (std::size_t r = 0; r < repeats; ++r) {
      items.push_back(&per_repeat[r]);
      seed_list.push_back(SeedsJson(r, seeds[r]));
      top.merge(logs[r]);
    }
    json metrics{{"repeats", repeats}, {"summary", Aggregate(items)}, {"per_repeat", per_repeat}};
    ScenarioResult result;
    result.metrics_json = metrics.dump(2);
    ArtifactLog own(root);
    own.write(root / "metrics.json", result.metrics_json);
    top.merge(own);
    result.artifacts = top.relative_paths();
    json manifest{{"config", json::parse(config.ToJson())},
                  {"seed_list", seed_list},
                  {"artifact_paths", result.artifacts},
                  {"tool_version", kVersion}};
    result.manifest_json = manifest.dump(2);
    top.write(root / "manifest.json", result.manifest_json);
    return result;
  } catch (...) {
    rollback();
    throw;
  }
}

// ---------------------------------------------------------------- grids

const char* ToString(GridKind k) {
  switch (k) {
    case GridKind::kBboxProba:
      return "bbox_proba";
    case GridKind::kErrorProb:
      return "error_prob";
    case GridKind::kAleatoric:
      return "aleatoric";
    case GridKind::kEpistemic:
      return "epistemic";
    case GridKind::kRisk:
      return "risk";
  }
  return "unknown";
}

GridKind GridKindFromString(const std::string& s) {
  std::string key = s;
  std::replace(key.begin(), key.end(), '-', '_');
  for (auto k : {GridKind::kBboxProba, GridKind::kErrorProb, GridKind::kAleatoric, GridKind::kEpistemic,
                 GridKind::kRisk}) {
    if (key == ToString(k)) return k;
  }
  Fail(ErrorKind::kConfig, "unknown grid kind '" + s + "'");
}

Bounds DefaultBounds(const Matrix& points) {
  if (points.cols() != 2) Fail(ErrorKind::kData, "grid bounds need 2-D data");
  if (points.rows() == 0) Fail(ErrorKind::kData, "grid bounds need at least one point");
  Bounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (std::size_t r = 0; r < points.rows(); ++r) {
    b.xmin = std::min(b.xmin, points(r, 0));
    b.xmax = std::max(b.xmax, points(r, 0));
    b.ymin = std::min(b.ymin, points(r, 1));
    b.ymax = std::max(b.ymax, points(r, 1));
  }
  const double px = 0.1 * std::max(b.xmax - b.xmin, 1e-12);
  const double py = 0.1 * std::max(b.ymax - b.ymin, 1e-12);
  return {b.xmin - px, b.xmax + px, b.ymin - py, b.ymax + py};
}

std::vector<GridCell> EmitGrid(GridKind kind, const bbox::BlackBoxModel* model,
                               const advisor::AdvisorModel* advisor, const Bounds& bounds,
                               std::size_t resolution) {
  if (resolution == 0) Fail(ErrorKind::kConfig, "grid resolution must be >= 1");
  if (!(bounds.xmax >= bounds.xmin && bounds.ymax >= bounds.ymin)) {
    Fail(ErrorKind::kConfig, "grid bounds must satisfy xmin <= xmax and ymin <= ymax");
  }
  auto coord = [&](double lo, double hi, std::size_t i) {
    if (resolution == 1) return 0.5 * (lo + hi);
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(resolution - 1);
  };
  Matrix lattice(resolution * resolution, 2);
  for (std::size_t j = 0; j < resolution; ++j) {
    for (std::size_t i = 0; i < resolution; ++i) {
      lattice(j * resolution + i, 0) = coord(bounds.xmin, bounds.xmax, i);
      lattice(j * resolution + i, 1) = coord(bounds.ymin, bounds.ymax, j);
    }
  }
  std::vector<double> values;
  if (kind == GridKind::kBboxProba) {
    if (!model) Fail(ErrorKind::kConfig, "bbox_proba grid needs a black-box model");
    if (model->kind() == bbox::ModelKind::kExternal) {
      Fail(ErrorKind::kData, "bbox_proba grid needs a model that can be evaluated off the data");
    }
    if (model->input_width() != 2) Fail(ErrorKind::kData, "grid needs a model trained on 2-D data");
    const auto pred = model->predict(lattice);
    values.resize(lattice.rows());
    for (std::size_t r = 0; r < lattice.rows(); ++r) {
      auto row = pred.probabilities->row(r);
      values[r] = model->class_count() == 2 ? row[1] : *std::max_element(row.begin(), row.end());
    }
  } else {
    if (!advisor) Fail(ErrorKind::kConfig, std::string(ToString(kind)) + " grid needs an advisor model");
    if (advisor->n_features() != 2) Fail(ErrorKind::kData, "grid needs an advisor trained on 2-D data");
    auto rep = advisor->decompose(lattice);
    switch (kind) {
      case GridKind::kErrorProb:
        values = std::move(rep.error_prob);
        break;
      case GridKind::kAleatoric:
        values = std::move(rep.aleatoric);
        break;
      case GridKind::kEpistemic:
        values = std::move(rep.epistemic);
        break;
      default:
        values = std::move(rep.risk_score);
        break;
    }
  }
  std::vector<GridCell> cells(lattice.rows());
  for (std::size_t r = 0; r < lattice.rows(); ++r) cells[r] = {lattice(r, 0), lattice(r, 1), values[r]};
  return cells;
}

std::string GridToCsv(const std::vector<GridCell>& cells) {
  std::ostringstream out;
  WriteCsvRow(out, {"x", "y", "value"});
  for (const auto& c : cells) WriteCsvRow(out, {FormatDouble(c.x), FormatDouble(c.y), FormatDouble(c.value)});
  return out.str();
}

namespace {

// Linear map from a pale yellow to a deep blue.
std::string ColorFor(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(255.0 + t * (8.0 - 255.0)));
  const int g = static_cast<int>(std::lround(255.0 + t * (48.0 - 255.0)));
  const int b = static_cast<int>(std::lround(204.0 + t * (107.0 - 204.0)));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

std::string GridToSvg(const std::vector<GridCell>& cells, std::size_t resolution, const std::string& title) {
  if (cells.size() != resolution * resolution) Fail(ErrorKind::kData, "grid cell count does not match resolution");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& c : cells) {
    lo = std::min(lo, c.value);
    hi = std::max(hi, c.value);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  const double cell = std::max(1.0, 400.0 / static_cast<double>(resolution));
  const double side = cell * static_cast<double>(resolution);
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << side + 90 << "\" height=\"" << side + 40
      << "\">\n";
  out << "<text x=\"4\" y=\"16\" font-size=\"14\">" << title << "</text>\n";
  out << "<g transform=\"translate(0,24)\" shape-rendering=\"crispEdges\">\n";
  for (std::size_t j = 0; j < resolution; ++j) {
    for (std::size_t i = 0; i < resolution; ++i) {
      const auto& c = cells[j * resolution + i];
      // Row j = 0 is ymin, drawn at the bottom.
      out << "<rect x=\"" << cell * static_cast<double>(i) << "\" y=\""
          << cell * static_cast<double>(resolution - 1 - j) << "\" width=\"" << cell << "\" height=\"" << cell
          << "\" fill=\"" << ColorFor((c.value - lo) / span) << "\"/>\n";
    }
  }
  const int stops = 20;
  const double bar_h = side / stops;
  for (int s = 0; s < stops; ++s) {
    out << "<rect x=\"" << side + 10 << "\" y=\"" << bar_h * s << "\" width=\"16\" height=\"" << bar_h
        << "\" fill=\"" << ColorFor(1.0 - (s + 0.5) / stops) << "\"/>\n";
  }
  out << "<text x=\"" << side + 30 << "\" y=\"10\" font-size=\"11\">" << FormatDouble(hi) << "</text>\n";
  out << "<text x=\"" << side + 30 << "\" y=\"" << side << "\" font-size=\"11\">" << FormatDouble(lo)
      << "</text>\n";
  out << "</g>\n</svg>\n";
  return out.str();
}

// ---------------------------------------------------------------- search

std::string GridSearchResult::ToJson() const {
  json cj = json::array();
  for (const auto& c : cells) {
    cj.push_back({{"params", sgbt::ParamsToJson(c.params)}, {"mean_val_log_loss", c.mean_val_log_loss}});
  }
  return json{{"best", sgbt::ParamsToJson(best)}, {"cells", cj}}.dump(2);
}

GridSearchResult GridSearchSgbt(const Matrix& features, const std::vector<bool>& z,
                                const sgbt::SgbtParams& base, const GridSearchSpace& space) {
  const std::size_t n = features.rows();
  if (z.size() != n) Fail(ErrorKind::kData, "grid search: label count does not match rows");
  if (space.folds < 2) Fail(ErrorKind::kConfig, "grid search needs >= 2 folds");
  if (n < space.folds) Fail(ErrorKind::kData, "grid search: fewer rows than folds");
  if (space.max_depth.empty() || space.sample_rate.empty() || space.n_trees.empty()) {
    Fail(ErrorKind::kConfig, "grid search lists must be non-empty");
  }

  // Stratified fold assignment.
  std::vector<std::size_t> fold(n);
  Rng rng(DeriveSeed(base.seed, 0xf01d));
  for (bool cls : {false, true}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i) {
      if (z[i] == cls) idx.push_back(i);
    }
    rng.shuffle(idx);
    for (std::size_t k = 0; k < idx.size(); ++k) fold[idx[k]] = k % space.folds;
  }
  struct FoldData {
    Matrix train_x, val_x;
    std::vector<bool> train_z, val_z;
  };
  std::vector<FoldData> folds(space.folds);
  for (std::size_t f = 0; f < space.folds; ++f) {
    std::vector<std::size_t> tr, va;
    for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? va : tr).push_back(i);
    folds[f].train_x = features.select_rows(tr);
    folds[f].val_x = features.select_rows(va);
    for (auto i : tr) folds[f].train_z.push_back(z[i]);
    for (auto i : va) folds[f].val_z.push_back(z[i]);
  }

  // A fit with T trees is a prefix of the fit with more trees under the same
  // seed, so each (depth, rate) pair is fitted once at the largest T.
  const std::size_t max_trees = *std::max_element(space.n_trees.begin(), space.n_trees.end());
  struct Pair {
    std::size_t depth;
    double rate;
  };
  std::vector<Pair> pairs;
  for (auto d : space.max_depth) {
    for (auto r : space.sample_rate) pairs.push_back({d, r});
  }
  // per_fold[pair][fold][tree-count index]
  std::vector<std::vector<std::vector<double>>> per_fold(
      pairs.size(), std::vector<std::vector<double>>(space.folds, std::vector<double>(space.n_trees.size())));
  ParallelFor(pairs.size() * space.folds, [&](std::size_t job) {
    const auto pi = job / space.folds;
    const auto f = job % space.folds;
    auto p = base;
    p.max_depth = pairs[pi].depth;
    p.sample_rate = pairs[pi].rate;
    p.n_trees = max_trees;
    const auto& fd = folds[f];
    const auto model = sgbt::FitSgbt(fd.train_x, fd.train_z, p);
    // Running raw scores, read off at each requested tree count.
    std::vector<double> s(fd.val_x.rows(), model.base_score());
    std::vector<std::size_t> order(space.n_trees.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return space.n_trees[a] < space.n_trees[b]; });
    std::size_t done = 0;
    for (auto oi : order) {
      const std::size_t target = space.n_trees[oi];
      for (; done < target; ++done) {
        const auto& tree = model.trees()[done];
        for (std::size_t r = 0; r < s.size(); ++r) s[r] += p.learning_rate * tree.predict(fd.val_x.row(r));
      }
      std::vector<double> prob(s.size());
      for (std::size_t r = 0; r < s.size(); ++r) prob[r] = sgbt::ClampProbability(sgbt::Sigmoid(s[r]));
      per_fold[pi][f][oi] = sgbt::LogLoss(prob, fd.val_z);
    }
  });

  GridSearchResult result;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
    for (std::size_t ti = 0; ti < space.n_trees.size(); ++ti) {
      double sum = 0.0;
      for (std::size_t f = 0; f < space.folds; ++f) sum += per_fold[pi][f][ti];
      GridSearchCell cell;
      cell.params = base;
      cell.params.max_depth = pairs[pi].depth;
      cell.params.sample_rate = pairs[pi].rate;
      cell.params.n_trees = space.n_trees[ti];
      cell.mean_val_log_loss = sum / static_cast<double>(space.folds);
      if (cell.mean_val_log_loss < best) {
        best = cell.mean_val_log_loss;
        result.best = cell.params;
      }
      result.cells.push_back(cell);
    }
  }
  return result;
}

}  // namespace riskadvisor::pipeline
