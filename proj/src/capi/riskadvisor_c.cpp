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

#include "riskadvisor/riskadvisor.h"

#include <cstring>
#include <new>
#include <set>
#include <string>

#include "json.hpp"
#include "riskadvisor/advisor.hpp"
#include "riskadvisor/baselines.hpp"
#include "riskadvisor/blackbox.hpp"
#include "riskadvisor/csv.hpp"
#include "riskadvisor/dataset.hpp"
#include "riskadvisor/metrics.hpp"
#include "riskadvisor/pipeline.hpp"
#include "riskadvisor/retrain.hpp"

namespace ra = riskadvisor;
using nlohmann::json;

struct ra_dataset {
  ra::data::Dataset d;
};
struct ra_bbox {
  ra::bbox::BlackBoxModel m;
};
struct ra_advisor {
  ra::advisor::AdvisorModel a;
};
struct ra_report {
  ra::advisor::UncertaintyReport r;
};
struct ra_trust {
  ra::baselines::TrustModel t;
};

namespace {

thread_local std::string g_last_error;

ra_status Record(ra_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <typename F>
ra_status Guard(F&& f) {
  try {
    f();
    return RA_OK;
  } catch (const ra::Error& e) {
    return Record(static_cast<ra_status>(static_cast<int>(e.kind())), e.what());
  } catch (const json::exception& e) {
    return Record(RA_ERR_CONFIG, std::string("invalid JSON: ") + e.what());
  } catch (const std::bad_alloc&) {
    return Record(RA_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return Record(RA_ERR_INTERNAL, e.what());
  } catch (...) {
    return Record(RA_ERR_INTERNAL, "unknown failure");
  }
}

void Require(const void* p, const char* what) {
  if (!p) ra::Fail(ra::ErrorKind::kConfig, std::string(what) + " must not be NULL");
}

char* Dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json ParseObject(const char* text, const char* what) {
  if (!text || !*text) return json::object();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    ra::Fail(ra::ErrorKind::kConfig, std::string(what) + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) ra::Fail(ra::ErrorKind::kConfig, std::string(what) + " must be a JSON object");
  return j;
}

void CheckKeys(const json& j, const std::set<std::string>& allowed, const char* what) {
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      ra::Fail(ra::ErrorKind::kConfig, std::string("unknown ") + what + " field '" + item.key() + "'");
    }
  }
}

template <typename T>
void Read(const json& j, const char* key, T& out, const char* what) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
    if (!it->is_number_unsigned()) {
      ra::Fail(ra::ErrorKind::kConfig, std::string(what) + " field '" + key + "' must be a non-negative integer");
    }
  }
  try {
    out = it->template get<T>();
  } catch (const json::exception&) {
    ra::Fail(ra::ErrorKind::kConfig, std::string(what) + " field '" + key + "' has the wrong type");
  }
}

struct BboxRequest {
  ra::pipeline::BboxSpec spec;
  std::uint64_t seed = 0;
};

BboxRequest ParseBbox(const json& j) {
  CheckKeys(j, {"kind", "l2", "epochs", "lr", "hidden", "batch_size", "seed"}, "bbox");
  BboxRequest b;
  std::string kind = "logistic";
  Read(j, "kind", kind, "bbox");
  if (kind == "logistic") {
    b.spec.kind = ra::bbox::ModelKind::kLogistic;
    Read(j, "l2", b.spec.logistic.l2, "bbox");
    Read(j, "epochs", b.spec.logistic.epochs, "bbox");
    Read(j, "lr", b.spec.logistic.lr, "bbox");
    if (j.contains("hidden") || j.contains("batch_size")) {
      ra::Fail(ra::ErrorKind::kConfig, "bbox fields 'hidden' and 'batch_size' apply to kind mlp only");
    }
  } else if (kind == "mlp") {
    b.spec.kind = ra::bbox::ModelKind::kMlp;
    Read(j, "epochs", b.spec.mlp.epochs, "bbox");
    Read(j, "lr", b.spec.mlp.lr, "bbox");
    Read(j, "hidden", b.spec.mlp.hidden, "bbox");
    Read(j, "batch_size", b.spec.mlp.batch_size, "bbox");
    if (j.contains("l2")) ra::Fail(ra::ErrorKind::kConfig, "bbox field 'l2' applies to kind logistic only");
  } else {
    ra::Fail(ra::ErrorKind::kConfig, "bbox field 'kind' must be logistic or mlp");
  }
  Read(j, "seed", b.seed, "bbox");
  return b;
}

struct AdvisorRequest {
  ra::sgbt::SgbtParams params;
  std::size_t members = 10;
  ra::advisor::RiskWeights weights;
};

AdvisorRequest ParseAdvisor(const json& j) {
  CheckKeys(j,
            {"n_trees", "max_depth", "learning_rate", "sample_rate", "min_samples_leaf", "seed", "members",
             "weights"},
            "advisor");
  AdvisorRequest a;
  Read(j, "n_trees", a.params.n_trees, "advisor");
  Read(j, "max_depth", a.params.max_depth, "advisor");
  Read(j, "learning_rate", a.params.learning_rate, "advisor");
  Read(j, "sample_rate", a.params.sample_rate, "advisor");
  Read(j, "min_samples_leaf", a.params.min_samples_leaf, "advisor");
  Read(j, "seed", a.params.seed, "advisor");
  Read(j, "members", a.members, "advisor");
  if (const auto it = j.find("weights"); it != j.end()) {
    if (!it->is_object()) ra::Fail(ra::ErrorKind::kConfig, "advisor field 'weights' must be an object");
    CheckKeys(*it, {"model", "epistemic", "aleatoric"}, "advisor.weights");
    Read(*it, "model", a.weights.model, "advisor.weights");
    Read(*it, "epistemic", a.weights.epistemic, "advisor.weights");
    Read(*it, "aleatoric", a.weights.aleatoric, "advisor.weights");
  }
  a.params.validate();
  if (a.members == 0) ra::Fail(ra::ErrorKind::kConfig, "advisor field 'members' must be >= 1");
  return a;
}

std::vector<bool> Bools(const unsigned char* p, std::size_t n) {
  std::vector<bool> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = p[i] != 0;
  return out;
}

ra::eval::Orientation Orient(ra_orientation o) {
  if (o != RA_HIGHER_IS_POSITIVE && o != RA_LOWER_IS_POSITIVE) {
    ra::Fail(ra::ErrorKind::kConfig, "unknown orientation");
  }
  return o == RA_LOWER_IS_POSITIVE ? ra::eval::Orientation::kLowerIsPositive
                                   : ra::eval::Orientation::kHigherIsPositive;
}

void CopyOut(const std::vector<double>& v, double* out) { std::copy(v.begin(), v.end(), out); }

}  // namespace

extern "C" {

const char* ra_version(void) { return ra::kVersion; }
const char* ra_last_error(void) { return g_last_error.c_str(); }
void ra_string_free(char* s) { std::free(s); }

// ---- datasets

ra_status ra_dataset_gen_circles(size_t n, double noise_sd, uint64_t seed, ra_dataset** out) {
  return Guard([&] {
    Require(out, "out");
    *out = new ra_dataset{ra::data::GenCircles(n, noise_sd, seed)};
  });
}

ra_status ra_dataset_gen_moons(size_t n, double noise_sd, uint64_t seed, ra_dataset** out) {
  return Guard([&] {
    Require(out, "out");
    *out = new ra_dataset{ra::data::GenMoons(n, noise_sd, seed)};
  });
}

ra_status ra_dataset_gen_gmm_shift(size_t n_train, size_t n_test, uint64_t seed, const char* params_json,
                                   ra_dataset** train, ra_dataset** test) {
  return Guard([&] {
    Require(train, "train");
    Require(test, "test");
    const auto j = ParseObject(params_json, "gmm params");
    CheckKeys(j, {"mean_a0", "mean_a1", "mean_b", "sd", "label_b"}, "gmm");
    ra::data::GmmShiftParams p;
    Read(j, "mean_a0", p.mean_a0, "gmm");
    Read(j, "mean_a1", p.mean_a1, "gmm");
    Read(j, "mean_b", p.mean_b, "gmm");
    Read(j, "sd", p.sd, "gmm");
    Read(j, "label_b", p.label_b, "gmm");
    auto tt = ra::data::GenGmmShift(n_train, n_test, seed, p);
    auto* a = new ra_dataset{std::move(tt.train)};
    *test = new ra_dataset{std::move(tt.test)};
    *train = a;
  });
}

ra_status ra_dataset_from_arrays(const double* features, size_t rows, size_t cols, const int* labels,
                                 int class_count, const unsigned char* is_ood, ra_dataset** out) {
  return Guard([&] {
    Require(out, "out");
    if (rows > 0) {
      Require(features, "features");
      Require(labels, "labels");
    }
    ra::data::Dataset d;
    d.features = ra::Matrix(rows, cols);
    std::copy(features, features + rows * cols, d.features.data().begin());
    d.labels.assign(labels, labels + rows);
    d.class_count = class_count;
    for (std::size_t c = 0; c < cols; ++c) d.feature_names.push_back("x" + std::to_string(c));
    if (is_ood) d.is_ood = Bools(is_ood, rows);
    d.validate();
    *out = new ra_dataset{std::move(d)};
  });
}

ra_status ra_dataset_load_csv(const char* path, const char* label_column, const char* ood_column,
                              ra_dataset** out) {
  return Guard([&] {
    Require(path, "path");
    Require(label_column, "label_column");
    Require(out, "out");
    std::optional<std::string> ood;
    if (ood_column && *ood_column) ood = ood_column;
    *out = new ra_dataset{ra::data::LoadCsv(path, label_column, ood)};
  });
}

ra_status ra_dataset_save_csv(const ra_dataset* d, const char* path) {
  return Guard([&] {
    Require(d, "dataset");
    Require(path, "path");
    ra::data::SaveCsv(d->d, path);
  });
}

ra_status ra_dataset_split(const ra_dataset* d, double train_fraction, int stratified, uint64_t seed,
                           ra_dataset** train, ra_dataset** test) {
  return Guard([&] {
    Require(d, "dataset");
    Require(train, "train");
    Require(test, "test");
    auto tt = ra::data::Split(d->d, {train_fraction, stratified != 0, seed});
    auto* a = new ra_dataset{std::move(tt.train)};
    *test = new ra_dataset{std::move(tt.test)};
    *train = a;
  });
}

ra_status ra_dataset_standardize(ra_dataset* train, ra_dataset** others, size_t n_others) {
  return Guard([&] {
    Require(train, "train");
    if (n_others > 0) Require(others, "others");
    std::vector<ra::data::Dataset> rest;
    for (std::size_t i = 0; i < n_others; ++i) {
      Require(others[i], "others[i]");
      rest.push_back(others[i]->d);
    }
    auto t = train->d;
    ra::data::Standardize(t, rest);
    train->d = std::move(t);
    for (std::size_t i = 0; i < n_others; ++i) others[i]->d = std::move(rest[i]);
  });
}

ra_status ra_dataset_concat(const ra_dataset* a, const ra_dataset* b, ra_dataset** out) {
  return Guard([&] {
    Require(a, "a");
    Require(b, "b");
    Require(out, "out");
    *out = new ra_dataset{ra::data::Concat(a->d, b->d)};
  });
}

size_t ra_dataset_rows(const ra_dataset* d) { return d ? d->d.size() : 0; }
size_t ra_dataset_cols(const ra_dataset* d) { return d ? d->d.width() : 0; }
int ra_dataset_class_count(const ra_dataset* d) { return d ? d->d.class_count : 0; }
int ra_dataset_has_ood(const ra_dataset* d) { return d && d->d.is_ood ? 1 : 0; }

ra_status ra_dataset_features(const ra_dataset* d, double* out) {
  return Guard([&] {
    Require(d, "dataset");
    Require(out, "out");
    const auto& m = d->d.features;
    std::copy(m.data().begin(), m.data().end(), out);
  });
}

ra_status ra_dataset_labels(const ra_dataset* d, int* out) {
  return Guard([&] {
    Require(d, "dataset");
    Require(out, "out");
    std::copy(d->d.labels.begin(), d->d.labels.end(), out);
  });
}

ra_status ra_dataset_ood(const ra_dataset* d, unsigned char* out) {
  return Guard([&] {
    Require(d, "dataset");
    Require(out, "out");
    if (!d->d.is_ood) ra::Fail(ra::ErrorKind::kData, "dataset has no is_ood flags");
    for (std::size_t i = 0; i < d->d.size(); ++i) out[i] = (*d->d.is_ood)[i] ? 1 : 0;
  });
}

void ra_dataset_free(ra_dataset* d) { delete d; }

// ---- black-box models

ra_status ra_bbox_train(const ra_dataset* train, const char* spec_json, ra_bbox** out) {
  return Guard([&] {
    Require(train, "train");
    Require(out, "out");
    const auto req = ParseBbox(ParseObject(spec_json, "bbox spec"));
    *out = new ra_bbox{req.spec.Train(train->d, req.seed)};
  });
}

ra_status ra_bbox_load_external(const char* path, int class_count, ra_bbox** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    *out = new ra_bbox{ra::bbox::LoadExternalPredictions(path, class_count)};
  });
}

ra_status ra_bbox_load(const char* path, ra_bbox** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    *out = new ra_bbox{ra::bbox::BlackBoxModel::FromJson(ra::ReadFile(path))};
  });
}

ra_status ra_bbox_save(const ra_bbox* m, const char* path) {
  return Guard([&] {
    Require(m, "model");
    Require(path, "path");
    ra::WriteFileAtomic(path, m->m.to_json());
  });
}

int ra_bbox_class_count(const ra_bbox* m) { return m ? m->m.class_count() : 0; }
int ra_bbox_has_probabilities(const ra_bbox* m) { return m && m->m.has_probabilities() ? 1 : 0; }

ra_status ra_bbox_predict(const ra_bbox* m, const ra_dataset* d, int* labels_out, double* proba_out) {
  return Guard([&] {
    Require(m, "model");
    Require(d, "dataset");
    Require(labels_out, "labels_out");
    const auto pred = m->m.predict(d->d);
    std::copy(pred.labels.begin(), pred.labels.end(), labels_out);
    if (proba_out) {
      if (!pred.probabilities) ra::Fail(ra::ErrorKind::kData, "model supplies labels only");
      const auto& p = *pred.probabilities;
      std::copy(p.data().begin(), p.data().end(), proba_out);
    }
  });
}

void ra_bbox_free(ra_bbox* m) { delete m; }

ra_status ra_error_indicator(const int* labels_true, const int* labels_pred, size_t n, unsigned char* z_out,
                             double* positive_rate) {
  return Guard([&] {
    if (n > 0) {
      Require(labels_true, "labels_true");
      Require(labels_pred, "labels_pred");
      Require(z_out, "z_out");
    }
    const auto ei = ra::bbox::ComputeErrorIndicator(std::span<const int>(labels_true, n),
                                                    std::span<const int>(labels_pred, n));
    for (std::size_t i = 0; i < n; ++i) z_out[i] = ei.z[i] ? 1 : 0;
    if (positive_rate) *positive_rate = ei.positive_rate;
  });
}

// ---- advisor

ra_status ra_advisor_fit(const ra_dataset* train, const ra_bbox* bbox, const char* params_json,
                         ra_advisor** out) {
  return Guard([&] {
    Require(train, "train");
    Require(bbox, "bbox");
    Require(out, "out");
    const auto req = ParseAdvisor(ParseObject(params_json, "advisor params"));
    const auto pred = bbox->m.predict(train->d);
    const auto z = ra::bbox::ComputeErrorIndicator(train->d.labels, pred.labels).z;
    *out = new ra_advisor{ra::advisor::FitAdvisor(train->d.features, z, req.params, req.members, req.weights)};
  });
}

ra_status ra_advisor_fit_targets(const double* features, size_t rows, size_t cols, const unsigned char* z,
                                 const char* params_json, ra_advisor** out) {
  return Guard([&] {
    Require(features, "features");
    Require(z, "z");
    Require(out, "out");
    const auto req = ParseAdvisor(ParseObject(params_json, "advisor params"));
    ra::Matrix x(rows, cols);
    std::copy(features, features + rows * cols, x.data().begin());
    *out = new ra_advisor{ra::advisor::FitAdvisor(x, Bools(z, rows), req.params, req.members, req.weights)};
  });
}

ra_status ra_advisor_grid_search(const ra_dataset* train, const ra_bbox* bbox, const char* params_json,
                                 const char* grid_json, char** result_json) {
  return Guard([&] {
    Require(train, "train");
    Require(bbox, "bbox");
    Require(result_json, "result_json");
    const auto req = ParseAdvisor(ParseObject(params_json, "advisor params"));
    const auto g = ParseObject(grid_json, "grid");
    CheckKeys(g, {"max_depth", "sample_rate", "n_trees", "folds"}, "grid");
    ra::pipeline::GridSearchSpace space;
    Read(g, "max_depth", space.max_depth, "grid");
    Read(g, "sample_rate", space.sample_rate, "grid");
    Read(g, "n_trees", space.n_trees, "grid");
    Read(g, "folds", space.folds, "grid");
    const auto z = ra::bbox::ComputeErrorIndicator(train->d.labels, bbox->m.predict(train->d).labels).z;
    *result_json = Dup(ra::pipeline::GridSearchSgbt(train->d.features, z, req.params, space).ToJson());
  });
}

ra_status ra_advisor_load(const char* path, ra_advisor** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    *out = new ra_advisor{ra::advisor::AdvisorModel::FromJson(ra::ReadFile(path))};
  });
}

ra_status ra_advisor_save(const ra_advisor* a, const char* path) {
  return Guard([&] {
    Require(a, "advisor");
    Require(path, "path");
    ra::WriteFileAtomic(path, a->a.to_json());
  });
}

size_t ra_advisor_members(const ra_advisor* a) { return a ? a->a.members().size() : 0; }

ra_status ra_advisor_set_weights(ra_advisor* a, double model, double epistemic, double aleatoric) {
  return Guard([&] {
    Require(a, "advisor");
    a->a.set_weights({model, epistemic, aleatoric});
  });
}

ra_status ra_advisor_decompose(const ra_advisor* a, const ra_dataset* d, ra_report** out) {
  return Guard([&] {
    Require(a, "advisor");
    Require(d, "dataset");
    Require(out, "out");
    *out = new ra_report{a->a.decompose(d->d.features)};
  });
}

ra_status ra_decompose_probabilities(const double* member_probs, size_t rows, size_t members,
                                     const double* weights3, ra_report** out) {
  return Guard([&] {
    Require(member_probs, "member_probs");
    Require(out, "out");
    ra::Matrix m(rows, members);
    std::copy(member_probs, member_probs + rows * members, m.data().begin());
    ra::advisor::RiskWeights w;
    if (weights3) w = {weights3[0], weights3[1], weights3[2]};
    *out = new ra_report{ra::advisor::DecomposeProbabilities(std::move(m), w)};
  });
}

size_t ra_report_rows(const ra_report* r) { return r ? r->r.size() : 0; }
size_t ra_report_members(const ra_report* r) { return r ? r->r.member_probs.cols() : 0; }

ra_status ra_report_field(const ra_report* r, const char* field, double* out) {
  return Guard([&] {
    Require(r, "report");
    Require(field, "field");
    Require(out, "out");
    const std::string f = field;
    if (f == "error_prob") {
      CopyOut(r->r.error_prob, out);
    } else if (f == "total") {
      CopyOut(r->r.total, out);
    } else if (f == "aleatoric") {
      CopyOut(r->r.aleatoric, out);
    } else if (f == "epistemic") {
      CopyOut(r->r.epistemic, out);
    } else if (f == "risk_score") {
      CopyOut(r->r.risk_score, out);
    } else {
      ra::Fail(ra::ErrorKind::kConfig, "unknown report field '" + f + "'");
    }
  });
}

ra_status ra_report_member_probs(const ra_report* r, double* out) {
  return Guard([&] {
    Require(r, "report");
    Require(out, "out");
    const auto& m = r->r.member_probs;
    std::copy(m.data().begin(), m.data().end(), out);
  });
}

ra_status ra_report_save_csv(const ra_report* r, const char* path, int include_members) {
  return Guard([&] {
    Require(r, "report");
    Require(path, "path");
    ra::advisor::SaveReportCsv(r->r, path, include_members != 0);
  });
}

ra_status ra_report_load_csv(const char* path, ra_report** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    *out = new ra_report{ra::advisor::LoadReportCsv(path)};
  });
}

void ra_report_free(ra_report* r) { delete r; }
void ra_advisor_free(ra_advisor* a) { delete a; }

// ---- baselines

ra_status ra_mcp_confidence(const double* proba, size_t rows, size_t classes, double* out) {
  return Guard([&] {
    Require(proba, "proba");
    Require(out, "out");
    ra::Matrix m(rows, classes);
    std::copy(proba, proba + rows * classes, m.data().begin());
    CopyOut(ra::baselines::McpConfidence(m), out);
  });
}

ra_status ra_trust_fit(const ra_dataset* train, double alpha, size_t k_density, ra_trust** out) {
  return Guard([&] {
    Require(train, "train");
    Require(out, "out");
    *out = new ra_trust{ra::baselines::TrustModel::Fit(train->d, {alpha, k_density})};
  });
}

ra_status ra_trust_score(const ra_trust* t, const ra_dataset* d, const int* predicted_labels, double* out) {
  return Guard([&] {
    Require(t, "trust");
    Require(d, "dataset");
    Require(predicted_labels, "predicted_labels");
    Require(out, "out");
    CopyOut(t->t.score(d->d.features, std::span<const int>(predicted_labels, d->d.size())), out);
  });
}

void ra_trust_free(ra_trust* t) { delete t; }

// ---- metrics

ra_status ra_auroc(const double* scores, const unsigned char* positives, size_t n, ra_orientation orientation,
                   double* out) {
  return Guard([&] {
    Require(scores, "scores");
    Require(positives, "positives");
    Require(out, "out");
    *out = ra::eval::Auroc({std::vector<double>(scores, scores + n), Bools(positives, n), Orient(orientation)});
  });
}

ra_status ra_average_precision(const double* scores, const unsigned char* positives, size_t n,
                               ra_orientation orientation, double* out) {
  return Guard([&] {
    Require(scores, "scores");
    Require(positives, "positives");
    Require(out, "out");
    *out = ra::eval::AveragePrecision(
        {std::vector<double>(scores, scores + n), Bools(positives, n), Orient(orientation)});
  });
}

ra_status ra_prr(const double* scores, const unsigned char* errors, size_t n, ra_orientation orientation,
                 double* out) {
  return Guard([&] {
    Require(scores, "scores");
    Require(errors, "errors");
    Require(out, "out");
    *out = ra::eval::Prr(std::span<const double>(scores, n), Bools(errors, n), Orient(orientation));
  });
}

ra_status ra_ar_curve(const double* scores, const unsigned char* errors, size_t n, double grid_step,
                      ra_orientation orientation, char** json_out) {
  return Guard([&] {
    Require(scores, "scores");
    Require(errors, "errors");
    Require(json_out, "json_out");
    const auto c = ra::eval::AccuracyRejectionCurve(std::span<const double>(scores, n), Bools(errors, n),
                                                    grid_step, Orient(orientation));
    *json_out = Dup(
        json{{"rejection_fractions", c.rejection_fractions}, {"accuracies", c.accuracies}, {"prr", c.prr}}.dump(2));
  });
}

// ---- orchestration

ra_status ra_config_defaults(char** json_out) {
  return Guard([&] {
    Require(json_out, "json_out");
    *json_out = Dup(ra::pipeline::ExperimentConfig{}.ToJson());
  });
}

ra_status ra_run_scenario(const char* config_json, const char* output_dir, size_t repeats, char** metrics_json) {
  return Guard([&] {
    Require(config_json, "config_json");
    auto cfg = ra::pipeline::ExperimentConfig::FromJson(config_json);
    if (output_dir && *output_dir) cfg.output_dir = output_dir;
    if (repeats > 0) cfg.repeats = repeats;
    const auto result = ra::pipeline::RunScenario(cfg);
    if (metrics_json) *metrics_json = Dup(result.metrics_json);
  });
}

ra_status ra_evaluate(const ra_dataset* test, const ra_bbox* bbox, const ra_advisor* advisor,
                      const ra_trust* trust, const char* what, double grid_step, char** json_out) {
  return Guard([&] {
    Require(test, "test");
    Require(bbox, "bbox");
    Require(advisor, "advisor");
    Require(what, "what");
    Require(json_out, "json_out");
    const auto scores = ra::pipeline::ComputeScores(test->d, bbox->m, advisor->a, trust ? &trust->t : nullptr);
    const std::string w = what;
    json out{{"n", test->d.size()}, {"bbox_accuracy", scores.bbox_accuracy}};
    std::string body;
    if (w == "failure") {
      body = ra::pipeline::FailureMetricsJson(scores);
    } else if (w == "ood") {
      body = ra::pipeline::OodMetricsJson(scores);
    } else if (w == "abstention") {
      body = ra::pipeline::AbstentionMetricsJson(scores, grid_step);
    } else {
      ra::Fail(ra::ErrorKind::kConfig, "evaluation must be failure, ood or abstention");
    }
    out.update(json::parse(body));
    *json_out = Dup(out.dump(2));
  });
}

ra_status ra_sample_retrain(const ra_dataset* train, const ra_dataset* pool, const ra_dataset* test,
                            const char* request_json, char** curve_json, char** curve_csv) {
  return Guard([&] {
    Require(train, "train");
    Require(pool, "pool");
    Require(test, "test");
    const auto j = ParseObject(request_json, "sample-retrain request");
    CheckKeys(j, {"strategy", "k_percent", "rounds", "with_replacement", "seed", "bbox", "advisor", "trust"},
              "sample-retrain");
    ra::eval::SampleRetrainConfig rc;
    std::string strategy = ra::eval::ToString(rc.strategy);
    Read(j, "strategy", strategy, "sample-retrain");
    rc.strategy = ra::eval::StrategyFromString(strategy);
    Read(j, "k_percent", rc.k_percent, "sample-retrain");
    Read(j, "rounds", rc.rounds, "sample-retrain");
    Read(j, "with_replacement", rc.with_replacement, "sample-retrain");
    Read(j, "seed", rc.seed, "sample-retrain");
    const auto bb = ParseBbox(j.contains("bbox") ? j["bbox"] : json::object());
    const auto adv = ParseAdvisor(j.contains("advisor") ? j["advisor"] : json::object());
    rc.advisor_params = adv.params;
    rc.advisor_members = adv.members;
    if (const auto it = j.find("trust"); it != j.end()) {
      CheckKeys(*it, {"alpha", "k"}, "sample-retrain.trust");
      Read(*it, "alpha", rc.trust.alpha, "sample-retrain.trust");
      Read(*it, "k", rc.trust.k_density, "sample-retrain.trust");
    }
    const ra::eval::BlackBoxTrainer trainer = [&](const ra::data::Dataset& d) { return bb.spec.Train(d, bb.seed); };
    const auto curve = ra::eval::SampleRetrain(train->d, pool->d, test->d, trainer, rc);
    if (curve_json) *curve_json = Dup(ra::pipeline::CurveJson(curve));
    if (curve_csv) *curve_csv = Dup(ra::eval::CurveToCsv(curve));
  });
}

ra_status ra_emit_grid(const char* kind, const ra_bbox* bbox, const ra_advisor* advisor, const double* bounds4,
                       const ra_dataset* bounds_data, size_t resolution, char** csv_out, char** svg_out) {
  return Guard([&] {
    Require(kind, "kind");
    Require(csv_out, "csv_out");
    const auto k = ra::pipeline::GridKindFromString(kind);
    ra::pipeline::Bounds b;
    if (bounds4) {
      b = {bounds4[0], bounds4[1], bounds4[2], bounds4[3]};
    } else {
      if (!bounds_data) ra::Fail(ra::ErrorKind::kConfig, "grid needs bounds or a dataset to derive them from");
      b = ra::pipeline::DefaultBounds(bounds_data->d.features);
    }
    const auto cells = ra::pipeline::EmitGrid(k, bbox ? &bbox->m : nullptr, advisor ? &advisor->a : nullptr, b,
                                              resolution);
    auto csv = ra::pipeline::GridToCsv(cells);
    std::string svg;
    if (svg_out) svg = ra::pipeline::GridToSvg(cells, resolution, ra::pipeline::ToString(k));
    *csv_out = Dup(csv);
    if (svg_out) *svg_out = Dup(svg);
  });
}

ra_status ra_write_file(const char* path, const char* contents) {
  return Guard([&] {
    Require(path, "path");
    Require(contents, "contents");
    ra::WriteFileAtomic(path, contents);
  });
}

}  // extern "C"
