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

#include "riskadvisor/advisor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json_internal.hpp"
#include "parallel.hpp"
#include "riskadvisor/csv.hpp"

namespace riskadvisor::advisor {

using json = nlohmann::json;

double BinaryEntropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    Fail(ErrorKind::kData, "binary_entropy: p = " + FormatDouble(p) + " lies outside [0, 1]");
  }
  double h = 0.0;
  if (p > 0.0) h -= p * std::log2(p);
  if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
  return h;
}

PointUncertainty DecomposeRow(std::span<const double> member_probs, const RiskWeights& weights) {
  if (member_probs.empty()) Fail(ErrorKind::kData, "decompose: no ensemble members");
  const double m = static_cast<double>(member_probs.size());
  double mean = 0.0;
  double mean_entropy = 0.0;
  for (double p : member_probs) {
    mean += p;
    mean_entropy += BinaryEntropy(p);
  }
  mean /= m;
  mean_entropy /= m;
  // Unanimous members: the averages are exact, and so is a zero epistemic part.
  const auto [lo, hi] = std::minmax_element(member_probs.begin(), member_probs.end());
  if (*lo == *hi) {
    mean = *lo;
    mean_entropy = BinaryEntropy(mean);
  }

  PointUncertainty u;
  u.error_prob = std::clamp(mean, 0.0, 1.0);
  u.total = BinaryEntropy(u.error_prob);
  u.aleatoric = mean_entropy;
  u.epistemic = u.total - u.aleatoric;
  if (u.epistemic < 0.0) {
    // Rounding residue only: Jensen guarantees aleatoric <= total.
    u.epistemic = 0.0;
    u.aleatoric = u.total;
  }
  u.risk_score = weights.model * u.error_prob + weights.epistemic * u.epistemic +
                 weights.aleatoric * u.aleatoric;
  return u;
}

UncertaintyReport DecomposeProbabilities(Matrix member_probs, const RiskWeights& weights) {
  UncertaintyReport r;
  const std::size_t n = member_probs.rows();
  r.error_prob.resize(n);
  r.total.resize(n);
  r.aleatoric.resize(n);
  r.epistemic.resize(n);
  r.risk_score.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto u = DecomposeRow(member_probs.row(i), weights);
    r.error_prob[i] = u.error_prob;
    r.total[i] = u.total;
    r.aleatoric[i] = u.aleatoric;
    r.epistemic[i] = u.epistemic;
    r.risk_score[i] = u.risk_score;
  }
  r.member_probs = std::move(member_probs);
  return r;
}

namespace {

void CheckWeights(const RiskWeights& w) {
  for (double v : {w.model, w.epistemic, w.aleatoric}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      Fail(ErrorKind::kConfig, "risk weights must be finite and >= 0");
    }
  }
}

}  // namespace

AdvisorModel::AdvisorModel(std::vector<sgbt::SgbtModel> members, RiskWeights weights)
    : members_(std::move(members)), weights_(weights) {
  if (members_.empty()) Fail(ErrorKind::kConfig, "advisor needs at least one member");
  CheckWeights(weights_);
  for (const auto& m : members_) {
    if (m.n_features() != members_.front().n_features()) {
      Fail(ErrorKind::kData, "advisor members disagree on feature width");
    }
  }
}

std::vector<std::uint64_t> AdvisorModel::member_seeds() const {
  std::vector<std::uint64_t> seeds;
  for (const auto& m : members_) seeds.push_back(m.params().seed);
  return seeds;
}

void AdvisorModel::set_weights(const RiskWeights& w) {
  CheckWeights(w);
  weights_ = w;
}

std::size_t AdvisorModel::n_features() const {
  return members_.empty() ? 0 : members_.front().n_features();
}

Matrix AdvisorModel::member_probabilities(const Matrix& features) const {
  if (members_.empty()) Fail(ErrorKind::kConfig, "advisor is not trained");
  if (features.cols() != n_features()) {
    Fail(ErrorKind::kData, "advisor: feature width " + std::to_string(features.cols()) +
                               " does not match model width " + std::to_string(n_features()));
  }
  Matrix probs(features.rows(), members_.size());
  for (std::size_t m = 0; m < members_.size(); ++m) {
    const auto p = members_[m].predict_proba(features);
    for (std::size_t i = 0; i < p.size(); ++i) probs(i, m) = p[i];
  }
  return probs;
}

UncertaintyReport AdvisorModel::decompose(const Matrix& features) const {
  return DecomposeProbabilities(member_probabilities(features), weights_);
}

std::string AdvisorModel::to_json() const {
  json members = json::array();
  for (const auto& m : members_) members.push_back(sgbt::ModelToJson(m));
  json j{{"version", 1},
         {"weights",
          {{"model", weights_.model},
           {"epistemic", weights_.epistemic},
           {"aleatoric", weights_.aleatoric}}},
         {"members", std::move(members)}};
  return j.dump();
}

AdvisorModel AdvisorModel::FromJson(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("version").get<int>() != 1) Fail(ErrorKind::kData, "unsupported advisor version");
    RiskWeights w;
    const auto& wj = j.at("weights");
    w.model = wj.at("model").get<double>();
    w.epistemic = wj.at("epistemic").get<double>();
    w.aleatoric = wj.at("aleatoric").get<double>();
    std::vector<sgbt::SgbtModel> members;
    for (const auto& mj : j.at("members")) members.push_back(sgbt::ModelFromJson(mj));
    return AdvisorModel(std::move(members), w);
  } catch (const json::exception& e) {
    Fail(ErrorKind::kData, std::string("malformed advisor JSON: ") + e.what());
  }
}

AdvisorModel FitAdvisor(const Matrix& features, const std::vector<bool>& z,
                        const sgbt::SgbtParams& params, std::size_t members,
                        const RiskWeights& weights) {
  if (members < 1) Fail(ErrorKind::kConfig, "advisor needs at least one member");
  params.validate();
  std::vector<sgbt::SgbtModel> fitted(members);
  ParallelFor(members, [&](std::size_t m) {
    auto p = params;
    p.seed = params.seed + m;
    fitted[m] = sgbt::FitSgbt(features, z, p);
  });
  return AdvisorModel(std::move(fitted), weights);
}

std::string ReportToCsv(const UncertaintyReport& report, bool include_members) {
  std::ostringstream out;
  std::vector<std::string> cells{"error_prob", "total", "aleatoric", "epistemic", "risk_score"};
  const std::size_t m = include_members ? report.member_probs.cols() : 0;
  for (std::size_t k = 0; k < m; ++k) cells.push_back("member_" + std::to_string(k));
  WriteCsvRow(out, cells);
  for (std::size_t i = 0; i < report.size(); ++i) {
    cells = {FormatDouble(report.error_prob[i]), FormatDouble(report.total[i]),
             FormatDouble(report.aleatoric[i]), FormatDouble(report.epistemic[i]),
             FormatDouble(report.risk_score[i])};
    for (std::size_t k = 0; k < m; ++k) cells.push_back(FormatDouble(report.member_probs(i, k)));
    WriteCsvRow(out, cells);
  }
  return out.str();
}

void SaveReportCsv(const UncertaintyReport& report, const std::string& path,
                   bool include_members) {
  WriteFileAtomic(path, ReportToCsv(report, include_members));
}

UncertaintyReport LoadReportCsv(const std::string& path) {
  const CsvTable table = ReadCsvFile(path);
  const std::size_t cols[] = {table.column("error_prob", path), table.column("total", path),
                              table.column("aleatoric", path), table.column("epistemic", path),
                              table.column("risk_score", path)};
  std::vector<std::size_t> member_cols;
  for (std::size_t k = 0;; ++k) {
    const std::string name = "member_" + std::to_string(k);
    if (std::find(table.header.begin(), table.header.end(), name) == table.header.end()) break;
    member_cols.push_back(table.column(name, path));
  }
  const std::size_t n = table.rows.size();
  UncertaintyReport r;
  std::vector<double>* targets[] = {&r.error_prob, &r.total, &r.aleatoric, &r.epistemic,
                                    &r.risk_score};
  for (auto* t : targets) t->resize(n);
  r.member_probs = Matrix(n, member_cols.size());
  auto parse = [&](std::size_t row, std::size_t col) {
    double v;
    if (!ParseDouble(table.rows[row][col], v)) {
      throw CsvError(CsvErrorCode::kUnparseableCell,
                     path + ": row " + std::to_string(row + 1) + ", column '" +
                         table.header[col] + "': cannot parse '" + table.rows[row][col] + "'",
                     row + 1, table.header[col]);
    }
    return v;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < 5; ++k) (*targets[k])[i] = parse(i, cols[k]);
    for (std::size_t k = 0; k < member_cols.size(); ++k) r.member_probs(i, k) = parse(i, member_cols[k]);
  }
  return r;
}

}  // namespace riskadvisor::advisor
