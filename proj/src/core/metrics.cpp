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

#include "riskadvisor/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace riskadvisor::eval {

namespace {

struct ClassCounts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

ClassCounts CheckBinary(std::size_t n_scores, const std::vector<bool>& positives, const char* what) {
  if (n_scores != positives.size()) {
    Fail(ErrorKind::kData, std::string(what) + ": score and label lengths differ");
  }
  ClassCounts c;
  for (bool p : positives) (p ? c.positives : c.negatives)++;
  if (c.positives == 0 || c.negatives == 0) {
    Fail(ErrorKind::kData, std::string(what) + ": needs at least one positive and one negative");
  }
  return c;
}

std::vector<double> Oriented(std::span<const double> scores, Orientation o) {
  std::vector<double> out(scores.begin(), scores.end());
  for (double v : out) {
    if (std::isnan(v)) Fail(ErrorKind::kData, "scores must not be NaN");
  }
  if (o == Orientation::kLowerIsPositive) {
    for (auto& v : out) v = -v;
  }
  return out;
}

}  // namespace

double Auroc(const RankedScores& r) {
  const auto counts = CheckBinary(r.scores.size(), r.positives, "auroc");
  const auto s = Oriented(r.scores, r.orientation);
  const std::size_t n = s.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] < s[b]; });

  // Sum of mid-ranks of the positives, kept doubled so it stays integral.
  long double twice_rank_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && s[order[j]] == s[order[i]]) ++j;
    // Ranks i+1..j share the midrank (i + 1 + j) / 2.
    const auto twice_mid = static_cast<long double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (r.positives[order[k]]) twice_rank_sum += twice_mid;
    }
    i = j;
  }
  const auto p = static_cast<long double>(counts.positives);
  const long double twice_u = twice_rank_sum - p * (p + 1);
  return static_cast<double>(twice_u / 2.0L) /
         (static_cast<double>(counts.positives) * static_cast<double>(counts.negatives));
}

double AveragePrecision(const RankedScores& r) {
  const auto counts = CheckBinary(r.scores.size(), r.positives, "average_precision");
  const auto s = Oriented(r.scores, r.orientation);
  const std::size_t n = s.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });

  const auto total_pos = static_cast<double>(counts.positives);
  double ap = 0.0;
  double prev_recall = 0.0;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && s[order[j]] == s[order[i]]) {
      if (r.positives[order[j]]) ++tp;
      ++j;
    }
    seen = j;
    const double recall = static_cast<double>(tp) / total_pos;
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

double OodAuroc(std::span<const double> scores, const std::vector<bool>& is_ood,
                Orientation orientation) {
  return Auroc({std::vector<double>(scores.begin(), scores.end()), is_ood, orientation});
}

std::vector<std::size_t> RejectionOrder(std::span<const double> scores, Orientation orientation) {
  const auto s = Oriented(scores, orientation);
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  return order;
}

ArCurve AccuracyRejectionCurve(std::span<const double> scores, const std::vector<bool>& errors,
                               double grid_step, Orientation orientation) {
  if (scores.size() != errors.size()) {
    Fail(ErrorKind::kData, "accuracy_rejection_curve: length mismatch");
  }
  if (scores.empty()) Fail(ErrorKind::kData, "accuracy_rejection_curve: no points");
  if (!(grid_step > 0.0 && grid_step <= 1.0)) {
    Fail(ErrorKind::kConfig, "grid_step must lie in (0, 1]");
  }
  const auto steps = static_cast<std::size_t>(std::llround(1.0 / grid_step));
  if (std::abs(static_cast<double>(steps) * grid_step - 1.0) > 1e-9) {
    Fail(ErrorKind::kConfig, "grid_step must divide 1 evenly");
  }
  const std::size_t n = scores.size();
  const auto order = RejectionOrder(scores, orientation);
  // Errors remaining after rejecting the first j points.
  std::vector<std::size_t> residual(n + 1);
  residual[0] = static_cast<std::size_t>(std::count(errors.begin(), errors.end(), true));
  for (std::size_t j = 0; j < n; ++j) residual[j + 1] = residual[j] - (errors[order[j]] ? 1 : 0);

  ArCurve curve;
  for (std::size_t k = 0; k <= steps; ++k) {
    const std::size_t rejected = (k * n + steps - 1) / steps;
    curve.rejection_fractions.push_back(static_cast<double>(k) / static_cast<double>(steps));
    curve.accuracies.push_back(1.0 - static_cast<double>(residual[rejected]) /
                                         static_cast<double>(n));
  }
  const std::size_t e = residual[0];
  curve.prr = (e > 0 && e < n) ? Prr(scores, errors, orientation) : 0.0;
  return curve;
}

double Prr(std::span<const double> scores, const std::vector<bool>& errors,
           Orientation orientation) {
  const auto counts = CheckBinary(scores.size(), errors, "prr");
  const std::size_t n = scores.size();
  const auto order = RejectionOrder(scores, orientation);
  const auto e_total = static_cast<__int128>(counts.positives);
  const auto nn = static_cast<__int128>(n);

  // Work in units of 1/N^2 on the breakpoint grid rho_j = j / N, where every
  // curve value is an integer and trapezoid areas are exact:
  //   random:   e0 (1 - rho)     -> E (N - j)
  //   method:   e(rho)           -> N * errors_left(j)
  //   oracle:   max(0, e0 - rho) -> N * max(0, E - j)
  auto area = [&](auto residual_at) {
    __int128 twice_area = 0;
    __int128 prev = 0;
    for (std::size_t j = 0; j <= n; ++j) {
      const auto jj = static_cast<__int128>(j);
      const __int128 gap = e_total * (nn - jj) - nn * residual_at(j);
      if (j > 0) twice_area += prev + gap;
      prev = gap;
    }
    return twice_area;
  };

  std::vector<__int128> left(n + 1);
  left[0] = e_total;
  for (std::size_t j = 0; j < n; ++j) left[j + 1] = left[j] - (errors[order[j]] ? 1 : 0);
  const __int128 method = area([&](std::size_t j) { return left[j]; });
  const __int128 oracle = area([&](std::size_t j) {
    const auto jj = static_cast<__int128>(j);
    return e_total > jj ? e_total - jj : __int128{0};
  });
  return static_cast<double>(method) / static_cast<double>(oracle);
}

}  // namespace riskadvisor::eval
