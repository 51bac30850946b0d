#include <cmath>

#include "doctest.h"
#include "riskadvisor/dataset.hpp"
#include "riskadvisor/sgbt.hpp"

namespace ra = riskadvisor;
using ra::sgbt::SgbtParams;

namespace {

// Exhaustive variance-reduction search over every feature and midpoint.
ra::sgbt::Split BruteForceSplit(const ra::Matrix& x, const std::vector<double>& r) {
  ra::sgbt::Split best;
  const std::size_t n = x.rows();
  auto sse = [&](const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double m = 0;
    for (double a : v) m += a;
    m /= static_cast<double>(v.size());
    double s = 0;
    for (double a : v) s += (a - m) * (a - m);
    return s;
  };
  const double parent = sse(r);
  for (std::size_t f = 0; f < x.cols(); ++f) {
    std::vector<double> vals;
    for (std::size_t i = 0; i < n; ++i) vals.push_back(x(i, f));
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
      const double t = (vals[k] + vals[k + 1]) / 2;
      std::vector<double> a, b;
      for (std::size_t i = 0; i < n; ++i) (x(i, f) <= t ? a : b).push_back(r[i]);
      const double gain = (parent - sse(a) - sse(b)) / static_cast<double>(n);
      if (gain > best.gain + 1e-12) best = {static_cast<int>(f), t, gain};
    }
  }
  return best;
}

std::vector<bool> CirclesErrors(const ra::data::Dataset& d) {
  // Points inside radius 0.75 are the "errors" of a constant classifier.
  std::vector<bool> z(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) z[i] = std::hypot(d.features(i, 0), d.features(i, 1)) < 0.75;
  return z;
}

std::vector<std::size_t> AllRows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  return rows;
}

}  // namespace

TEST_CASE("split search matches enumeration") {
  const ra::Matrix x(4, 1, std::vector<double>{1, 2, 3, 4});
  const std::vector<double> r{-1, -1, 1, 1};
  const auto rows = AllRows(4);
  const auto s = ra::sgbt::FindBestSplit(x, r, rows);
  REQUIRE(s.found());
  CHECK(s.feature == 0);
  CHECK(s.threshold == 2.5);
  CHECK(s.gain == doctest::Approx(1.0).epsilon(1e-12));
  const auto oracle = BruteForceSplit(x, r);
  CHECK(oracle.threshold == 2.5);
  CHECK(s.gain == doctest::Approx(oracle.gain));
}

TEST_CASE("split search on random data agrees with brute force") {
  ra::Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + rng.below(30);
    ra::Matrix x(n, 3);
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t f = 0; f < 3; ++f) x(i, f) = std::round(rng.uniform() * 10);
      r[i] = rng.normal();
    }
    const auto s = ra::sgbt::FindBestSplit(x, r, AllRows(n));
    const auto o = BruteForceSplit(x, r);
    REQUIRE(s.found() == o.found());
    if (!s.found()) continue;
    CHECK(s.gain == doctest::Approx(o.gain).epsilon(1e-9));
    CHECK(s.feature == o.feature);
    CHECK(s.threshold == o.threshold);
  }
}

TEST_CASE("split search edge cases") {
  const ra::Matrix x(4, 1, std::vector<double>{1, 2, 3, 4});
  const std::vector<double> flat{0.3, 0.3, 0.3, 0.3};
  CHECK_FALSE(ra::sgbt::FindBestSplit(x, flat, AllRows(4)).found());
  // Identical columns tie; the lower feature index wins.
  const ra::Matrix twin(4, 2, std::vector<double>{1, 1, 2, 2, 3, 3, 4, 4});
  const std::vector<double> r{-1, -1, 1, 1};
  CHECK(ra::sgbt::FindBestSplit(twin, r, AllRows(4)).feature == 0);
  // A leaf minimum makes the only separating split infeasible.
  CHECK(ra::sgbt::FindBestSplit(x, r, AllRows(4), 3).found() == false);
}

TEST_CASE("boosted stumps fit a 1-d threshold") {
  const ra::Matrix x(4, 1, std::vector<double>{1, 2, 3, 4});
  const std::vector<bool> z{false, false, true, true};
  SgbtParams p;
  p.n_trees = 50;
  p.max_depth = 1;
  p.sample_rate = 1.0;
  p.min_samples_leaf = 1;
  const auto m = ra::sgbt::FitSgbt(x, z, p);
  const auto prob = m.predict_proba(x);
  for (std::size_t i = 0; i < 4; ++i) CHECK((prob[i] > 0.5) == z[i]);
  CHECK(prob[0] <= prob[1]);
  CHECK(prob[1] < prob[2]);
  CHECK(prob[2] <= prob[3]);
  for (const auto& t : m.trees()) {
    REQUIRE(t.nodes().size() == 3u);
    CHECK(t.nodes()[0].threshold == 2.5);
  }
}

TEST_CASE("all-negative targets drive predictions to the floor") {
  const auto d = ra::data::GenCircles(100, 0.1, 1);
  const std::vector<bool> z(100, false);
  SgbtParams p;
  p.n_trees = 20;
  const auto m = ra::sgbt::FitSgbt(d.features, z, p);
  CHECK(m.base_score() == doctest::Approx(std::log(1e-6 / (1 - 1e-6))));
  for (double q : m.predict_proba(d.features)) CHECK(q <= 1e-6 * (1 + 1e-9));
}

TEST_CASE("prediction closed forms") {
  SgbtParams p;
  p.learning_rate = 0.1;
  const ra::sgbt::SgbtModel empty(p, 1, 0.0, {});
  CHECK(empty.predict_proba(std::vector<double>{3.0}) == 0.5);

  const ra::sgbt::RegressionTree stump({{0, 0.0, 1, 2, 0.0}, {-1, 0, -1, -1, -1.0}, {-1, 0, -1, -1, 1.0}});
  const ra::sgbt::SgbtModel m(p, 1, 0.0, {stump});
  CHECK(m.predict_proba(std::vector<double>{1.0}) == doctest::Approx(1.0 / (1.0 + std::exp(-0.1))));
  CHECK(std::abs(m.predict_proba(std::vector<double>{1.0}) - 0.52498) < 1e-5);
  CHECK(std::abs(m.predict_proba(std::vector<double>{-1.0}) - 0.47502) < 1e-5);

  p.learning_rate = 1.0;
  const ra::sgbt::RegressionTree huge({{-1, 0, -1, -1, 4.0}});
  const ra::sgbt::SgbtModel big(p, 1, 0.0, std::vector<ra::sgbt::RegressionTree>(20, huge));
  CHECK(big.predict_proba(std::vector<double>{0.0}) == 1.0 - 1e-6);
}

TEST_CASE("fitting is deterministic and serializes losslessly") {
  const auto d = ra::data::GenCircles(300, 0.1, 4);
  const auto z = CirclesErrors(d);
  SgbtParams p;
  p.n_trees = 40;
  p.seed = 17;
  const auto a = ra::sgbt::FitSgbt(d.features, z, p);
  const auto b = ra::sgbt::FitSgbt(d.features, z, p);
  CHECK(a == b);
  CHECK(a.to_json() == b.to_json());
  const auto back = ra::sgbt::SgbtModel::FromJson(a.to_json());
  CHECK(back == a);
  CHECK(back.predict_proba(d.features) == a.predict_proba(d.features));
  p.seed = 18;
  CHECK_FALSE(ra::sgbt::FitSgbt(d.features, z, p) == a);
}

TEST_CASE("full-sample boosting never increases training loss") {
  const auto d = ra::data::GenMoons(400, 0.3, 2);
  std::vector<bool> z(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) z[i] = d.labels[i] == 1;
  for (std::size_t depth : {1, 3, 5}) {
    SgbtParams p;
    p.n_trees = 100;
    p.max_depth = depth;
    p.sample_rate = 1.0;
    ra::sgbt::FitTrace trace;
    ra::sgbt::FitSgbt(d.features, z, p, &trace);
    REQUIRE(trace.train_log_loss.size() == 101u);
    for (std::size_t r = 1; r < trace.train_log_loss.size(); ++r) {
      CHECK(trace.train_log_loss[r] <= trace.train_log_loss[r - 1]);
    }
  }
}

TEST_CASE("raw-score log-loss agrees with the probability form and never overflows") {
  const std::vector<bool> z{true, false, true, false};
  const std::vector<double> raw{0.3, -1.2, 2.5, 0.0};
  std::vector<double> p(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) p[i] = ra::sgbt::Sigmoid(raw[i]);
  CHECK(ra::sgbt::RawLogLoss(raw, z) == doctest::Approx(ra::sgbt::LogLoss(p, z)).epsilon(1e-12));
  const std::vector<double> extreme{800.0, -800.0};
  CHECK(ra::sgbt::RawLogLoss(extreme, {true, false}) == 0.0);
  CHECK(ra::sgbt::RawLogLoss(extreme, {false, true}) == doctest::Approx(800.0));
}

TEST_CASE("subsample size is the ceiling of rate times n") {
  const auto d = ra::data::GenCircles(98, 0.1, 2);
  const auto z = CirclesErrors(d);
  for (double rate : {0.25, 0.5, 0.33, 1.0}) {
    SgbtParams p;
    p.n_trees = 3;
    p.sample_rate = rate;
    ra::sgbt::FitTrace trace;
    ra::sgbt::FitSgbt(d.features, z, p, &trace);
    for (auto s : trace.subsample_sizes) CHECK(s == static_cast<std::size_t>(std::ceil(rate * 98 - 1e-9)));
  }
}

TEST_CASE("monotone feature transforms leave predictions unchanged") {
  const auto d = ra::data::GenCircles(300, 0.1, 6);
  const auto z = CirclesErrors(d);
  SgbtParams p;
  p.n_trees = 60;
  const auto m = ra::sgbt::FitSgbt(d.features, z, p);
  ra::Matrix t = d.features;
  for (std::size_t i = 0; i < t.rows(); ++i) t(i, 0) = std::exp(3.0 * t(i, 0)) + 2.0;
  const auto mt = ra::sgbt::FitSgbt(t, z, p);
  CHECK(m.predict_proba(d.features) == mt.predict_proba(t));
}

TEST_CASE("parameter and input validation") {
  const auto d = ra::data::GenCircles(20, 0.1, 6);
  const auto z = CirclesErrors(d);
  SgbtParams p;
  p.sample_rate = 0.0;
  CHECK_THROWS_AS(ra::sgbt::FitSgbt(d.features, z, p), ra::Error);
  p = {};
  p.learning_rate = 1.5;
  CHECK_THROWS_AS(p.validate(), ra::Error);
  p = {};
  p.max_depth = 0;
  CHECK_THROWS_AS(p.validate(), ra::Error);
  p = {};
  const std::vector<bool> shorter(3);
  CHECK_THROWS_AS(ra::sgbt::FitSgbt(d.features, shorter, p), ra::Error);
  ra::Matrix bad = d.features;
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(ra::sgbt::FitSgbt(bad, z, p), ra::Error);
  const auto m = ra::sgbt::FitSgbt(d.features, z, SgbtParams{5, 2, 0.1, 0.5, 1, 0});
  CHECK_THROWS_AS(m.predict_proba(ra::Matrix(2, 3)), ra::Error);
}
