// Exercises the shared library strictly through its C header.
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "riskadvisor/riskadvisor.h"
#include "test_util.hpp"

using nlohmann::json;

namespace {

std::string Take(char* s) {
  REQUIRE(s != nullptr);
  std::string out(s);
  ra_string_free(s);
  return out;
}

ra_dataset* Circles(size_t n, uint64_t seed) {
  ra_dataset* d = nullptr;
  REQUIRE(ra_dataset_gen_circles(n, 0.08, seed, &d) == RA_OK);
  return d;
}

ra_bbox* Logistic(const ra_dataset* d) {
  ra_bbox* m = nullptr;
  REQUIRE(ra_bbox_train(d, R"({"kind":"logistic","epochs":100})", &m) == RA_OK);
  return m;
}

ra_advisor* Advisor(const ra_dataset* d, const ra_bbox* m, const char* extra = "") {
  ra_advisor* a = nullptr;
  const std::string params = std::string(R"({"n_trees":15,"max_depth":3,"members":3)") + extra + "}";
  REQUIRE(ra_advisor_fit(d, m, params.c_str(), &a) == RA_OK);
  return a;
}

}  // namespace

TEST_CASE("capi version and error reporting") {
  CHECK(std::string(ra_version()) == "1.0.0");
  CHECK(ra_dataset_gen_circles(3, 0.1, 1, nullptr) == RA_ERR_CONFIG);
  CHECK(std::string(ra_last_error()).find("out") != std::string::npos);
  ra_dataset* d = nullptr;
  CHECK(ra_dataset_gen_circles(3, 0.1, 1, &d) == RA_ERR_CONFIG);
  CHECK(d == nullptr);
  CHECK(std::strlen(ra_last_error()) > 0);
  CHECK(ra_dataset_load_csv("/nonexistent/x.csv", "label", nullptr, &d) == RA_ERR_IO);
  ra_dataset_free(nullptr);
  ra_bbox_free(nullptr);
  ra_advisor_free(nullptr);
  ra_report_free(nullptr);
  ra_trust_free(nullptr);
  ra_string_free(nullptr);
}

TEST_CASE("capi dataset round trip") {
  const double x[] = {0, 1, 2, 3, 4, 5, 6, 7};
  const int y[] = {0, 1, 0, 1};
  const unsigned char ood[] = {0, 0, 1, 0};
  ra_dataset* d = nullptr;
  REQUIRE(ra_dataset_from_arrays(x, 4, 2, y, 2, ood, &d) == RA_OK);
  CHECK(ra_dataset_rows(d) == 4u);
  CHECK(ra_dataset_cols(d) == 2u);
  CHECK(ra_dataset_class_count(d) == 2);
  CHECK(ra_dataset_has_ood(d) == 1);
  testutil::TempDir dir;
  const auto path = dir.file("d.csv");
  REQUIRE(ra_dataset_save_csv(d, path.c_str()) == RA_OK);
  ra_dataset* back = nullptr;
  REQUIRE(ra_dataset_load_csv(path.c_str(), "label", "is_ood", &back) == RA_OK);
  std::vector<double> fx(8);
  std::vector<int> fy(4);
  std::vector<unsigned char> fo(4);
  REQUIRE(ra_dataset_features(back, fx.data()) == RA_OK);
  REQUIRE(ra_dataset_labels(back, fy.data()) == RA_OK);
  REQUIRE(ra_dataset_ood(back, fo.data()) == RA_OK);
  CHECK(fx == std::vector<double>(x, x + 8));
  CHECK(fy == std::vector<int>(y, y + 4));
  CHECK(fo == std::vector<unsigned char>(ood, ood + 4));
  const int bad[] = {0, 3, 0, 1};
  ra_dataset* e = nullptr;
  CHECK(ra_dataset_from_arrays(x, 4, 2, bad, 2, nullptr, &e) == RA_ERR_DATA);
  ra_dataset_free(d);
  ra_dataset_free(back);
}

TEST_CASE("capi split standardize concat") {
  ra_dataset* d = Circles(100, 3);
  ra_dataset *tr = nullptr, *te = nullptr;
  REQUIRE(ra_dataset_split(d, 0.7, 1, 4, &tr, &te) == RA_OK);
  CHECK(ra_dataset_rows(tr) == 70u);
  CHECK(ra_dataset_rows(te) == 30u);
  ra_dataset* others[] = {te};
  REQUIRE(ra_dataset_standardize(tr, others, 1) == RA_OK);
  std::vector<double> f(140);
  ra_dataset_features(tr, f.data());
  double mean = 0;
  for (size_t i = 0; i < 70; ++i) mean += f[2 * i];
  CHECK(std::abs(mean / 70) < 1e-12);
  ra_dataset* c = nullptr;
  REQUIRE(ra_dataset_concat(tr, te, &c) == RA_OK);
  CHECK(ra_dataset_rows(c) == 100u);
  CHECK(ra_dataset_split(d, 1.2, 1, 4, &tr, &te) == RA_ERR_CONFIG);
  ra_dataset_free(c);
  ra_dataset_free(tr);
  ra_dataset_free(te);
  ra_dataset_free(d);
}

TEST_CASE("capi black box and advisor lifecycle") {
  ra_dataset* d = Circles(200, 5);
  ra_bbox* m = Logistic(d);
  CHECK(ra_bbox_class_count(m) == 2);
  CHECK(ra_bbox_has_probabilities(m) == 1);
  std::vector<int> labels(200);
  std::vector<double> proba(400);
  REQUIRE(ra_bbox_predict(m, d, labels.data(), proba.data()) == RA_OK);
  std::vector<double> mcp(200);
  REQUIRE(ra_mcp_confidence(proba.data(), 200, 2, mcp.data()) == RA_OK);
  for (size_t i = 0; i < 200; ++i) CHECK(mcp[i] == std::max(proba[2 * i], proba[2 * i + 1]));

  std::vector<int> truth(200);
  ra_dataset_labels(d, truth.data());
  std::vector<unsigned char> z(200);
  double rate = -1;
  REQUIRE(ra_error_indicator(truth.data(), labels.data(), 200, z.data(), &rate) == RA_OK);
  CHECK(rate > 0.2);

  ra_advisor* a = Advisor(d, m);
  CHECK(ra_advisor_members(a) == 3u);
  ra_report* r = nullptr;
  REQUIRE(ra_advisor_decompose(a, d, &r) == RA_OK);
  CHECK(ra_report_rows(r) == 200u);
  CHECK(ra_report_members(r) == 3u);
  std::vector<double> total(200), alea(200), epi(200);
  REQUIRE(ra_report_field(r, "total", total.data()) == RA_OK);
  REQUIRE(ra_report_field(r, "aleatoric", alea.data()) == RA_OK);
  REQUIRE(ra_report_field(r, "epistemic", epi.data()) == RA_OK);
  for (size_t i = 0; i < 200; ++i) CHECK(std::abs(total[i] - alea[i] - epi[i]) < 1e-9);
  CHECK(ra_report_field(r, "variance", total.data()) == RA_ERR_CONFIG);

  testutil::TempDir dir;
  const auto bp = dir.file("b.json"), ap = dir.file("a.json"), rp = dir.file("r.csv");
  REQUIRE(ra_bbox_save(m, bp.c_str()) == RA_OK);
  REQUIRE(ra_advisor_save(a, ap.c_str()) == RA_OK);
  REQUIRE(ra_report_save_csv(r, rp.c_str(), 1) == RA_OK);
  ra_bbox* m2 = nullptr;
  ra_advisor* a2 = nullptr;
  ra_report* r2 = nullptr;
  REQUIRE(ra_bbox_load(bp.c_str(), &m2) == RA_OK);
  REQUIRE(ra_advisor_load(ap.c_str(), &a2) == RA_OK);
  REQUIRE(ra_report_load_csv(rp.c_str(), &r2) == RA_OK);
  std::vector<double> mp1(600), mp2(600);
  ra_report_member_probs(r, mp1.data());
  ra_report_member_probs(r2, mp2.data());
  CHECK(mp1 == mp2);

  REQUIRE(ra_advisor_set_weights(a2, 1.0, 0.0, 0.0) == RA_OK);
  ra_report* r3 = nullptr;
  REQUIRE(ra_advisor_decompose(a2, d, &r3) == RA_OK);
  std::vector<double> risk(200), ep(200);
  ra_report_field(r3, "risk_score", risk.data());
  ra_report_field(r3, "error_prob", ep.data());
  CHECK(risk == ep);

  ra_trust* t = nullptr;
  REQUIRE(ra_trust_fit(d, 0.0625, 10, &t) == RA_OK);
  std::vector<double> ts(200);
  REQUIRE(ra_trust_score(t, d, labels.data(), ts.data()) == RA_OK);
  char* out = nullptr;
  REQUIRE(ra_evaluate(d, m, a, t, "failure", 0.01, &out) == RA_OK);
  const auto j = json::parse(Take(out));
  CHECK(j["auroc"].contains("trust_score"));
  CHECK(ra_evaluate(d, m, a, t, "calibration", 0.01, &out) == RA_ERR_CONFIG);
  REQUIRE(ra_evaluate(d, m, a, nullptr, "abstention", 0.1, &out) == RA_OK);
  CHECK(json::parse(Take(out))["curves"]["rejection_fractions"].size() == 11u);

  ra_trust_free(t);
  ra_report_free(r);
  ra_report_free(r2);
  ra_report_free(r3);
  ra_advisor_free(a);
  ra_advisor_free(a2);
  ra_bbox_free(m);
  ra_bbox_free(m2);
  ra_dataset_free(d);
}

TEST_CASE("capi parameter documents are strict") {
  ra_dataset* d = Circles(60, 5);
  ra_bbox* m = nullptr;
  CHECK(ra_bbox_train(d, R"({"kind":"logistic","hidden":[3]})", &m) == RA_ERR_CONFIG);
  CHECK(ra_bbox_train(d, R"({"kind":"forest"})", &m) == RA_ERR_CONFIG);
  CHECK(ra_bbox_train(d, R"({"epochs":-3})", &m) == RA_ERR_CONFIG);
  CHECK(ra_bbox_train(d, "{bad", &m) == RA_ERR_CONFIG);
  m = Logistic(d);
  ra_advisor* a = nullptr;
  CHECK(ra_advisor_fit(d, m, R"({"members":0})", &a) == RA_ERR_CONFIG);
  CHECK(ra_advisor_fit(d, m, R"({"trees":10})", &a) == RA_ERR_CONFIG);
  CHECK(std::string(ra_last_error()).find("trees") != std::string::npos);
  CHECK(ra_advisor_fit(d, m, R"({"weights":{"model":1,"noise":2}})", &a) == RA_ERR_CONFIG);
  CHECK(a == nullptr);
  ra_bbox_free(m);
  ra_dataset_free(d);
}

TEST_CASE("capi decomposition and metrics on raw arrays") {
  const double probs[] = {0.2, 0.4, 0.5, 0.5};
  ra_report* r = nullptr;
  REQUIRE(ra_decompose_probabilities(probs, 2, 2, nullptr, &r) == RA_OK);
  double total[2], epi[2], risk[2];
  ra_report_field(r, "total", total);
  ra_report_field(r, "epistemic", epi);
  ra_report_field(r, "risk_score", risk);
  CHECK(std::abs(total[0] - 0.881291) < 1e-6);
  CHECK(std::abs(epi[0] - 0.034852) < 1e-6);
  CHECK(risk[1] == doctest::Approx(1.5));
  ra_report_free(r);

  const double s[] = {0.3, 0.7, 0.7, 0.1};
  const unsigned char pos[] = {1, 1, 0, 0};
  double v = 0;
  REQUIRE(ra_auroc(s, pos, 4, RA_HIGHER_IS_POSITIVE, &v) == RA_OK);
  CHECK(v == 0.625);
  REQUIRE(ra_auroc(s, pos, 4, RA_LOWER_IS_POSITIVE, &v) == RA_OK);
  CHECK(v == 0.375);
  const double ap_s[] = {0.9, 0.8, 0.7};
  const unsigned char ap_p[] = {1, 0, 1};
  REQUIRE(ra_average_precision(ap_s, ap_p, 3, RA_HIGHER_IS_POSITIVE, &v) == RA_OK);
  CHECK(v == doctest::Approx(5.0 / 6.0));
  const double risk4[] = {0.9, 0.1, 0.2, 0.8};
  const unsigned char err4[] = {1, 0, 0, 1};
  REQUIRE(ra_prr(risk4, err4, 4, RA_HIGHER_IS_POSITIVE, &v) == RA_OK);
  CHECK(v == 1.0);
  char* out = nullptr;
  REQUIRE(ra_ar_curve(risk4, err4, 4, 0.5, RA_HIGHER_IS_POSITIVE, &out) == RA_OK);
  const auto j = json::parse(Take(out));
  CHECK(j["accuracies"] == json::array({0.5, 1.0, 1.0}));
  const unsigned char none[] = {0, 0, 0, 0};
  CHECK(ra_auroc(s, none, 4, RA_HIGHER_IS_POSITIVE, &v) == RA_ERR_DATA);
  CHECK(ra_auroc(s, pos, 4, static_cast<ra_orientation>(7), &v) == RA_ERR_CONFIG);
}

TEST_CASE("capi orchestration") {
  testutil::TempDir dir;
  char* defaults = nullptr;
  REQUIRE(ra_config_defaults(&defaults) == RA_OK);
  auto cfg = json::parse(Take(defaults));
  cfg["dataset"]["n"] = 200;
  cfg["advisor"]["n_trees"] = 10;
  cfg["advisor"]["members"] = 2;
  char* metrics = nullptr;
  const auto out_dir = dir.file("run");
  REQUIRE(ra_run_scenario(cfg.dump().c_str(), out_dir.c_str(), 2, &metrics) == RA_OK);
  CHECK(json::parse(Take(metrics))["repeats"] == 2);
  CHECK(ra_run_scenario(R"({"nope":1})", out_dir.c_str(), 0, nullptr) == RA_ERR_CONFIG);

  ra_dataset *tr = nullptr, *te = nullptr, *pool = nullptr, *pool_train = nullptr;
  REQUIRE(ra_dataset_gen_gmm_shift(150, 80, 2, nullptr, &tr, &te) == RA_OK);
  REQUIRE(ra_dataset_gen_gmm_shift(4, 60, 3, R"({"label_b":1})", &pool_train, &pool) == RA_OK);
  char *curve = nullptr, *csv = nullptr;
  REQUIRE(ra_sample_retrain(tr, pool, te,
                            R"({"strategy":"random","rounds":2,"seed":3,"bbox":{"kind":"logistic","epochs":50},
                                "advisor":{"n_trees":5,"members":2}})",
                            &curve, &csv) == RA_OK);
  const auto cj = json::parse(Take(curve));
  CHECK(cj["points"].size() == 3u);
  CHECK(Take(csv).rfind("fraction,value", 0) == 0);
  CHECK(ra_sample_retrain(tr, pool, te, R"({"strategy":"greedy"})", nullptr, nullptr) == RA_ERR_CONFIG);

  ra_bbox* m = Logistic(tr);
  ra_advisor* a = Advisor(tr, m);
  char *gcsv = nullptr, *gsvg = nullptr;
  const double bounds[] = {-1, 1, -1, 1};
  REQUIRE(ra_emit_grid("epistemic", m, a, bounds, nullptr, 3, &gcsv, &gsvg) == RA_OK);
  const auto text = Take(gcsv);
  CHECK(std::count(text.begin(), text.end(), '\n') == 10);
  CHECK(Take(gsvg).find("<svg") == 0);
  REQUIRE(ra_emit_grid("bbox_proba", m, nullptr, nullptr, tr, 2, &gcsv, nullptr) == RA_OK);
  ra_string_free(gcsv);
  CHECK(ra_emit_grid("epistemic", m, a, nullptr, nullptr, 3, &gcsv, nullptr) == RA_ERR_CONFIG);

  const auto wp = dir.file("w.txt");
  REQUIRE(ra_write_file(wp.c_str(), "hello") == RA_OK);
  CHECK(testutil::ReadText(wp) == "hello");

  ra_advisor_free(a);
  ra_bbox_free(m);
  for (auto* d : {tr, te, pool, pool_train}) ra_dataset_free(d);
}
