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

// riskadvisor command-line tool. Talks to the library only through the C API.
//
// On success each subcommand prints one JSON object to stdout listing the
// options it ran with (defaults included) and the files it wrote. On failure
// it prints {"error": {...}} to stderr and exits 2 (config), 3 (data or I/O)
// or 4 (numeric).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "riskadvisor/riskadvisor.h"

using nlohmann::json;

namespace {

struct CliFailure {
  int status;
  std::string message;
};

void Check(ra_status s) {
  if (s != RA_OK) throw CliFailure{static_cast<int>(s), ra_last_error()};
}

[[noreturn]] void ConfigFail(const std::string& msg) { throw CliFailure{RA_ERR_CONFIG, msg}; }

int ExitCodeFor(int status) {
  switch (status) {
    case RA_ERR_CONFIG:
      return 2;
    case RA_ERR_DATA:
    case RA_ERR_IO:
      return 3;
    case RA_ERR_NUMERIC:
      return 4;
    default:
      return 1;
  }
}

const char* KindName(int status) {
  switch (status) {
    case RA_ERR_CONFIG:
      return "config";
    case RA_ERR_DATA:
      return "data";
    case RA_ERR_NUMERIC:
      return "numeric";
    case RA_ERR_IO:
      return "io";
    default:
      return "internal";
  }
}

// RAII wrappers over the C handles.
template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() {
    if (p) Free(p);
  }
  T** out() { return &p; }
  T* get() const { return p; }
};
using Dataset = Handle<ra_dataset, ra_dataset_free>;
using Bbox = Handle<ra_bbox, ra_bbox_free>;
using Advisor = Handle<ra_advisor, ra_advisor_free>;
using Report = Handle<ra_report, ra_report_free>;
using Trust = Handle<ra_trust, ra_trust_free>;

struct OwnedString {
  char* p = nullptr;
  OwnedString() = default;
  OwnedString(const OwnedString&) = delete;
  OwnedString& operator=(const OwnedString&) = delete;
  ~OwnedString() { ra_string_free(p); }
  char** out() { return &p; }
  std::string str() const { return p ? p : ""; }
};

std::string ReadText(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliFailure{RA_ERR_IO, "cannot read '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void Write(const std::string& path, const std::string& contents, json& outputs) {
  Check(ra_write_file(path.c_str(), contents.c_str()));
  outputs.push_back(path);
}

std::vector<double> ParseList(const std::string& text, std::size_t expected, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      ConfigFail(std::string("--") + flag + " expects comma-separated numbers, got '" + text + "'");
    }
  }
  if (expected && out.size() != expected) {
    ConfigFail(std::string("--") + flag + " expects " + std::to_string(expected) + " numbers");
  }
  return out;
}

json OptionsOf(const CLI::App& app) {
  json opts = json::object();
  for (const auto* opt : app.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const auto& name = opt->get_lnames().front();
    if (name == "help") continue;
    if (opt->get_expected_min() == 0) {
      opts[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      const auto& r = opt->results();
      opts[name] = r.size() == 1 ? json(r.front()) : json(r);
    } else {
      opts[name] = opt->get_default_str();
    }
  }
  return opts;
}

// ---- shared option groups

struct BboxFlags {
  std::string kind = "logistic";
  double l2 = 1e-4;
  std::size_t epochs = 0;  // 0 = kind default
  double lr = 0.0;         // 0 = kind default
  std::string hidden = "32,16";
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;

  void add(CLI::App* app) {
    app->add_option("--kind", kind, "logistic or mlp")->check(CLI::IsMember({"logistic", "mlp"}));
    app->add_option("--l2", l2, "logistic L2 penalty");
    app->add_option("--epochs", epochs, "training epochs (0 = 500 logistic, 200 mlp)");
    app->add_option("--lr", lr, "learning rate (0 = 0.1 logistic, 0.05 mlp)");
    app->add_option("--hidden", hidden, "mlp hidden layer widths, comma-separated");
    app->add_option("--batch-size", batch_size, "mlp mini-batch size");
    app->add_option("--bbox-seed", seed, "black-box training seed");
  }

  json spec() const {
    json j{{"kind", kind}, {"seed", seed}};
    if (epochs) j["epochs"] = epochs;
    if (lr > 0) j["lr"] = lr;
    if (kind == "logistic") {
      j["l2"] = l2;
    } else {
      std::vector<std::size_t> h;
      for (double v : ParseList(hidden, 0, "hidden")) {
        if (v < 1 || v != static_cast<double>(static_cast<std::size_t>(v))) {
          ConfigFail("--hidden widths must be positive integers");
        }
        h.push_back(static_cast<std::size_t>(v));
      }
      j["hidden"] = h;
      j["batch_size"] = batch_size;
    }
    return j;
  }
};

struct AdvisorFlags {
  std::size_t n_trees = 1000;
  std::size_t max_depth = 4;
  double learning_rate = 0.1;
  double sample_rate = 0.5;
  std::size_t min_samples_leaf = 5;
  std::size_t members = 10;
  std::uint64_t seed = 0;
  double w_model = 1.0;
  double w_epistemic = 1.0;
  double w_aleatoric = 1.0;

  void add(CLI::App* app) {
    app->add_option("--n-trees", n_trees, "boosting rounds per member");
    app->add_option("--max-depth", max_depth, "tree depth");
    app->add_option("--learning-rate", learning_rate, "shrinkage");
    app->add_option("--sample-rate", sample_rate, "per-round subsample fraction");
    app->add_option("--min-samples-leaf", min_samples_leaf, "minimum rows per leaf");
    app->add_option("--members", members, "ensemble size M");
    app->add_option("--advisor-seed", seed, "seed of member 0 (member m uses seed + m)");
    app->add_option("--w-model", w_model, "risk weight of the error probability");
    app->add_option("--w-epistemic", w_epistemic, "risk weight of epistemic uncertainty");
    app->add_option("--w-aleatoric", w_aleatoric, "risk weight of aleatoric uncertainty");
  }

  json params() const {
    return json{{"n_trees", n_trees},
                {"max_depth", max_depth},
                {"learning_rate", learning_rate},
                {"sample_rate", sample_rate},
                {"min_samples_leaf", min_samples_leaf},
                {"members", members},
                {"seed", seed},
                {"weights", {{"model", w_model}, {"epistemic", w_epistemic}, {"aleatoric", w_aleatoric}}}};
  }
};

// Files written by this tool carry an is_ood column; it is never a feature.
bool HasColumn(const std::string& path, const std::string& name) {
  std::ifstream in(path);
  std::string header, cell;
  if (!std::getline(in, header)) return false;
  if (!header.empty() && header.back() == '\r') header.pop_back();
  std::istringstream cells(header);
  while (std::getline(cells, cell, ',')) {
    if (cell == name) return true;
  }
  return false;
}

void LoadData(const std::string& path, const std::string& label, std::string ood, Dataset& d) {
  if (ood.empty() && HasColumn(path, "is_ood")) ood = "is_ood";
  Check(ra_dataset_load_csv(path.c_str(), label.c_str(), ood.empty() ? nullptr : ood.c_str(), d.out()));
}

// ---- evaluation subcommands share their inputs

struct EvalFlags {
  std::string data;
  std::string label = "label";
  std::string ood;
  std::string bbox;
  std::string advisor;
  std::string train;
  double trust_alpha = 0.0625;
  std::size_t trust_k = 10;
  std::string out;

  void add(CLI::App* app, bool needs_ood) {
    app->add_option("--data", data, "evaluation CSV")->required();
    app->add_option("--label-column", label, "label column name");
    if (needs_ood) {
      ood = "is_ood";
      app->add_option("--ood-column", ood, "0/1 out-of-distribution column");
    }
    app->add_option("--bbox", bbox, "black-box model JSON")->required();
    app->add_option("--advisor", advisor, "advisor model JSON")->required();
    app->add_option("--train", train, "training CSV; enables the Trust Score baseline");
    app->add_option("--trust-alpha", trust_alpha, "Trust Score density filter fraction");
    app->add_option("--trust-k", trust_k, "Trust Score density neighbour count");
    app->add_option("--out", out, "metrics JSON path (stdout only when absent)");
  }
};

json RunEval(const EvalFlags& f, const char* what, double grid_step, json& outputs) {
  Dataset data, train;
  Bbox bbox;
  Advisor adv;
  Trust trust;
  LoadData(f.data, f.label, f.ood, data);
  Check(ra_bbox_load(f.bbox.c_str(), bbox.out()));
  Check(ra_advisor_load(f.advisor.c_str(), adv.out()));
  if (!f.train.empty()) {
    LoadData(f.train, f.label, "", train);
    Check(ra_trust_fit(train.get(), f.trust_alpha, f.trust_k, trust.out()));
  }
  OwnedString result;
  Check(ra_evaluate(data.get(), bbox.get(), adv.get(), trust.get(), what, grid_step, result.out()));
  auto metrics = json::parse(result.str());
  if (!f.out.empty()) Write(f.out, metrics.dump(2) + "\n", outputs);
  return metrics;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Risk advisor: error, aleatoric and epistemic risk scores for black-box classifiers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ra_version()));
  app.option_defaults()->always_capture_default();

  json outputs = json::array();
  json extra = json::object();
  std::function<void()> action;

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic dataset");
  std::string g_kind = "circles", g_out, g_out_train, g_out_test, g_a0 = "-2,0", g_a1 = "2,0", g_b = "4,-4";
  std::size_t g_n = 2000, g_n_train = 1000, g_n_test = 1000;
  double g_noise = 0.08, g_sd = 1.0, g_fraction = 0.7;
  int g_label_b = -1;
  std::uint64_t g_seed = 0;
  gen->add_option("--kind", g_kind, "circles, moons or gmm-shift")
      ->check(CLI::IsMember({"circles", "moons", "gmm-shift", "gmm_shift"}));
  gen->add_option("--n", g_n, "points (circles, moons)");
  gen->add_option("--noise-sd", g_noise, "Gaussian noise sd (circles, moons)");
  gen->add_option("--n-train", g_n_train, "training points (gmm-shift)");
  gen->add_option("--n-test", g_n_test, "test points (gmm-shift)");
  gen->add_option("--mean-a0", g_a0, "mean of class-0 cluster x,y (gmm-shift)");
  gen->add_option("--mean-a1", g_a1, "mean of class-1 cluster x,y (gmm-shift)");
  gen->add_option("--mean-b", g_b, "mean of the shifted test-only cluster x,y (gmm-shift)");
  gen->add_option("--sd", g_sd, "cluster sd (gmm-shift)");
  gen->add_option("--label-b", g_label_b, "label of the shifted cluster; -1 = nearer mean (gmm-shift)");
  gen->add_option("--seed", g_seed, "generator seed");
  gen->add_option("--out", g_out, "output CSV (circles, moons)");
  gen->add_option("--out-train", g_out_train, "training CSV; circles and moons are split stratified");
  gen->add_option("--out-test", g_out_test, "test CSV");
  gen->add_option("--train-fraction", g_fraction, "train share of the split (circles, moons)");
  gen->callback([&] {
    action = [&] {
      if (g_kind == "gmm-shift" || g_kind == "gmm_shift") {
        if (g_out_train.empty() || g_out_test.empty()) ConfigFail("gmm-shift needs --out-train and --out-test");
        const json params{{"mean_a0", ParseList(g_a0, 2, "mean-a0")},
                          {"mean_a1", ParseList(g_a1, 2, "mean-a1")},
                          {"mean_b", ParseList(g_b, 2, "mean-b")},
                          {"sd", g_sd},
                          {"label_b", g_label_b}};
        Dataset tr, te;
        Check(ra_dataset_gen_gmm_shift(g_n_train, g_n_test, g_seed, params.dump().c_str(), tr.out(), te.out()));
        Check(ra_dataset_save_csv(tr.get(), g_out_train.c_str()));
        outputs.push_back(g_out_train);
        Check(ra_dataset_save_csv(te.get(), g_out_test.c_str()));
        outputs.push_back(g_out_test);
      } else {
        const bool split = !g_out_train.empty() || !g_out_test.empty();
        if (split && (g_out_train.empty() || g_out_test.empty())) {
          ConfigFail("--out-train and --out-test go together");
        }
        if (g_out.empty() && !split) ConfigFail(g_kind + " needs --out or --out-train and --out-test");
        Dataset d;
        Check(g_kind == "circles" ? ra_dataset_gen_circles(g_n, g_noise, g_seed, d.out())
                                  : ra_dataset_gen_moons(g_n, g_noise, g_seed, d.out()));
        if (!g_out.empty()) {
          Check(ra_dataset_save_csv(d.get(), g_out.c_str()));
          outputs.push_back(g_out);
        }
        if (split) {
          Dataset tr, te;
          Check(ra_dataset_split(d.get(), g_fraction, 1, g_seed + 1, tr.out(), te.out()));
          Check(ra_dataset_save_csv(tr.get(), g_out_train.c_str()));
          outputs.push_back(g_out_train);
          Check(ra_dataset_save_csv(te.get(), g_out_test.c_str()));
          outputs.push_back(g_out_test);
        }
      }
    };
  });

  // train-bbox
  auto* tb = app.add_subcommand("train-bbox", "train a logistic or MLP black-box classifier");
  std::string tb_train, tb_label = "label", tb_out;
  BboxFlags tb_flags;
  tb->add_option("--train", tb_train, "training CSV")->required();
  tb->add_option("--label-column", tb_label, "label column name");
  tb_flags.add(tb);
  tb->add_option("--out", tb_out, "model JSON")->required();
  tb->callback([&] {
    action = [&] {
      Dataset d;
      Bbox m;
      LoadData(tb_train, tb_label, "", d);
      Check(ra_bbox_train(d.get(), tb_flags.spec().dump().c_str(), m.out()));
      Check(ra_bbox_save(m.get(), tb_out.c_str()));
      outputs.push_back(tb_out);
    };
  });

  // train-advisor
  auto* ta = app.add_subcommand("train-advisor", "fit the E-SGBT error predictor on a black box's training errors");
  std::string ta_train, ta_label = "label", ta_bbox, ta_out, ta_grid_out;
  std::string ta_grid_depth = "3,4,5,6", ta_grid_rate = "0.25,0.5,0.75", ta_grid_trees = "100,1000";
  std::size_t ta_folds = 5;
  bool ta_grid = false;
  AdvisorFlags ta_flags;
  ta->add_option("--train", ta_train, "training CSV")->required();
  ta->add_option("--label-column", ta_label, "label column name");
  ta->add_option("--bbox", ta_bbox, "black-box model JSON")->required();
  ta_flags.add(ta);
  ta->add_flag("--grid", ta_grid, "choose depth, sample rate and tree count by k-fold CV");
  ta->add_option("--grid-max-depth", ta_grid_depth, "depth candidates");
  ta->add_option("--grid-sample-rate", ta_grid_rate, "sample-rate candidates");
  ta->add_option("--grid-n-trees", ta_grid_trees, "tree-count candidates");
  ta->add_option("--grid-folds", ta_folds, "cross-validation folds");
  ta->add_option("--grid-out", ta_grid_out, "write the grid-search table here");
  ta->add_option("--out", ta_out, "advisor JSON")->required();
  ta->callback([&] {
    action = [&] {
      Dataset d;
      Bbox m;
      Advisor a;
      LoadData(ta_train, ta_label, "", d);
      Check(ra_bbox_load(ta_bbox.c_str(), m.out()));
      json params = ta_flags.params();
      if (ta_grid) {
        auto ints = [](const std::string& s, const char* flag) {
          std::vector<std::size_t> v;
          for (double x : ParseList(s, 0, flag)) {
            if (x < 1 || x != static_cast<double>(static_cast<std::size_t>(x))) {
              ConfigFail(std::string("--") + flag + " expects positive integers");
            }
            v.push_back(static_cast<std::size_t>(x));
          }
          return v;
        };
        const json grid{{"max_depth", ints(ta_grid_depth, "grid-max-depth")},
                        {"sample_rate", ParseList(ta_grid_rate, 0, "grid-sample-rate")},
                        {"n_trees", ints(ta_grid_trees, "grid-n-trees")},
                        {"folds", ta_folds}};
        OwnedString result;
        Check(ra_advisor_grid_search(d.get(), m.get(), params.dump().c_str(), grid.dump().c_str(), result.out()));
        const auto gs = json::parse(result.str());
        for (const char* k : {"max_depth", "sample_rate", "n_trees"}) params[k] = gs["best"][k];
        extra["grid_search_best"] = gs["best"];
        if (!ta_grid_out.empty()) Write(ta_grid_out, gs.dump(2) + "\n", outputs);
      }
      Check(ra_advisor_fit(d.get(), m.get(), params.dump().c_str(), a.out()));
      Check(ra_advisor_save(a.get(), ta_out.c_str()));
      outputs.push_back(ta_out);
    };
  });

  // score
  auto* sc = app.add_subcommand("score", "write the per-point uncertainty report");
  std::string sc_data, sc_label = "label", sc_advisor, sc_out;
  bool sc_members = false;
  sc->add_option("--data", sc_data, "CSV to score")->required();
  sc->add_option("--label-column", sc_label, "label column name");
  sc->add_option("--advisor", sc_advisor, "advisor JSON")->required();
  sc->add_flag("--include-members", sc_members, "append member_k probability columns");
  sc->add_option("--out", sc_out, "report CSV")->required();
  sc->callback([&] {
    action = [&] {
      Dataset d;
      Advisor a;
      Report r;
      LoadData(sc_data, sc_label, "", d);
      Check(ra_advisor_load(sc_advisor.c_str(), a.out()));
      Check(ra_advisor_decompose(a.get(), d.get(), r.out()));
      Check(ra_report_save_csv(r.get(), sc_out.c_str(), sc_members ? 1 : 0));
      outputs.push_back(sc_out);
    };
  });

  // eval, ood-eval, abstain-eval
  auto* ev = app.add_subcommand("eval", "failure-prediction AUROC and AUPR of every score");
  EvalFlags ev_flags;
  ev_flags.add(ev, false);
  ev->callback([&] { action = [&] { extra["metrics"] = RunEval(ev_flags, "failure", 0.01, outputs); }; });

  auto* oe = app.add_subcommand("ood-eval", "OOD-detection AUROC of every score");
  EvalFlags oe_flags;
  oe_flags.add(oe, true);
  oe->callback([&] { action = [&] { extra["metrics"] = RunEval(oe_flags, "ood", 0.01, outputs); }; });

  auto* ae = app.add_subcommand("abstain-eval", "accuracy-rejection curves and PRR of every score");
  EvalFlags ae_flags;
  double ae_step = 0.01;
  std::string ae_curves;
  ae_flags.add(ae, false);
  ae->add_option("--grid-step", ae_step, "rejection-fraction step; must divide 1");
  ae->add_option("--curves-out", ae_curves, "write the curves as CSV (rejection_fraction plus one column per score)");
  ae->callback([&] {
    action = [&] {
      auto m = RunEval(ae_flags, "abstention", ae_step, outputs);
      if (!ae_curves.empty()) {
        const auto& c = m["curves"];
        std::vector<std::string> names;
        for (const auto& item : c.items()) {
          if (item.key() != "rejection_fractions") names.push_back(item.key());
        }
        std::ostringstream csv;
        csv << "rejection_fraction";
        for (const auto& n : names) csv << "," << n;
        csv << "\n";
        for (std::size_t i = 0; i < c["rejection_fractions"].size(); ++i) {
          csv << c["rejection_fractions"][i].dump();
          for (const auto& n : names) csv << "," << c[n][i].dump();
          csv << "\n";
        }
        Write(ae_curves, csv.str(), outputs);
      }
      extra["prr"] = m["prr"];
    };
  });

  // sample-retrain
  auto* sr = app.add_subcommand("sample-retrain", "grow the training set from a pool and track OOD accuracy");
  std::string sr_train, sr_pool, sr_test, sr_label = "label", sr_ood = "is_ood", sr_out_dir;
  std::vector<std::string> sr_strategies{"epistemic_desc", "confidence_asc", "trust_asc", "random"};
  double sr_k = 5.0, sr_alpha = 0.0625;
  std::size_t sr_rounds = 8, sr_trust_k = 10;
  std::uint64_t sr_seed = 0;
  bool sr_no_replace = false;
  BboxFlags sr_bbox;
  AdvisorFlags sr_adv;
  sr->add_option("--train", sr_train, "initial training CSV")->required();
  sr->add_option("--pool", sr_pool, "labelled pool CSV")->required();
  sr->add_option("--test", sr_test, "test CSV with the OOD column")->required();
  sr->add_option("--label-column", sr_label, "label column name");
  sr->add_option("--ood-column", sr_ood, "0/1 out-of-distribution column of the test CSV");
  sr->add_option("--strategy", sr_strategies, "epistemic_desc, confidence_asc, trust_asc, random (repeatable)");
  sr->add_option("--k-percent", sr_k, "pool percentage added per round");
  sr->add_option("--rounds", sr_rounds, "rounds");
  sr->add_flag("--without-replacement", sr_no_replace, "never pick a pool point twice");
  sr->add_option("--seed", sr_seed, "seed for the random strategy and per-round advisors");
  sr->add_option("--trust-alpha", sr_alpha, "Trust Score density filter fraction");
  sr->add_option("--trust-k", sr_trust_k, "Trust Score density neighbour count");
  sr_bbox.add(sr);
  sr_adv.add(sr);
  sr->add_option("--out-dir", sr_out_dir, "directory for retrain_<strategy>.csv and curves.json")->required();
  sr->callback([&] {
    action = [&] {
      Dataset tr, pool, te;
      LoadData(sr_train, sr_label, "", tr);
      LoadData(sr_pool, sr_label, "", pool);
      LoadData(sr_test, sr_label, sr_ood, te);
      json curves = json::object();
      for (const auto& s : sr_strategies) {
        const json req{{"strategy", s},
                       {"k_percent", sr_k},
                       {"rounds", sr_rounds},
                       {"with_replacement", !sr_no_replace},
                       {"seed", sr_seed},
                       {"bbox", sr_bbox.spec()},
                       {"advisor", sr_adv.params()},
                       {"trust", {{"alpha", sr_alpha}, {"k", sr_trust_k}}}};
        OwnedString cj, csv;
        Check(ra_sample_retrain(tr.get(), pool.get(), te.get(), req.dump().c_str(), cj.out(), csv.out()));
        const auto parsed = json::parse(cj.str());
        Write(sr_out_dir + "/retrain_" + parsed["strategy"].get<std::string>() + ".csv", csv.str(), outputs);
        curves[parsed["strategy"].get<std::string>()] = parsed["points"];
      }
      Write(sr_out_dir + "/curves.json", curves.dump(2) + "\n", outputs);
    };
  });

  // grid
  auto* gr = app.add_subcommand("grid", "evaluate a score on a 2-D lattice for contour plots");
  std::string gr_kind = "epistemic", gr_bbox, gr_advisor, gr_bounds, gr_data, gr_label = "label", gr_out, gr_svg;
  std::size_t gr_res = 50;
  gr->add_option("--kind", gr_kind, "bbox_proba, error_prob, aleatoric, epistemic or risk")
      ->check(CLI::IsMember({"bbox_proba", "error_prob", "aleatoric", "epistemic", "risk"}));
  gr->add_option("--bbox", gr_bbox, "black-box model JSON (bbox_proba)");
  gr->add_option("--advisor", gr_advisor, "advisor JSON (other kinds)");
  gr->add_option("--bounds", gr_bounds, "xmin,xmax,ymin,ymax");
  gr->add_option("--data", gr_data, "CSV whose padded bounding box sets the bounds when --bounds is absent");
  gr->add_option("--label-column", gr_label, "label column of --data");
  gr->add_option("--resolution", gr_res, "lattice points per axis");
  gr->add_option("--out", gr_out, "grid CSV (x,y,value)")->required();
  gr->add_option("--svg", gr_svg, "optional SVG heatmap");
  gr->callback([&] {
    action = [&] {
      Bbox m;
      Advisor a;
      Dataset d;
      if (!gr_bbox.empty()) Check(ra_bbox_load(gr_bbox.c_str(), m.out()));
      if (!gr_advisor.empty()) Check(ra_advisor_load(gr_advisor.c_str(), a.out()));
      std::vector<double> bounds;
      if (!gr_bounds.empty()) {
        bounds = ParseList(gr_bounds, 4, "bounds");
      } else if (!gr_data.empty()) {
        LoadData(gr_data, gr_label, "", d);
      } else {
        ConfigFail("grid needs --bounds or --data");
      }
      OwnedString csv, svg;
      Check(ra_emit_grid(gr_kind.c_str(), m.get(), a.get(), bounds.empty() ? nullptr : bounds.data(), d.get(),
                         gr_res, csv.out(), gr_svg.empty() ? nullptr : svg.out()));
      Write(gr_out, csv.str(), outputs);
      if (!gr_svg.empty()) Write(gr_svg, svg.str(), outputs);
    };
  });

  // run
  auto* rn = app.add_subcommand("run", "run a full experiment from a JSON config (or a manifest.json)");
  std::string rn_config, rn_out_dir;
  std::size_t rn_repeats = 0;
  bool rn_defaults = false;
  rn->add_option("--config", rn_config, "experiment config JSON");
  rn->add_option("--out-dir", rn_out_dir, "override the config's output_dir");
  rn->add_option("--repeats", rn_repeats, "override the config's repeat count (0 = keep)");
  rn->add_flag("--print-defaults", rn_defaults, "print the default config and exit");
  rn->callback([&] {
    action = [&] {
      if (rn_defaults) {
        OwnedString d;
        Check(ra_config_defaults(d.out()));
        extra["default_config"] = json::parse(d.str());
        return;
      }
      if (rn_config.empty()) ConfigFail("run needs --config");
      const auto text = ReadText(rn_config);
      OwnedString metrics;
      Check(ra_run_scenario(text.c_str(), rn_out_dir.empty() ? nullptr : rn_out_dir.c_str(), rn_repeats,
                            metrics.out()));
      extra["summary"] = json::parse(metrics.str())["summary"];
      std::string dir = rn_out_dir;
      if (dir.empty()) {
        const auto cfg = json::parse(text);
        const json& c = cfg.contains("config") && cfg.contains("tool_version") ? cfg["config"] : cfg;
        dir = c.value("output_dir", std::string("run"));
      }
      outputs.push_back(dir + "/metrics.json");
      outputs.push_back(dir + "/manifest.json");
    };
  });

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::Success& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      throw CliFailure{RA_ERR_CONFIG, e.what()};
    }
    if (action) action();
    const CLI::App* sub = app.get_subcommands().front();
    json summary{{"command", sub->get_name()}, {"options", OptionsOf(*sub)}, {"outputs", outputs},
                 {"tool_version", ra_version()}};
    summary.update(extra);
    std::cout << summary.dump(2) << std::endl;
    return 0;
  } catch (const CliFailure& f) {
    json err{{"error", {{"status", f.status}, {"kind", KindName(f.status)}, {"message", f.message}}}};
    std::cerr << err.dump() << std::endl;
    return ExitCodeFor(f.status);
  } catch (const std::exception& e) {
    json err{{"error", {{"status", RA_ERR_INTERNAL}, {"kind", "internal"}, {"message", e.what()}}}};
    std::cerr << err.dump() << std::endl;
    return 1;
  }
}
