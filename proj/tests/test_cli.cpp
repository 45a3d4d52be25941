#include <doctest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "vdc/bench.hpp"
#include "vdc/commands.hpp"
#include "vdc/copula.hpp"
#include "vdc/csv.hpp"
#include "vdc/errors.hpp"
#include "vdc/vine.hpp"

using namespace vdc;
using nlohmann::json;

namespace {

std::string scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

CommandOptions opts(const std::string& out_dir) {
  CommandOptions o;
  o.out_dir = out_dir;
  return o;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("ingest_csv: happy path, parse errors, headers") {
  std::string dir = scratch_dir("vdc_csv_test");
  write_file(dir + "/ok.csv", "1,2\n3,4\n5,6\n");
  DataMatrix m = ingest_csv(dir + "/ok.csv", false);
  CHECK(m.n == 3);
  CHECK(m.d == 2);
  CHECK(m.at(2, 1) == 6.0);

  write_file(dir + "/bad.csv", "1,2\nabc,4\n");
  try {
    ingest_csv(dir + "/bad.csv", false);
    CHECK(false);
  } catch (const DataError& e) {
    std::string msg = e.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("column 1") != std::string::npos);
  }

  write_file(dir + "/ragged.csv", "1,2\n3\n");
  CHECK_THROWS_AS(ingest_csv(dir + "/ragged.csv", false), DataError);

  write_file(dir + "/blank.csv", "1,\n");
  CHECK_THROWS_AS(ingest_csv(dir + "/blank.csv", false), DataError);

  write_file(dir + "/hdr.csv", "u,v\n0.5,0.25\n");
  DataMatrix h = ingest_csv(dir + "/hdr.csv", true);
  CHECK(h.n == 1);
  CHECK(h.at(0, 1) == 0.25);

  CHECK_THROWS_AS(ingest_csv(dir + "/missing.csv", false), DataError);
}

TEST_CASE("zoo-gen writes samples and is reproducible from its record") {
  std::string dir = scratch_dir("vdc_zoo_test");
  json cfg{{"spec", {{"family", "clayton"}, {"params", {3.0}}}},
           {"n", 20000},
           {"out", "clay.csv"}};
  RunRecord rec = cmd_zoo_gen(cfg, 42, opts(dir));
  CHECK(std::filesystem::exists(dir + "/clay.csv"));
  CHECK(rec.metrics.at("analytic_tau") == doctest::Approx(0.6));
  CHECK(std::abs(rec.metrics.at("sample_tau") - 0.6) < 0.02);

  std::ifstream f(dir + "/clay.csv");
  std::string header;
  std::getline(f, header);
  CHECK(header == "u,v");

  RunRecord redo = rerun_from_record(rec, opts(dir));
  CHECK(redo.metrics == rec.metrics);
}

TEST_CASE("fit / loglik / tc / sample / model-inspect round trip") {
  std::string dir = scratch_dir("vdc_fit_test");
  {
    DataMatrix data = gaussian_ar1_sample(3, 0.6, 4000, 7);
    write_csv(dir + "/train.csv", data, {"a", "b", "c"});
    DataMatrix held = gaussian_ar1_sample(3, 0.6, 4000, 8);
    write_csv(dir + "/held.csv", held, {"a", "b", "c"});
  }
  json fit_cfg{{"input", dir + "/train.csv"},
               {"structure", "dvine"},
               {"m", 16},
               {"estimator", {{"kind", "kde"}, {"bandwidth", 2.0}}},
               {"out", "model.vdc"}};
  RunRecord fit_rec = cmd_fit(fit_cfg, 1, opts(dir));
  CHECK(std::filesystem::exists(dir + "/model.vdc"));
  CHECK(fit_rec.metrics.at("d") == 3.0);
  CHECK(fit_rec.metrics.at("edges") == 3.0);

  json ll_cfg{{"model", dir + "/model.vdc"}, {"input", dir + "/held.csv"}};
  RunRecord ll_rec = cmd_loglik(ll_cfg, 1, opts(dir));
  json tc_cfg = ll_cfg;
  RunRecord tc_rec = cmd_tc(tc_cfg, 1, opts(dir));
  // the same rows and the same PIT: TC total == mean log-likelihood
  CHECK(std::abs(tc_rec.metrics.at("tc_total") -
                 ll_rec.metrics.at("mean_loglik")) <= 1e-9);
  CHECK(std::filesystem::exists(dir + "/tc_decomposition.json"));

  json smp_cfg{{"model", dir + "/model.vdc"}, {"n", 2000}, {"out", "s.csv"}};
  RunRecord s1 = cmd_sample(smp_cfg, 5, opts(dir));
  RunRecord s2 = rerun_from_record(s1, opts(dir));
  CHECK(s1.metrics == s2.metrics);

  json ins_cfg{{"model", dir + "/model.vdc"}};
  RunRecord ins = cmd_model_inspect(ins_cfg, 1, opts(dir));
  CHECK(ins.metrics.at("edges") == 3.0);
  CHECK(ins.metrics.at("worst_marginal_dev") < 1e-2);
}

TEST_CASE("mi command: grid, ksg and gaussian methods agree") {
  std::string dir = scratch_dir("vdc_mi_test");
  CopulaSpec g;
  g.family = Family::Gaussian;
  g.params = {0.6};
  UvSample s = copula_sample(g, 20000, 3);
  DataMatrix data(20000, 2);
  for (long long i = 0; i < data.n; ++i) {
    data.at(i, 0) = s.u[static_cast<std::size_t>(i)];
    data.at(i, 1) = s.v[static_cast<std::size_t>(i)];
  }
  write_csv(dir + "/pair.csv", data, {"u", "v"});
  const double truth = -0.5 * std::log1p(-0.36);
  for (std::string method : {"grid", "ksg", "gaussian"}) {
    json cfg{{"input", dir + "/pair.csv"}, {"method", method}};
    RunRecord rec = cmd_mi(cfg, 1, opts(dir));
    CHECK(std::abs(rec.metrics.at("mi") - truth) < 0.03);
    RunRecord redo = rerun_from_record(rec, opts(dir));
    CHECK(redo.metrics == rec.metrics);
  }
}

TEST_CASE("ipfp-ablation record and artifacts") {
  std::string dir = scratch_dir("vdc_ablation_test");
  json cfg{{"k_list", {1, 5, 15, 100}}, {"n", 4000}, {"m", 32}};
  RunRecord rec = cmd_ipfp_ablation(cfg, 9, opts(dir));
  CHECK(std::filesystem::exists(dir + "/ipfp_ablation.json"));
  CHECK(std::filesystem::exists(dir + "/ipfp_ablation.csv"));
  CHECK(rec.metrics.at("max_row_err_k100") <= 1e-5);
  CHECK(rec.metrics.at("max_row_err_k15") <= 1e-3);
  CHECK(rec.metrics.at("max_row_err_k5") >= rec.metrics.at("max_row_err_k15"));
  RunRecord redo = rerun_from_record(rec, opts(dir));
  CHECK(redo.metrics == rec.metrics);
}

TEST_CASE("bench-bivariate: aggregates recompute from rows") {
  BenchConfig cfg;
  CopulaSpec ind, frank;
  frank.family = Family::Frank;
  frank.params = {5.0};
  CopulaSpec g3, g5, g7;
  g3.family = g5.family = g7.family = Family::Gaussian;
  g3.params = {0.3};
  g5.params = {0.5};
  g7.params = {0.7};
  cfg.suite = {ind, frank, g3, g5, g7};
  cfg.methods = {"hist", "shrink", "oracle"};
  cfg.n = 1000;
  cfg.m = 32;
  cfg.repeats = 3;
  cfg.root_seed = 4;
  BenchSuiteResult res = bench_bivariate(cfg);

  auto recomputed = aggregate_rows(res.rows);
  REQUIRE(recomputed.size() == res.aggregates.size());
  for (std::size_t i = 0; i < recomputed.size(); ++i) {
    CHECK(recomputed[i].method == res.aggregates[i].method);
    CHECK(std::abs(recomputed[i].mean - res.aggregates[i].mean) <= 1e-12);
    CHECK(std::abs(recomputed[i].stddev - res.aggregates[i].stddev) <= 1e-12);
  }

  // oracle method: ISE is pure discretization residual for the bounded
  // densities, and its implied tau tracks the analytic value
  for (const auto& r : res.rows) {
    if (r.method == "oracle" && r.metric == "ise" &&
        r.case_id.find("frank") != std::string::npos)
      CHECK(r.value <= 1e-6);
    if (r.method == "oracle" && r.metric == "dtau")
      CHECK(r.value <= 0.01);
  }
}

TEST_CASE("shrinkage beats the raw histogram under independence") {
  BenchConfig cfg;
  cfg.suite = {CopulaSpec{}};
  cfg.methods = {"hist", "shrink"};
  cfg.n = 1000;
  cfg.m = 64;
  cfg.repeats = 20;
  cfg.root_seed = 6;
  BenchSuiteResult res = bench_bivariate(cfg);
  int shrink_wins = 0;
  for (int rep = 0; rep < 20; ++rep) {
    double ise_hist = 0, ise_shrink = 0;
    std::string id = "independence#" + std::to_string(rep);
    for (const auto& r : res.rows)
      if (r.case_id == id && r.metric == "ise") {
        if (r.method == "hist") ise_hist = r.value;
        if (r.method == "shrink") ise_shrink = r.value;
      }
    if (ise_shrink < ise_hist) ++shrink_wins;
  }
  CHECK(shrink_wins > 10);
}

TEST_CASE("self-consistency command is reproducible") {
  std::string dir = scratch_dir("vdc_sc_test");
  json cfg{{"trials", 2}, {"n", 3000}};
  RunRecord rec = cmd_self_consistency(cfg, 11, opts(dir));
  CHECK(rec.metrics.count("dpi_violation_rate") == 1);
  CHECK(rec.metrics.count("additivity_err") == 1);
  CHECK(rec.metrics.count("monotonicity_err") == 1);
  RunRecord redo = rerun_from_record(rec, opts(dir));
  CHECK(redo.metrics == rec.metrics);
}

TEST_CASE("tc-scaling command smoke") {
  std::string dir = scratch_dir("vdc_tcs_test");
  json cfg{{"d_list", {3}}, {"n", 3000}, {"ksg_subsample", 1000}};
  RunRecord rec = cmd_tc_scaling(cfg, 21, opts(dir));
  CHECK(std::filesystem::exists(dir + "/tc_scaling.csv"));
  CHECK(rec.metrics.at("tc_true_d3") ==
        doctest::Approx(-std::log1p(-0.49)).epsilon(1e-9));
  RunRecord redo = rerun_from_record(rec, opts(dir));
  CHECK(redo.metrics == rec.metrics);
}

TEST_CASE("run records serialize completely") {
  std::string dir = scratch_dir("vdc_record_test");
  json cfg{{"spec", {{"family", "gaussian"}, {"params", {0.5}}}}, {"n", 500}};
  RunRecord rec = cmd_zoo_gen(cfg, 77, opts(dir));
  write_record(rec, opts(dir));
  std::ifstream f(dir + "/zoo-gen_record.json");
  REQUIRE(f.good());
  json j;
  f >> j;
  RunRecord back = RunRecord::from_json(j);
  CHECK(back.command == "zoo-gen");
  CHECK(back.seed == 77);
  CHECK(back.metrics == rec.metrics);
  CHECK(back.config == rec.config);
  // re-running from the parsed record reproduces the metrics
  RunRecord redo = rerun_from_record(back, opts(dir));
  CHECK(redo.metrics == rec.metrics);
}

TEST_CASE("fit timing grows with n and with d (median of 5)") {
  auto median_fit_seconds = [](int d, long long n) {
    std::vector<double> times;
    DataMatrix data = gaussian_ar1_sample(d, 0.5, n, 123);
    FitConfig fc;
    fc.structure = StructureKind::Dvine;
    fc.m = 16;
    fc.estimator.kind = EstimatorKind::Kde;
    for (int rep = 0; rep < 5; ++rep) {
      auto t0 = std::chrono::steady_clock::now();
      VineModel model = fit(data, fc);
      times.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count());
    }
    std::sort(times.begin(), times.end());
    return times[2];
  };
  double base = median_fit_seconds(3, 2000);
  CHECK(median_fit_seconds(3, 16000) >= base);
  CHECK(median_fit_seconds(6, 2000) >= base);
}

}  // TEST_SUITE
