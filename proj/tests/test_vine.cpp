#include <doctest.h>

#include <chrono>
#include <cmath>
#include <filesystem>

#include "vdc/bench.hpp"
#include "vdc/copula.hpp"
#include "vdc/errors.hpp"
#include "vdc/info.hpp"
#include "vdc/rng.hpp"
#include "vdc/vine.hpp"

using namespace vdc;

namespace {

double brute_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  long long num = 0, tx = 0, ty = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double sx = x[i] - x[j], sy = y[i] - y[j];
      if (sx == 0) ++tx;
      if (sy == 0) ++ty;
      double s = sx * sy;
      num += s > 0 ? 1 : (s < 0 ? -1 : 0);
    }
  long long n0 = static_cast<long long>(n) * (n - 1) / 2;
  double denom = tx == ty ? static_cast<double>(n0 - tx)
                          : std::sqrt(static_cast<double>(n0 - tx)) *
                                std::sqrt(static_cast<double>(n0 - ty));
  return static_cast<double>(num) / denom;
}

DataMatrix pit_cols(const DataMatrix& data) {
  DataMatrix out(data.n, data.d);
  for (int j = 0; j < data.d; ++j) {
    auto col = rank_pit(data.column(j));
    for (long long i = 0; i < data.n; ++i)
      out.at(i, j) = col[static_cast<std::size_t>(i)];
  }
  return out;
}

FitConfig small_cfg(StructureKind kind = StructureKind::Dvine, int m = 16) {
  FitConfig fc;
  fc.structure = kind;
  fc.m = m;
  fc.estimator.kind = EstimatorKind::Kde;
  fc.estimator.bandwidth_cells = 2.0;
  return fc;
}

std::vector<double> pairwise_taus(const DataMatrix& data) {
  std::vector<double> out;
  for (int a = 0; a < data.d; ++a)
    for (int b = a + 1; b < data.d; ++b)
      out.push_back(kendall_tau(data.column(a), data.column(b)));
  return out;
}

}  // namespace

TEST_SUITE("vine") {

TEST_CASE("kendall tau: examples and brute-force equality") {
  std::vector<double> perfect(100);
  for (int i = 0; i < 100; ++i) perfect[static_cast<std::size_t>(i)] = 3.7 * i;
  CHECK(kendall_tau(perfect, perfect) == 1.0);

  std::vector<double> x{1, 2, 3}, y{1, 3, 2};
  CHECK(kendall_tau(x, y) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  Rng rng(99);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> a(1000), b(1000);
    for (int i = 0; i < 1000; ++i) {
      double z = rng.normal();
      a[static_cast<std::size_t>(i)] = z;
      b[static_cast<std::size_t>(i)] = 0.5 * z + rng.normal();
    }
    if (rep % 2 == 1) {  // heavy ties
      for (auto& v : a) v = std::round(v * 4.0) / 4.0;
      for (auto& v : b) v = std::round(v * 2.0) / 2.0;
    }
    CHECK(kendall_tau(a, b) == brute_tau_b(a, b));
  }

  std::vector<double> cx(10, 1.0), cy{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK_THROWS_AS(kendall_tau(cx, cy), std::invalid_argument);
}

TEST_CASE("d=2 fit equals the standalone bivariate pipeline") {
  CopulaSpec g;
  g.family = Family::Gaussian;
  g.params = {0.6};
  UvSample s = copula_sample(g, 4000, 17);
  DataMatrix data(4000, 2);
  for (long long i = 0; i < 4000; ++i) {
    data.at(i, 0) = s.u[static_cast<std::size_t>(i)];
    data.at(i, 1) = s.v[static_cast<std::size_t>(i)];
  }
  FitConfig fc;
  fc.structure = StructureKind::Dvine;
  fc.m = 32;
  fc.estimator.kind = EstimatorKind::Shrinkage;
  VineModel model = fit(data, fc);
  REQUIRE(model.edges.size() == 1);

  PseudoObs obs = pseudo_observations(s.u, s.v);
  Histogram h = histogram(obs, 32);
  DensityGrid grid = project(estimate_shrinkage(h, std::nullopt), 15).first;
  CHECK(model.edges[0].grid.values == grid.values);

  // d=2 log-likelihood is the single edge's log density
  for (double u : {0.07, 0.5, 0.93})
    for (double v : {0.21, 0.68}) {
      std::vector<double> row{u, v};
      CHECK(log_likelihood(model, row) == grid_log_density(grid, u, v, false));
    }
}

TEST_CASE("tree-1 selection follows |tau| (MST oracle)") {
  // chain X0 -- X1 -- X2 with strong adjacent and weaker end-to-end tau
  Rng rng(5);
  DataMatrix data(6000, 3);
  for (long long i = 0; i < 6000; ++i) {
    double x0 = rng.normal();
    double x1 = 0.95 * x0 + std::sqrt(1 - 0.95 * 0.95) * rng.normal();
    double x2 = 0.90 * x1 + std::sqrt(1 - 0.90 * 0.90) * rng.normal();
    data.at(i, 0) = x0;
    data.at(i, 1) = x1;
    data.at(i, 2) = x2;
  }
  VineModel model = fit(data, small_cfg(StructureKind::Rvine));
  REQUIRE(model.edges.size() == 3);
  auto pair_of = [](const VineEdge& e) { return std::pair<int, int>{e.j, e.k}; };
  CHECK(pair_of(model.edges[0]) == std::pair<int, int>{0, 1});
  CHECK(pair_of(model.edges[1]) == std::pair<int, int>{1, 2});
  CHECK(pair_of(model.edges[2]) == std::pair<int, int>{0, 2});
  CHECK(model.edges[2].conditioning == std::vector<int>{1});
  check_structure(model);
}

TEST_CASE("structure legality for fitted models") {
  DataMatrix data = gaussian_ar1_sample(6, 0.6, 3000, 23);
  VineModel rv = fit(data, small_cfg(StructureKind::Rvine));
  check_structure(rv);
  VineModel dv = fit(data, small_cfg(StructureKind::Dvine));
  check_structure(dv);
  std::vector<int> sorted_order = dv.order;
  std::sort(sorted_order.begin(), sorted_order.end());
  CHECK(sorted_order == std::vector<int>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("monotone per-column transforms leave the model bit-identical") {
  DataMatrix data = gaussian_ar1_sample(4, 0.5, 1500, 29);
  DataMatrix warped(data.n, data.d);
  for (long long i = 0; i < data.n; ++i) {
    warped.at(i, 0) = std::exp(data.at(i, 0));
    warped.at(i, 1) = data.at(i, 1) * data.at(i, 1) * data.at(i, 1);
    warped.at(i, 2) = std::atan(data.at(i, 2));
    warped.at(i, 3) = 5.0 * data.at(i, 3) - 2.0;
  }
  VineModel a = fit(data, small_cfg());
  VineModel b = fit(warped, small_cfg());
  REQUIRE(a.edges.size() == b.edges.size());
  CHECK(a.order == b.order);
  for (std::size_t e = 0; e < a.edges.size(); ++e) {
    CHECK(a.edges[e].grid.values == b.edges[e].grid.values);
    CHECK(a.edges[e].stats.tau_hat == b.edges[e].stats.tau_hat);
  }
}

TEST_CASE("in-sample mean log-likelihood equals the sum of edge means") {
  DataMatrix data = gaussian_ar1_sample(5, 0.6, 4000, 31);
  VineModel model = fit(data, small_cfg());
  DataMatrix u = pit_cols(data);
  double mean_ll = 0.0;
  for (long long i = 0; i < u.n; ++i) mean_ll += log_likelihood(model, u.row(i));
  mean_ll /= static_cast<double>(u.n);
  double edge_sum = 0.0;
  for (const auto& e : model.edges) edge_sum += e.stats.mean_log_density;
  CHECK(std::abs(mean_ll - edge_sum) <= 1e-9);
}

TEST_CASE("log likelihood on independence fits stays near zero") {
  DataMatrix data = gaussian_ar1_sample(3, 0.0, 10000, 37);
  VineModel model = fit(data, small_cfg());
  Rng rng(41);
  for (int r = 0; r < 50; ++r) {
    std::vector<double> row{rng.uniform(), rng.uniform(), rng.uniform()};
    CHECK(std::abs(log_likelihood(model, row)) < 0.5);
  }
  std::vector<double> bad{0.5, 1.0, 0.5};
  CHECK_THROWS_AS(log_likelihood(model, bad), std::domain_error);
}

TEST_CASE("sampling: determinism and independence") {
  DataMatrix data = gaussian_ar1_sample(4, 0.0, 10000, 43);
  VineModel model = fit(data, small_cfg());
  DataMatrix s1 = sample_model(model, 10000, 7);
  DataMatrix s2 = sample_model(model, 10000, 7);
  CHECK(s1.values == s2.values);
  DataMatrix s3 = sample_model(model, 10000, 8);
  CHECK(s1.values != s3.values);
  for (double tau : pairwise_taus(s1)) CHECK(std::abs(tau) < 0.03);
}

TEST_CASE("d=2 gaussian fit resamples the right tau") {
  CopulaSpec g;
  g.family = Family::Gaussian;
  g.params = {0.7};
  UvSample s = copula_sample(g, 100000, 47);
  DataMatrix data(100000, 2);
  for (long long i = 0; i < data.n; ++i) {
    data.at(i, 0) = s.u[static_cast<std::size_t>(i)];
    data.at(i, 1) = s.v[static_cast<std::size_t>(i)];
  }
  VineModel model = fit(data, small_cfg(StructureKind::Dvine, 64));
  DataMatrix res = sample_model(model, 20000, 53);
  double tau = kendall_tau(res.column(0), res.column(1));
  CHECK(std::abs(tau - 2.0 / M_PI * std::asin(0.7)) < 0.05);
}

TEST_CASE("r-vine sampling reproduces a star dependence") {
  // hub variable drives three satellites: tree 1 is a star, which
  // exercises the sampling plan on a non-path structure
  Rng rng(59);
  DataMatrix data(20000, 4);
  for (long long i = 0; i < data.n; ++i) {
    double hub = rng.normal();
    data.at(i, 0) = hub;
    for (int j = 1; j < 4; ++j) data.at(i, j) = 0.8 * hub + 0.6 * rng.normal();
  }
  VineModel model = fit(data, small_cfg(StructureKind::Rvine, 32));
  check_structure(model);
  int hub_degree = 0;
  for (const auto& e : model.edges)
    if (e.tree_level == 1 && (e.j == 0 || e.k == 0)) ++hub_degree;
  CHECK(hub_degree == 3);  // genuine star, not a path

  DataMatrix res = sample_model(model, 20000, 61);
  auto data_taus = pairwise_taus(pit_cols(data));
  auto res_taus = pairwise_taus(res);
  for (std::size_t i = 0; i < data_taus.size(); ++i)
    CHECK(std::abs(data_taus[i] - res_taus[i]) < 0.05);
}

TEST_CASE("sampled log-likelihood matches the model's own entropy") {
  // piecewise-constant lookup makes the sampled measure exactly the grid
  // density, so mean log c over samples estimates sum_e int c_e log c_e
  DataMatrix data = gaussian_ar1_sample(3, 0.6, 20000, 67);
  FitConfig fc = small_cfg(StructureKind::Dvine, 32);
  fc.k_ipfp = 300;
  fc.const_lookup = true;
  VineModel model = fit(data, fc);
  double model_tc = 0.0;
  for (const auto& e : model.edges) model_tc += grid_mi_integral(e.grid);

  const long long n = 100000;
  DataMatrix s = sample_model(model, n, 71);
  double mean = 0.0, ss = 0.0;
  for (long long i = 0; i < n; ++i) {
    double ll = log_likelihood(model, s.row(i));
    mean += ll;
    ss += ll * ll;
  }
  mean /= static_cast<double>(n);
  double se = std::sqrt((ss / n - mean * mean) / n);
  CHECK(std::abs(mean - model_tc) <= 3.0 * se);
}

TEST_CASE("uniformizing a tree removes exactly its contribution") {
  DataMatrix data = gaussian_ar1_sample(4, 0.7, 8000, 73);
  VineModel model = fit(data, small_cfg(StructureKind::Dvine, 32));
  DataMatrix u = pit_cols(data);
  TcDecomposition full = total_correlation(model, u);
  VineModel cut = uniformize_trees(model, {1});
  TcDecomposition reduced = total_correlation(cut, u);
  double tree1 = 0.0;
  for (const auto& t : full.per_tree)
    if (t.tree_level == 1) tree1 = t.signed_sum;
  CHECK(std::abs((full.total - tree1) - reduced.total) <= 1e-9);
}

TEST_CASE("truncation fits upper trees as independence") {
  DataMatrix data = gaussian_ar1_sample(4, 0.7, 5000, 79);
  FitConfig fc = small_cfg(StructureKind::Dvine, 16);
  fc.max_tree_level = 1;
  VineModel model = fit(data, fc);
  for (const auto& e : model.edges) {
    if (e.tree_level > 1) {
      bool uniform = true;
      for (double v : e.grid.values) uniform = uniform && v == 1.0;
      CHECK(uniform);
      CHECK(e.stats.mean_log_density == 0.0);
    }
  }
  check_structure(model);
}

TEST_CASE("model serialization round trip") {
  DataMatrix data = gaussian_ar1_sample(4, 0.5, 3000, 83);
  VineModel model = fit(data, small_cfg(StructureKind::Rvine, 16));
  std::string path =
      (std::filesystem::temp_directory_path() / "vdc_model_test.vdc").string();
  save_model(model, path);
  VineModel back = load_model(path);
  CHECK(back.d == model.d);
  CHECK(back.m == model.m);
  CHECK(back.edges.size() == model.edges.size());
  for (std::size_t e = 0; e < model.edges.size(); ++e) {
    CHECK(back.edges[e].grid.values == model.edges[e].grid.values);
    CHECK(back.edges[e].htables.h_u_given_v == model.edges[e].htables.h_u_given_v);
    CHECK(back.edges[e].conditioning == model.edges[e].conditioning);
    CHECK(back.edges[e].stats.tau_hat == model.edges[e].stats.tau_hat);
  }
  std::vector<double> row{0.3, 0.6, 0.2, 0.9};
  CHECK(log_likelihood(back, row) == log_likelihood(model, row));
  CHECK(sample_model(back, 500, 3).values == sample_model(model, 500, 3).values);

  CHECK_THROWS_AS(load_model("/nonexistent/path.vdc"), DataError);
}

TEST_CASE("fit input validation") {
  DataMatrix tiny = gaussian_ar1_sample(3, 0.5, 50, 89);
  CHECK_THROWS_AS(fit(tiny, small_cfg()), DataError);  // below min_samples

  DataMatrix constant(500, 2);
  for (long long i = 0; i < 500; ++i) {
    constant.at(i, 0) = 1.0;
    constant.at(i, 1) = static_cast<double>(i);
  }
  CHECK_THROWS_AS(fit(constant, small_cfg()), DataError);

  DataMatrix one_col(500, 1);
  CHECK_THROWS_AS(fit(one_col, small_cfg()), std::invalid_argument);
}

TEST_CASE("parallel fit matches serial fit") {
  DataMatrix data = gaussian_ar1_sample(5, 0.6, 4000, 97);
  FitConfig serial = small_cfg();
  FitConfig parallel = small_cfg();
  parallel.threads = 4;
  VineModel a = fit(data, serial);
  VineModel b = fit(data, parallel);
  REQUIRE(a.edges.size() == b.edges.size());
  for (std::size_t e = 0; e < a.edges.size(); ++e)
    CHECK(a.edges[e].grid.values == b.edges[e].grid.values);
}

TEST_CASE("kendall throughput") {
  const std::size_t n = 1000000;
  Rng rng(101);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.normal();
    y[i] = 0.4 * x[i] + rng.normal();
  }
  auto t0 = std::chrono::steady_clock::now();
  double tau = kendall_tau(x, y);
  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(std::abs(tau) < 1.0);
  CHECK(static_cast<double>(n) / secs >= 1e6);
}

}  // TEST_SUITE
