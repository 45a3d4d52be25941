#include <doctest.h>

#include <cmath>

#include "vdc/copula.hpp"
#include "vdc/estimator.hpp"
#include "vdc/ipfp.hpp"
#include "vdc/rng.hpp"
#include "vdc/transform.hpp"

using namespace vdc;

namespace {

RawGrid raw_from(std::vector<double> values, int m) {
  RawGrid g;
  g.m = m;
  g.values = std::move(values);
  g.source = "test";
  return g;
}

RawGrid random_positive(int m, std::uint64_t seed) {
  Rng rng(seed);
  RawGrid g;
  g.m = m;
  g.values.resize(static_cast<std::size_t>(m) * m);
  for (double& v : g.values) v = 0.05 + 2.0 * rng.uniform();
  g.source = "random";
  return g;
}

// Machine-precision member of the feasible set (unit mass, uniform
// marginals), independent of the k under test.
DensityGrid feasible_point(int m, std::uint64_t seed) {
  return project(random_positive(m, seed), 4000).first;
}

}  // namespace

TEST_SUITE("ipfp") {

TEST_CASE("uniform grid is a fixed point") {
  RawGrid u = raw_from(std::vector<double>(16, 1.0), 4);
  auto [grid, report] = project(u, 1);
  CHECK(grid.values == u.values);
  CHECK(report.iterations == 1);
  CHECK(report.max_row_err[0] == 0.0);
  CHECK(report.max_col_err[0] == 0.0);
  CHECK(report.mass_err == 0.0);
}

TEST_CASE("hand-computed 2x2 projection") {
  RawGrid g = raw_from({2, 1, 1, 2}, 2);
  for (int k : {1, 3, 10}) {
    auto [grid, report] = project(g, k);
    CHECK(grid.at(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
    CHECK(grid.at(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(grid.at(1, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(grid.at(1, 1) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  }
}

TEST_CASE("separable grids project to independence") {
  // rank-1 input r_a * c_b; one iteration reaches the uniform grid
  std::vector<double> r{0.5, 1.5, 2.0, 0.25}, c{1.0, 3.0, 0.5, 0.75};
  RawGrid g = raw_from(std::vector<double>(16, 0.0), 4);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) g.at(a, b) = r[a] * c[b];
  auto [grid, report] = project(g, 1);
  for (double v : grid.values) CHECK(std::abs(v - 1.0) < 1e-12);
}

TEST_CASE("validity report") {
  DensityGrid exact;
  exact.m = 4;
  exact.values.assign(16, 1.0);
  ValidityReport v = validity_report(exact);
  CHECK(v.max_row_dev == 0.0);
  CHECK(v.max_col_dev == 0.0);
  CHECK(v.mass_err == 0.0);

  DensityGrid doubled = exact;
  for (double& x : doubled.values) x = 2.0;
  ValidityReport d = validity_report(doubled);
  CHECK(d.mass_err == 1.0);
  CHECK(d.max_row_dev == 1.0);
  CHECK(d.max_col_dev == 1.0);
}

TEST_CASE("shrinkage-estimated grids: k=15 and k=100 residuals") {
  CopulaSpec spec;
  spec.family = Family::Clayton;
  spec.params = {3.0};
  UvSample s = copula_sample(spec, 10000, 31);
  Histogram h = histogram(pseudo_observations(s.u, s.v), 64);
  RawGrid raw = estimate_shrinkage(h, std::nullopt);
  auto [g15, r15] = project(raw, 15);
  ValidityReport v15 = validity_report(g15);
  CHECK(v15.max_row_dev <= 1e-3);
  CHECK(v15.max_col_dev <= 1e-3);
  auto [g100, r100] = project(raw, 100);
  ValidityReport v100 = validity_report(g100);
  CHECK(v100.max_row_dev <= 1e-5);
  CHECK(v100.max_col_dev <= 1e-5);
  // per-iteration row error is non-increasing
  for (std::size_t i = 1; i < r100.max_row_err.size(); ++i)
    CHECK(r100.max_row_err[i] <= r100.max_row_err[i - 1] + 1e-12);
}

TEST_CASE("pass-level diagnostics and update order") {
  // after a row pass the row marginals are exact; likewise for columns
  GridBuffer g = random_positive(16, 5);
  ipfp_row_pass(g);
  CHECK(validity_report(g).max_row_dev <= 1e-12);
  ipfp_col_pass(g);
  CHECK(validity_report(g).max_col_dev <= 1e-12);

  // column-last order leaves the column residual far below the row residual
  RawGrid rough = random_positive(32, 6);
  auto [grid, report] = project(rough, 2);
  ValidityReport v = validity_report(grid);
  CHECK(v.max_col_dev < 1e-13);
  CHECK(v.max_row_dev > 10.0 * v.max_col_dev);
}

TEST_CASE("projecting a valid grid is the identity") {
  DensityGrid valid = feasible_point(8, 77);
  RawGrid as_raw;
  as_raw.m = valid.m;
  as_raw.values = valid.values;
  auto [again, report] = project(as_raw, 5);
  for (std::size_t i = 0; i < again.values.size(); ++i)
    CHECK(std::abs(again.values[i] - valid.values[i]) <= 1e-12);
}

TEST_CASE("scale invariance") {
  RawGrid g = random_positive(8, 13);
  RawGrid scaled = g;
  for (double& v : scaled.values) v *= 37.5;
  auto a = project(g, 15).first;
  auto b = project(scaled, 15).first;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    CHECK(std::abs(a.values[i] - b.values[i]) <= 1e-12);

  // k = 0 only normalizes the mass
  auto c = project(scaled, 0).first;
  CHECK(std::abs(c.total_mass() - 1.0) < 1e-12);
}

TEST_CASE("KL divergence basics") {
  DensityGrid p = feasible_point(4, 3);
  RawGrid q;
  q.m = p.m;
  q.values = p.values;
  CHECK(kl_divergence(p, q) == doctest::Approx(0.0).epsilon(1e-15));

  RawGrid other = random_positive(4, 4);
  CHECK(kl_divergence(p, other) >= 0.0);

  RawGrid wrong;
  wrong.m = 8;
  wrong.values.assign(64, 1.0);
  CHECK_THROWS_AS(kl_divergence(p, wrong), std::invalid_argument);
}

TEST_CASE("projection minimizes KL among feasible grids") {
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    RawGrid d = random_positive(4, 1000 + trial);
    DensityGrid proj = project(d, 4000).first;
    double kl_star = kl_divergence(proj, d);
    for (std::uint64_t q = 0; q < 20; ++q) {
      DensityGrid feasible = feasible_point(4, 5000 + 100 * trial + q);
      CHECK(kl_star <= kl_divergence(feasible, d) + 1e-10);
    }
  }
}

TEST_CASE("input validation") {
  RawGrid g = random_positive(4, 2);
  CHECK_THROWS_AS(project(g, -1), std::invalid_argument);
  g.values[5] = 0.0;
  CHECK_THROWS_AS(project(g, 5), std::invalid_argument);
}

}  // TEST_SUITE
