#include "vdc/ipfp.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace vdc {

namespace {

double max_row_deviation(const GridBuffer& g) {
  double worst = 0.0;
  for (int a = 0; a < g.m; ++a) {
    double s = 0.0;
    for (int b = 0; b < g.m; ++b) s += g.at(a, b);
    worst = std::max(worst, std::abs(s * g.delta() - 1.0));
  }
  return worst;
}

double max_col_deviation(const GridBuffer& g) {
  double worst = 0.0;
  for (int b = 0; b < g.m; ++b) {
    double s = 0.0;
    for (int a = 0; a < g.m; ++a) s += g.at(a, b);
    worst = std::max(worst, std::abs(s * g.delta() - 1.0));
  }
  return worst;
}

}  // namespace

void ipfp_row_pass(GridBuffer& g) {
  for (int a = 0; a < g.m; ++a) {
    double s = 0.0;
    for (int b = 0; b < g.m; ++b) s += g.at(a, b);
    double scale = 1.0 / (s * g.delta());
    for (int b = 0; b < g.m; ++b) g.at(a, b) *= scale;
  }
}

void ipfp_col_pass(GridBuffer& g) {
  for (int b = 0; b < g.m; ++b) {
    double s = 0.0;
    for (int a = 0; a < g.m; ++a) s += g.at(a, b);
    double scale = 1.0 / (s * g.delta());
    for (int a = 0; a < g.m; ++a) g.at(a, b) *= scale;
  }
}

std::pair<DensityGrid, IpfpReport> project(const RawGrid& raw, int k,
                                           std::optional<double> tol) {
  if (k < 0) throw std::invalid_argument("project: k must be >= 0");
  for (double x : raw.values)
    if (!(x > 0.0))
      throw std::invalid_argument("project: raw grid must be strictly positive");

  auto start = std::chrono::steady_clock::now();
  DensityGrid grid;
  grid.m = raw.m;
  grid.values = raw.values;
  IpfpReport report;
  for (int it = 0; it < k; ++it) {
    ipfp_row_pass(grid);
    ipfp_col_pass(grid);
    report.iterations = it + 1;
    double row_err = max_row_deviation(grid);
    double col_err = max_col_deviation(grid);
    report.max_row_err.push_back(row_err);
    report.max_col_err.push_back(col_err);
    if (tol && row_err < *tol && col_err < *tol) break;
  }
  // Mass is exact after any column pass; normalize for the k = 0 path and
  // guard against residual rounding.
  double mass = grid.total_mass();
  if (std::abs(mass - 1.0) > 0.0) {
    double scale = 1.0 / mass;
    for (double& x : grid.values) x *= scale;
  }
  report.mass_err = std::abs(grid.total_mass() - 1.0);
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return {std::move(grid), std::move(report)};
}

ValidityReport validity_report(const GridBuffer& grid) {
  ValidityReport r;
  r.max_row_dev = max_row_deviation(grid);
  r.max_col_dev = max_col_deviation(grid);
  r.mass_err = std::abs(grid.total_mass() - 1.0);
  return r;
}

double kl_divergence(const GridBuffer& p, const GridBuffer& q) {
  if (p.m != q.m)
    throw std::invalid_argument("kl_divergence: grid size mismatch");
  double acc = 0.0;
  const double d2 = p.delta() * p.delta();
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    double pv = p.values[i], qv = q.values[i];
    if (!(qv > 0.0))
      throw std::invalid_argument("kl_divergence: q must be strictly positive");
    if (pv < 0.0)
      throw std::invalid_argument("kl_divergence: p must be non-negative");
    if (pv > 0.0) acc += pv * std::log(pv / qv) * d2;
  }
  return acc;
}

}  // namespace vdc
