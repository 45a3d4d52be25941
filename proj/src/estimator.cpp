#include "vdc/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vdc/errors.hpp"
#include "vdc/grid_io.hpp"

namespace vdc {

EstimatorKind estimator_kind_from_string(const std::string& s) {
  if (s == "hist" || s == "histogram") return EstimatorKind::Histogram;
  if (s == "shrink" || s == "shrinkage") return EstimatorKind::Shrinkage;
  if (s == "kde") return EstimatorKind::Kde;
  if (s == "import") return EstimatorKind::Import;
  throw std::invalid_argument("unknown edge estimator: " + s);
}

std::string estimator_kind_to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::Histogram: return "hist";
    case EstimatorKind::Shrinkage: return "shrink";
    case EstimatorKind::Kde: return "kde";
    case EstimatorKind::Import: return "import";
  }
  return "?";
}

double default_shrinkage_alpha(int m, long long n) {
  double m2 = static_cast<double>(m) * m;
  return m2 / (m2 + static_cast<double>(n));
}

double default_kde_bandwidth_cells(int m) { return 64.0 / m; }

RawGrid estimate_raw_histogram(const Histogram& h) {
  RawGrid out;
  out.m = h.m;
  out.source = "hist";
  out.values = h.values;
  for (double& x : out.values) x = std::max(x, kEpsFloor);
  return out;
}

RawGrid estimate_shrinkage(const Histogram& h, std::optional<double> alpha) {
  double a = alpha ? *alpha : default_shrinkage_alpha(h.m, h.n);
  if (!(a >= 0.0 && a < 1.0))
    throw std::invalid_argument("estimate_shrinkage: alpha must lie in [0,1)");
  RawGrid out;
  out.m = h.m;
  out.source = "shrink";
  out.values = h.values;
  for (double& x : out.values) x = std::max((1.0 - a) * x + a, kEpsFloor);
  return out;
}

namespace {

// Half-sample mirror index into [0,m).
int reflect(int i, int m) {
  while (i < 0 || i >= m) {
    if (i < 0) i = -i - 1;
    if (i >= m) i = 2 * m - 1 - i;
  }
  return i;
}

}  // namespace

RawGrid estimate_grid_kde(const Histogram& h, double bandwidth_cells) {
  if (!(bandwidth_cells > 0.0))
    throw std::invalid_argument("estimate_grid_kde: bandwidth must be > 0");
  const int m = h.m;
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * bandwidth_cells)));
  std::vector<double> kernel(2 * radius + 1);
  double ksum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    double w = std::exp(-0.5 * i * i / (bandwidth_cells * bandwidth_cells));
    kernel[i + radius] = w;
    ksum += w;
  }
  for (double& w : kernel) w /= ksum;

  // Separable pass along u then along v.
  std::vector<double> tmp(h.values.size(), 0.0);
  for (int b = 0; b < m; ++b)
    for (int a = 0; a < m; ++a) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[i + radius] * h.at(reflect(a + i, m), b);
      tmp[static_cast<std::size_t>(a) * m + b] = acc;
    }
  RawGrid out;
  out.m = m;
  out.source = "kde";
  out.values.assign(h.values.size(), 0.0);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[i + radius] * tmp[static_cast<std::size_t>(a) * m + reflect(b + i, m)];
      out.at(a, b) = std::max(acc, kEpsFloor);
    }
  return out;
}

RawGrid import_grid(const std::string& base_path) {
  LoadedGrid loaded = load_grid(base_path);
  RawGrid out;
  out.m = loaded.grid.m;
  out.source = "external";
  out.values = std::move(loaded.grid.values);
  int floored = 0;
  for (double& x : out.values) {
    if (x < kEpsFloor) {
      x = kEpsFloor;
      ++floored;
    }
  }
  if (floored > 0)
    out.warnings.push_back("import_grid: floored " + std::to_string(floored) +
                           " non-positive cells to 1e-12");
  return out;
}

RawGrid run_estimator(const EdgeEstimatorConfig& cfg, const Histogram& h,
                      const std::string& edge_id) {
  switch (cfg.kind) {
    case EstimatorKind::Histogram: return estimate_raw_histogram(h);
    case EstimatorKind::Shrinkage: return estimate_shrinkage(h, cfg.alpha);
    case EstimatorKind::Kde:
      return estimate_grid_kde(h, cfg.bandwidth_cells
                                      ? *cfg.bandwidth_cells
                                      : default_kde_bandwidth_cells(h.m));
    case EstimatorKind::Import: {
      RawGrid g = import_grid(cfg.grid_dir + "/" + edge_id);
      if (g.m != h.m)
        throw DataError("run_estimator: imported grid size " +
                        std::to_string(g.m) + " does not match m=" +
                        std::to_string(h.m));
      return g;
    }
  }
  throw std::invalid_argument("run_estimator: unknown estimator kind");
}

}  // namespace vdc
