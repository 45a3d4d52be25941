#include "vdc/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <thread>

#include "vdc/errors.hpp"
#include "vdc/rng.hpp"
#include "vdc/transform.hpp"

namespace vdc {

namespace {

void parallel_cases(int count, int threads, const std::function<void(int)>& body) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min(threads, count); ++w)
    pool.emplace_back([&]() {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

DataMatrix gaussian_ar1_sample(int d, double rho, long long n,
                               std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("gaussian_ar1_sample: d >= 1");
  DataMatrix out(n, d);
  Rng rng(seed);
  const double s = std::sqrt(1.0 - rho * rho);
  for (long long i = 0; i < n; ++i) {
    double z = rng.normal();
    out.at(i, 0) = z;
    for (int j = 1; j < d; ++j) {
      z = rho * z + s * rng.normal();
      out.at(i, j) = z;
    }
  }
  return out;
}

std::vector<std::vector<double>> ar1_correlation(int d, double rho) {
  std::vector<std::vector<double>> corr(
      static_cast<std::size_t>(d), std::vector<double>(static_cast<std::size_t>(d), 0.0));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      corr[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          std::pow(rho, std::abs(i - j));
  return corr;
}

DensityGrid true_density_grid(const CopulaSpec& spec, int m, int points) {
  DensityGrid g;
  g.m = m;
  g.values.resize(static_cast<std::size_t>(m) * m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      g.at(a, b) = cell_average_density(spec, m, a, b, points);
  return g;
}

DensityGrid center_density_grid(const CopulaSpec& spec, int m) {
  DensityGrid g;
  g.m = m;
  g.values.resize(static_cast<std::size_t>(m) * m);
  const double delta = 1.0 / m;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      g.at(a, b) = copula_density(spec, (a + 0.5) * delta, (b + 0.5) * delta);
  return g;
}

double grid_ise(const GridBuffer& estimate, const GridBuffer& truth) {
  if (estimate.m != truth.m) throw std::invalid_argument("grid_ise: size mismatch");
  double acc = 0.0;
  const double d2 = estimate.delta() * estimate.delta();
  for (std::size_t i = 0; i < estimate.values.size(); ++i) {
    double diff = estimate.values[i] - truth.values[i];
    acc += diff * diff * d2;
  }
  return acc;
}

namespace {

// Copula CDF at the grid nodes: C[a][b] = sum of cell masses below.
std::vector<double> node_cdf(const GridBuffer& g) {
  const int m = g.m;
  const double d2 = g.delta() * g.delta();
  std::vector<double> c(static_cast<std::size_t>(m + 1) * (m + 1), 0.0);
  auto idx = [m](int a, int b) {
    return static_cast<std::size_t>(a) * (m + 1) + b;
  };
  for (int a = 1; a <= m; ++a) {
    double row_acc = 0.0;
    for (int b = 1; b <= m; ++b) {
      row_acc += g.at(a - 1, b - 1) * d2;
      c[idx(a, b)] = c[idx(a - 1, b)] + row_acc;
    }
  }
  return c;
}

}  // namespace

double grid_tau(const GridBuffer& g) {
  const int m = g.m;
  std::vector<double> c = node_cdf(g);
  auto idx = [m](int a, int b) {
    return static_cast<std::size_t>(a) * (m + 1) + b;
  };
  const double d2 = g.delta() * g.delta();
  double acc = 0.0;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      double cbar = 0.25 * (c[idx(a, b)] + c[idx(a + 1, b)] + c[idx(a, b + 1)] +
                            c[idx(a + 1, b + 1)]);
      acc += cbar * g.at(a, b) * d2;
    }
  return 4.0 * acc - 1.0;
}

double grid_upper_tail(const GridBuffer& g) {
  const int m = g.m;
  if (m <= 4) throw std::invalid_argument("grid_upper_tail: grid too small");
  const double q = 1.0 - 4.0 / m;
  const double d2 = g.delta() * g.delta();
  double cqq = 0.0;
  for (int a = 0; a < m - 4; ++a)
    for (int b = 0; b < m - 4; ++b) cqq += g.at(a, b) * d2;
  return 2.0 - (1.0 - 2.0 * q + cqq) / (1.0 - q);
}

std::vector<BenchAggregate> aggregate_rows(const std::vector<BenchRow>& rows) {
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const auto& r : rows) groups[{r.method, r.metric}].push_back(r.value);
  std::vector<BenchAggregate> out;
  for (const auto& [key, vals] : groups) {
    BenchAggregate agg;
    agg.method = key.first;
    agg.metric = key.second;
    double mean = std::accumulate(vals.begin(), vals.end(), 0.0) /
                  static_cast<double>(vals.size());
    agg.mean = mean;
    if (vals.size() > 1) {
      double ss = 0.0;
      for (double v : vals) ss += (v - mean) * (v - mean);
      agg.stddev = std::sqrt(ss / static_cast<double>(vals.size() - 1));
    }
    out.push_back(agg);
  }
  return out;
}

std::string spec_case_id(const CopulaSpec& spec) {
  if (spec.is_mixture()) {
    std::string s = "mix[";
    for (std::size_t i = 0; i < spec.mixture_components.size(); ++i) {
      if (i) s += "+";
      s += spec_case_id(spec.mixture_components[i]);
    }
    s += "]";
    if (spec.rotation != Rotation::Deg0)
      s += "r" + std::to_string(rotation_degrees(spec.rotation));
    return s;
  }
  char buf[64];
  std::string s = family_to_string(spec.family);
  if (!spec.params.empty()) {
    std::snprintf(buf, sizeof(buf), "(%.2f", spec.params[0]);
    s += buf;
    for (std::size_t i = 1; i < spec.params.size(); ++i) {
      std::snprintf(buf, sizeof(buf), ",%.2f", spec.params[i]);
      s += buf;
    }
    s += ")";
  }
  if (spec.rotation != Rotation::Deg0)
    s += "r" + std::to_string(rotation_degrees(spec.rotation));
  return s;
}

std::vector<CopulaSpec> default_bench_suite() {
  std::vector<CopulaSpec> suite;
  auto add = [&suite](Family f, std::vector<double> params, int rot = 0) {
    CopulaSpec s;
    s.family = f;
    s.params = std::move(params);
    s.rotation = rotation_from_degrees(rot);
    suite.push_back(s);
  };
  add(Family::Independence, {});
  add(Family::Gaussian, {0.3});
  add(Family::Gaussian, {0.5});
  add(Family::Gaussian, {0.7});
  add(Family::Gaussian, {-0.5});
  add(Family::StudentT, {0.5, 4.0});
  add(Family::StudentT, {0.7, 6.0});
  add(Family::Clayton, {1.0});
  add(Family::Clayton, {3.0});
  add(Family::Clayton, {3.0}, 180);
  add(Family::Clayton, {2.0}, 90);
  add(Family::Gumbel, {1.5});
  add(Family::Gumbel, {2.5});
  add(Family::Gumbel, {2.0}, 270);
  add(Family::Frank, {5.0});
  add(Family::Frank, {-5.0});
  add(Family::Frank, {10.0});
  add(Family::Joe, {2.0});
  add(Family::Joe, {3.0});
  add(Family::Joe, {2.0}, 180);
  auto mix = [&suite](std::vector<std::pair<double, CopulaSpec>> comps, int rot = 0) {
    CopulaSpec s;
    for (auto& [w, c] : comps) {
      s.mixture_weights.push_back(w);
      s.mixture_components.push_back(c);
    }
    s.rotation = rotation_from_degrees(rot);
    suite.push_back(s);
  };
  CopulaSpec clay2, gum2, gauss6, frank4, ind, gauss8;
  clay2.family = Family::Clayton; clay2.params = {2.0};
  gum2.family = Family::Gumbel; gum2.params = {2.0};
  gauss6.family = Family::Gaussian; gauss6.params = {0.6};
  frank4.family = Family::Frank; frank4.params = {4.0};
  ind.family = Family::Independence;
  gauss8.family = Family::Gaussian; gauss8.params = {0.8};
  mix({{0.5, clay2}, {0.5, gum2}});
  mix({{0.5, gauss6}, {0.5, frank4}});
  mix({{0.3, ind}, {0.7, gauss8}});
  mix({{0.5, gauss6}, {0.5, clay2}}, 90);
  return suite;
}

BenchSuiteResult bench_bivariate(const BenchConfig& cfg) {
  if (cfg.suite.empty() || cfg.methods.empty())
    throw std::invalid_argument("bench_bivariate: empty suite or methods");
  if (cfg.repeats < 1) throw std::invalid_argument("bench_bivariate: repeats >= 1");

  struct Case {
    int spec_idx;
    int rep;
    std::uint64_t seed;
  };
  std::vector<Case> cases;
  for (int s = 0; s < static_cast<int>(cfg.suite.size()); ++s)
    for (int r = 0; r < cfg.repeats; ++r) {
      int case_index = s * cfg.repeats + r;
      cases.push_back({s, r,
                       cfg.root_seed * 1000000ULL +
                           static_cast<std::uint64_t>(case_index)});
    }

  // Analytic references per spec, shared across cases.
  std::vector<DensityGrid> truths(cfg.suite.size());
  std::vector<std::optional<double>> taus(cfg.suite.size());
  std::vector<std::optional<double>> lambdas(cfg.suite.size());
  for (std::size_t s = 0; s < cfg.suite.size(); ++s) {
    truths[s] = true_density_grid(cfg.suite[s], cfg.m);
    const CopulaSpec& spec = cfg.suite[s];
    if (!spec.is_mixture()) {
      taus[s] = analytic_tau(spec);
      if (spec.rotation == Rotation::Deg0) lambdas[s] = analytic_upper_tail(spec);
    }
  }

  std::vector<std::vector<BenchRow>> per_case(cases.size());
  parallel_cases(static_cast<int>(cases.size()), cfg.threads, [&](int ci) {
    const Case& c = cases[static_cast<std::size_t>(ci)];
    const CopulaSpec& spec = cfg.suite[static_cast<std::size_t>(c.spec_idx)];
    const std::string case_id =
        spec_case_id(spec) + "#" + std::to_string(c.rep);
    UvSample sample = copula_sample(spec, cfg.n, c.seed);
    PseudoObs obs = pseudo_observations(sample.u, sample.v);
    Histogram h = histogram(obs, cfg.m);
    auto& rows = per_case[static_cast<std::size_t>(ci)];
    for (const std::string& method : cfg.methods) {
      auto t0 = std::chrono::steady_clock::now();
      DensityGrid est;
      if (method == "oracle") {
        est = center_density_grid(spec, cfg.m);
      } else {
        EdgeEstimatorConfig ec;
        ec.kind = estimator_kind_from_string(method);
        RawGrid raw = run_estimator(ec, h);
        est = project(raw, cfg.k_ipfp).first;
      }
      double ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
      rows.push_back({case_id, method, "ise",
                      grid_ise(est, truths[static_cast<std::size_t>(c.spec_idx)])});
      if (taus[static_cast<std::size_t>(c.spec_idx)])
        rows.push_back({case_id, method, "dtau",
                        std::abs(grid_tau(est) -
                                 *taus[static_cast<std::size_t>(c.spec_idx)])});
      if (lambdas[static_cast<std::size_t>(c.spec_idx)])
        rows.push_back({case_id, method, "dlambda",
                        std::abs(grid_upper_tail(est) -
                                 *lambdas[static_cast<std::size_t>(c.spec_idx)])});
      rows.push_back({case_id, method, "time_ms", ms});
    }
  });

  BenchSuiteResult result;
  for (auto& rows : per_case)
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  result.aggregates = aggregate_rows(result.rows);
  return result;
}

namespace {

// Chain-rule KSG total correlation: sum_j I(X_j ; X_{1..j-1}).
double ksg_chain_tc(const DataMatrix& data, int k) {
  const long long n = data.n;
  const int d = data.d;
  // jittered copy, column-major
  std::vector<std::vector<double>> cols(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    auto col = data.column(j);
    double lo = col[0], hi = col[0];
    for (double v : col) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    Rng rng(0xabcdef01ULL + static_cast<std::uint64_t>(j));
    double amp = 1e-10 * (hi - lo);
    for (double& v : col) v += amp * (2.0 * rng.uniform() - 1.0);
    cols[static_cast<std::size_t>(j)] = std::move(col);
  }
  double tc = 0.0;
  std::vector<double> dx(static_cast<std::size_t>(n)), dy(static_cast<std::size_t>(n));
  std::vector<double> joint(static_cast<std::size_t>(n));
  for (int j = 1; j < d; ++j) {
    double acc = 0.0;
    for (long long i = 0; i < n; ++i) {
      for (long long t = 0; t < n; ++t) {
        double mx = 0.0;
        for (int c = 0; c < j; ++c)
          mx = std::max(mx, std::abs(cols[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)] -
                                     cols[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)]));
        dx[static_cast<std::size_t>(t)] = mx;
        dy[static_cast<std::size_t>(t)] =
            std::abs(cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(t)] -
                     cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]);
        joint[static_cast<std::size_t>(t)] =
            std::max(dx[static_cast<std::size_t>(t)], dy[static_cast<std::size_t>(t)]);
      }
      joint[static_cast<std::size_t>(i)] = std::numeric_limits<double>::infinity();
      std::nth_element(joint.begin(), joint.begin() + (k - 1), joint.end());
      double eps = joint[static_cast<std::size_t>(k - 1)];
      long long nx = 0, ny = 0;
      for (long long t = 0; t < n; ++t) {
        if (t == i) continue;
        if (dx[static_cast<std::size_t>(t)] < eps) ++nx;
        if (dy[static_cast<std::size_t>(t)] < eps) ++ny;
      }
      acc += digamma(static_cast<double>(nx + 1)) +
             digamma(static_cast<double>(ny + 1));
    }
    tc += digamma(static_cast<double>(k)) + digamma(static_cast<double>(n)) -
          acc / static_cast<double>(n);
  }
  return tc;
}

}  // namespace

std::vector<TcScalingRow> tc_scaling(const TcScalingConfig& cfg) {
  std::vector<TcScalingRow> out;
  for (int d : cfg.d_list) {
    TcScalingRow row;
    row.d = d;
    row.tc_true = gaussian_tc_from_correlation(ar1_correlation(d, cfg.rho));
    DataMatrix fit_data = gaussian_ar1_sample(
        d, cfg.rho, cfg.n, cfg.seed + static_cast<std::uint64_t>(d));
    DataMatrix heldout = gaussian_ar1_sample(
        d, cfg.rho, cfg.n, cfg.seed + static_cast<std::uint64_t>(d) + 7919ULL);

    auto t0 = std::chrono::steady_clock::now();
    VineModel model = fit(fit_data, cfg.fit);
    row.fit_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    DataMatrix heldout_pit(heldout.n, d);
    for (int j = 0; j < d; ++j) {
      auto col = rank_pit(heldout.column(j));
      for (long long i = 0; i < heldout.n; ++i)
        heldout_pit.at(i, j) = col[static_cast<std::size_t>(i)];
    }
    row.tc_grid = total_correlation(model, heldout_pit).total;
    row.grid_abs_err = std::abs(row.tc_grid - row.tc_true);

    long long nk = std::min(cfg.n, cfg.ksg_subsample);
    DataMatrix ksg_data(nk, d);
    for (long long i = 0; i < nk; ++i)
      for (int j = 0; j < d; ++j) ksg_data.at(i, j) = fit_data.at(i, j);
    row.tc_ksg = ksg_chain_tc(ksg_data, cfg.ksg_k);

    row.tc_gaussian = gaussian_baseline(fit_data).tc;
    out.push_back(row);
  }
  return out;
}

}  // namespace vdc
