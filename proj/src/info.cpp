#include "vdc/info.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "vdc/errors.hpp"
#include "vdc/rng.hpp"
#include "vdc/stats.hpp"

namespace vdc {

double grid_mi(const DensityGrid& grid, const PseudoObs& obs, bool const_lookup) {
  if (obs.n < 1) throw std::invalid_argument("grid_mi: empty observations");
  double acc = 0.0;
  for (long long i = 0; i < obs.n; ++i)
    acc += grid_log_density(grid, obs.u[static_cast<std::size_t>(i)],
                            obs.v[static_cast<std::size_t>(i)], const_lookup);
  return acc / static_cast<double>(obs.n);
}

double grid_mi_integral(const GridBuffer& grid) {
  double acc = 0.0;
  const double d2 = grid.delta() * grid.delta();
  for (double v : grid.values)
    if (v > 0.0) acc += v * std::log(v) * d2;
  return acc;
}

namespace {

std::string edge_label(const VineEdge& e) {
  std::string s = "(" + std::to_string(e.j) + "," + std::to_string(e.k);
  if (!e.conditioning.empty()) {
    s += "|";
    for (std::size_t i = 0; i < e.conditioning.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(e.conditioning[i]);
    }
  }
  return s + ")";
}

}  // namespace

TcDecomposition total_correlation(const VineModel& model,
                                  const DataMatrix& heldout) {
  std::vector<double> means = edge_mean_log_density(model, heldout);
  TcDecomposition out;
  double abs_total = 0.0;
  std::vector<double> tree_signed(static_cast<std::size_t>(model.d), 0.0);
  std::vector<double> tree_abs(static_cast<std::size_t>(model.d), 0.0);
  for (std::size_t i = 0; i < means.size(); ++i) {
    const VineEdge& e = model.edges[i];
    out.total += means[i];
    out.per_edge.emplace_back(edge_label(e), means[i]);
    tree_signed[static_cast<std::size_t>(e.tree_level)] += means[i];
    tree_abs[static_cast<std::size_t>(e.tree_level)] += std::abs(means[i]);
    abs_total += std::abs(means[i]);
  }
  for (int level = 1; level <= model.d - 1; ++level) {
    TcDecomposition::TreeShare share;
    share.tree_level = level;
    share.signed_sum = tree_signed[static_cast<std::size_t>(level)];
    share.absolute_share =
        abs_total > 0.0 ? tree_abs[static_cast<std::size_t>(level)] / abs_total
                        : 0.0;
    out.per_tree.push_back(share);
  }
  return out;
}

double block_mi(const VineModel& model_joint, const VineModel& model_x,
                const VineModel& model_y, const DataMatrix& heldout_joint,
                const DataMatrix& heldout_x, const DataMatrix& heldout_y) {
  if (heldout_joint.d != heldout_x.d + heldout_y.d)
    throw std::invalid_argument("block_mi: block dimensions do not add up");
  if (heldout_joint.n != heldout_x.n || heldout_joint.n != heldout_y.n)
    throw std::invalid_argument("block_mi: held-out row counts differ");
  double tc_joint = total_correlation(model_joint, heldout_joint).total;
  // A one-variable block carries no dependence; its model is ignored.
  double tc_x =
      heldout_x.d >= 2 ? total_correlation(model_x, heldout_x).total : 0.0;
  double tc_y =
      heldout_y.d >= 2 ? total_correlation(model_y, heldout_y).total : 0.0;
  return tc_joint - tc_x - tc_y;
}

namespace {

std::vector<double> jitter_column(std::span<const double> x, std::uint64_t seed) {
  double lo = x[0], hi = x[0];
  for (double v : x) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double amp = 1e-10 * (hi - lo);
  Rng rng(seed);
  std::vector<double> out(x.begin(), x.end());
  if (amp > 0.0)
    for (double& v : out) v += amp * (2.0 * rng.uniform() - 1.0);
  return out;
}

// Distance to the k-th nearest neighbour (Chebyshev, excluding self) for
// every point of a bivariate sample, via an outward sweep over the
// x-sorted order.
std::vector<double> knn_eps_bivariate(const std::vector<double>& x,
                                      const std::vector<double>& y, int k) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x[order[i]];
    ys[i] = y[order[i]];
  }
  std::vector<double> best(static_cast<std::size_t>(k));
  std::vector<double> eps(n);
  for (std::size_t i = 0; i < n; ++i) {
    int filled = 0;
    auto consider = [&](std::size_t j) {
      double dist = std::max(std::abs(xs[j] - xs[i]), std::abs(ys[j] - ys[i]));
      if (filled < k) {
        best[static_cast<std::size_t>(filled++)] = dist;
        if (filled == k) std::sort(best.begin(), best.end());
        return;
      }
      if (dist < best[static_cast<std::size_t>(k - 1)]) {
        int pos = k - 1;
        while (pos > 0 && best[static_cast<std::size_t>(pos - 1)] > dist) {
          best[static_cast<std::size_t>(pos)] = best[static_cast<std::size_t>(pos - 1)];
          --pos;
        }
        best[static_cast<std::size_t>(pos)] = dist;
      }
    };
    std::ptrdiff_t l = static_cast<std::ptrdiff_t>(i) - 1;
    std::ptrdiff_t r = static_cast<std::ptrdiff_t>(i) + 1;
    for (;;) {
      double dl = l >= 0 ? xs[i] - xs[static_cast<std::size_t>(l)]
                         : std::numeric_limits<double>::infinity();
      double dr = r < static_cast<std::ptrdiff_t>(n)
                      ? xs[static_cast<std::size_t>(r)] - xs[i]
                      : std::numeric_limits<double>::infinity();
      double cut = filled == k ? best[static_cast<std::size_t>(k - 1)]
                               : std::numeric_limits<double>::infinity();
      if (dl >= cut && dr >= cut) break;
      if (std::isinf(dl) && std::isinf(dr)) break;
      if (dl <= dr) {
        consider(static_cast<std::size_t>(l));
        --l;
      } else {
        consider(static_cast<std::size_t>(r));
        ++r;
      }
    }
    eps[i] = best[static_cast<std::size_t>(k - 1)];
  }
  std::vector<double> eps_orig(n);
  for (std::size_t i = 0; i < n; ++i) eps_orig[order[i]] = eps[i];
  return eps_orig;
}

// Count of points with |v - v_i| strictly below eps_i, via a sorted copy.
long long marginal_count(const std::vector<double>& sorted, double center,
                         double eps) {
  auto lo = std::lower_bound(sorted.begin(), sorted.end(), center - eps);
  auto hi = std::upper_bound(sorted.begin(), sorted.end(), center + eps);
  long long cnt = hi - lo;
  // shrink the closed range [center-eps, center+eps] to the open one
  while (lo != hi && *lo <= center - eps) {
    ++lo;
    --cnt;
  }
  auto it = hi;
  while (it != lo) {
    --it;
    if (*it >= center + eps)
      --cnt;
    else
      break;
  }
  return cnt - 1;  // exclude self
}

}  // namespace

double ksg_mi(std::span<const double> x, std::span<const double> y, int k) {
  const std::size_t n = x.size();
  if (n != y.size()) throw std::invalid_argument("ksg_mi: length mismatch");
  if (k < 1 || static_cast<long long>(n) <= k)
    throw std::invalid_argument("ksg_mi: need n > k >= 1");
  std::vector<double> xj = jitter_column(x, 0x9e3779b97f4a7c15ULL);
  std::vector<double> yj = jitter_column(y, 0xc2b2ae3d27d4eb4fULL);
  std::vector<double> eps = knn_eps_bivariate(xj, yj, k);
  std::vector<double> xs = xj, ys = yj;
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    long long nx = marginal_count(xs, xj[i], eps[i]);
    long long ny = marginal_count(ys, yj[i], eps[i]);
    acc += digamma(static_cast<double>(nx + 1)) +
           digamma(static_cast<double>(ny + 1));
  }
  return digamma(static_cast<double>(k)) + digamma(static_cast<double>(n)) -
         acc / static_cast<double>(n);
}

double ksg_mi_blocks(const DataMatrix& x_block, const DataMatrix& y_block, int k) {
  const long long n = x_block.n;
  if (y_block.n != n) throw std::invalid_argument("ksg_mi_blocks: row mismatch");
  if (k < 1 || n <= k) throw std::invalid_argument("ksg_mi_blocks: need n > k");
  const int dx = x_block.d, dy = y_block.d;
  // jittered copies, column-major for the distance loops
  std::vector<std::vector<double>> xc(static_cast<std::size_t>(dx));
  std::vector<std::vector<double>> yc(static_cast<std::size_t>(dy));
  for (int c = 0; c < dx; ++c)
    xc[static_cast<std::size_t>(c)] =
        jitter_column(x_block.column(c), 0x1234567ULL + static_cast<std::uint64_t>(c));
  for (int c = 0; c < dy; ++c)
    yc[static_cast<std::size_t>(c)] =
        jitter_column(y_block.column(c), 0x89abcdefULL + static_cast<std::uint64_t>(c));

  auto block_dist = [](const std::vector<std::vector<double>>& cols,
                       long long i, long long j) {
    double d = 0.0;
    for (const auto& col : cols)
      d = std::max(d, std::abs(col[static_cast<std::size_t>(i)] -
                               col[static_cast<std::size_t>(j)]));
    return d;
  };

  double acc = 0.0;
  std::vector<double> best(static_cast<std::size_t>(k));
  for (long long i = 0; i < n; ++i) {
    int filled = 0;
    for (long long j = 0; j < n; ++j) {
      if (j == i) continue;
      double d = std::max(block_dist(xc, i, j), block_dist(yc, i, j));
      if (filled < k) {
        best[static_cast<std::size_t>(filled++)] = d;
        if (filled == k) std::sort(best.begin(), best.end());
      } else if (d < best[static_cast<std::size_t>(k - 1)]) {
        int pos = k - 1;
        while (pos > 0 && best[static_cast<std::size_t>(pos - 1)] > d) {
          best[static_cast<std::size_t>(pos)] = best[static_cast<std::size_t>(pos - 1)];
          --pos;
        }
        best[static_cast<std::size_t>(pos)] = d;
      }
    }
    double eps = best[static_cast<std::size_t>(k - 1)];
    long long nx = 0, ny = 0;
    for (long long j = 0; j < n; ++j) {
      if (j == i) continue;
      if (block_dist(xc, i, j) < eps) ++nx;
      if (block_dist(yc, i, j) < eps) ++ny;
    }
    acc += digamma(static_cast<double>(nx + 1)) +
           digamma(static_cast<double>(ny + 1));
  }
  return digamma(static_cast<double>(k)) + digamma(static_cast<double>(n)) -
         acc / static_cast<double>(n);
}

namespace {

// log det of a correlation matrix via Cholesky; throws on non-PD input.
double log_det_chol(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  double logdet = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i][j];
      for (std::size_t t = 0; t < j; ++t) s -= a[i][t] * a[j][t];
      if (i == j) {
        if (s <= 0.0)
          throw NumericError("gaussian_baseline: correlation matrix singular");
        a[i][i] = std::sqrt(s);
        logdet += 2.0 * std::log(a[i][i]);
      } else {
        a[i][j] = s / a[j][j];
      }
    }
  }
  return logdet;
}

}  // namespace

double gaussian_tc_from_correlation(
    const std::vector<std::vector<double>>& corr) {
  return -0.5 * log_det_chol(corr);
}

GaussianBaselineResult gaussian_baseline(const DataMatrix& data) {
  if (data.n <= data.d)
    throw std::invalid_argument("gaussian_baseline: need n > d");
  const int d = data.d;
  const long long n = data.n;
  std::vector<std::vector<double>> z(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    std::vector<double> pit = rank_pit(data.column(j));
    z[static_cast<std::size_t>(j)].resize(static_cast<std::size_t>(n));
    for (long long i = 0; i < n; ++i)
      z[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
          norm_quantile(pit[static_cast<std::size_t>(i)]);
  }
  std::vector<std::vector<double>> corr(
      static_cast<std::size_t>(d), std::vector<double>(static_cast<std::size_t>(d), 1.0));
  std::vector<double> mean(static_cast<std::size_t>(d), 0.0), var(static_cast<std::size_t>(d), 0.0);
  for (int j = 0; j < d; ++j) {
    for (double v : z[static_cast<std::size_t>(j)]) mean[static_cast<std::size_t>(j)] += v;
    mean[static_cast<std::size_t>(j)] /= static_cast<double>(n);
    for (double v : z[static_cast<std::size_t>(j)]) {
      double c = v - mean[static_cast<std::size_t>(j)];
      var[static_cast<std::size_t>(j)] += c * c;
    }
  }
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b) {
      double cov = 0.0;
      for (long long i = 0; i < n; ++i)
        cov += (z[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] -
                mean[static_cast<std::size_t>(a)]) *
               (z[static_cast<std::size_t>(b)][static_cast<std::size_t>(i)] -
                mean[static_cast<std::size_t>(b)]);
      double r = cov / std::sqrt(var[static_cast<std::size_t>(a)] *
                                 var[static_cast<std::size_t>(b)]);
      corr[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = r;
      corr[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = r;
    }
  GaussianBaselineResult out;
  out.pairwise_mi.assign(static_cast<std::size_t>(d),
                         std::vector<double>(static_cast<std::size_t>(d), 0.0));
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      if (a != b) {
        double r = corr[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
        out.pairwise_mi[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
            -0.5 * std::log1p(-r * r);
      }
  out.tc = gaussian_tc_from_correlation(corr);
  return out;
}

double pipeline_mi(std::span<const double> x, std::span<const double> y, int m,
                   const EdgeEstimatorConfig& est, int k_ipfp,
                   bool const_lookup) {
  PseudoObs obs = pseudo_observations(x, y);
  Histogram h = histogram(obs, m);
  RawGrid raw = run_estimator(est, h);
  auto [grid, report] = project(raw, k_ipfp);
  return grid_mi(grid, obs, const_lookup);
}

namespace {

struct ChainSample {
  std::vector<double> x, y, z;
};

ChainSample gaussian_chain(long long n, double rho1, double rho2, Rng& rng) {
  ChainSample s;
  s.x.resize(static_cast<std::size_t>(n));
  s.y.resize(static_cast<std::size_t>(n));
  s.z.resize(static_cast<std::size_t>(n));
  double s1 = std::sqrt(1.0 - rho1 * rho1), s2 = std::sqrt(1.0 - rho2 * rho2);
  for (long long i = 0; i < n; ++i) {
    double x = rng.normal();
    double y = rho1 * x + s1 * rng.normal();
    double z = rho2 * y + s2 * rng.normal();
    s.x[static_cast<std::size_t>(i)] = x;
    s.y[static_cast<std::size_t>(i)] = y;
    s.z[static_cast<std::size_t>(i)] = z;
  }
  return s;
}

double suite_pair_mi(const SelfConsistencyConfig& cfg,
                     std::span<const double> x, std::span<const double> y) {
  if (cfg.estimator == SuiteEstimator::Grid)
    return pipeline_mi(x, y, cfg.m, cfg.edge, cfg.k_ipfp);
  return ksg_mi(x, y, cfg.ksg_k);
}

// Held-out block MI through D-vine fits for the grid estimator.
double suite_block_mi_grid(const SelfConsistencyConfig& cfg,
                           const DataMatrix& fit_data,
                           const DataMatrix& eval_data) {
  FitConfig fc;
  fc.structure = StructureKind::Dvine;
  fc.m = cfg.m;
  fc.k_ipfp = cfg.k_ipfp;
  fc.estimator = cfg.edge;
  auto split = [](const DataMatrix& src, int c0, int c1) {
    DataMatrix out(src.n, 2);
    for (long long i = 0; i < src.n; ++i) {
      out.at(i, 0) = src.at(i, c0);
      out.at(i, 1) = src.at(i, c1);
    }
    return out;
  };
  // columns: x1 x2 y1 y2; X block = (0,1), Y block = (2,3)
  VineModel joint = fit(fit_data, fc);
  VineModel mx = fit(split(fit_data, 0, 1), fc);
  VineModel my = fit(split(fit_data, 2, 3), fc);
  auto pit_cols = [](const DataMatrix& src) {
    DataMatrix out(src.n, src.d);
    for (int j = 0; j < src.d; ++j) {
      auto col = rank_pit(src.column(j));
      for (long long i = 0; i < src.n; ++i)
        out.at(i, j) = col[static_cast<std::size_t>(i)];
    }
    return out;
  };
  DataMatrix eval_joint = pit_cols(eval_data);
  DataMatrix eval_x = split(eval_joint, 0, 1);
  DataMatrix eval_y = split(eval_joint, 2, 3);
  return block_mi(joint, mx, my, eval_joint, eval_x, eval_y);
}

}  // namespace

SelfConsistencyReport self_consistency_suite(const SelfConsistencyConfig& cfg) {
  if (cfg.trials < 1) throw std::invalid_argument("self_consistency: trials >= 1");
  SelfConsistencyReport rep;
  int violations = 0;
  double add_acc = 0.0, mono_acc = 0.0;
  long long mono_steps = 0;

  for (int trial = 0; trial < cfg.trials; ++trial) {
    Rng rng(cfg.seed + static_cast<std::uint64_t>(trial));

    // DPI: Markov chain X -> Y -> Z.
    double rho1 = cfg.rho_min + (cfg.rho_max - cfg.rho_min) * rng.uniform();
    double rho2 = cfg.rho_min + (cfg.rho_max - cfg.rho_min) * rng.uniform();
    ChainSample chain = gaussian_chain(cfg.n, rho1, rho2, rng);
    double mi_xy = suite_pair_mi(cfg, chain.x, chain.y);
    double mi_xz = suite_pair_mi(cfg, chain.x, chain.z);
    rep.dpi_margins.push_back(mi_xy - mi_xz);
    if (mi_xz > mi_xy) ++violations;

    // Additivity: two independent rho = 0.7 pairs stacked.
    {
      const double rho = 0.7;
      const double sr = std::sqrt(1.0 - rho * rho);
      long long total = 2 * cfg.n;
      DataMatrix all(total, 4);
      for (long long i = 0; i < total; ++i) {
        double x1 = rng.normal(), x2 = rng.normal();
        all.at(i, 0) = x1;
        all.at(i, 1) = x2;
        all.at(i, 2) = rho * x1 + sr * rng.normal();
        all.at(i, 3) = rho * x2 + sr * rng.normal();
      }
      // columns reordered to x-block then y-block: (x1, x2, y1, y2)
      DataMatrix fit_half(cfg.n, 4), eval_half(cfg.n, 4);
      for (long long i = 0; i < cfg.n; ++i)
        for (int j = 0; j < 4; ++j) {
          fit_half.at(i, j) = all.at(i, j);
          eval_half.at(i, j) = all.at(cfg.n + i, j);
        }
      double joint_mi, mi1, mi2;
      if (cfg.estimator == SuiteEstimator::Grid) {
        joint_mi = suite_block_mi_grid(cfg, fit_half, eval_half);
        // pair TC evaluated the same held-out way (d = 2 vines)
        FitConfig fc;
        fc.structure = StructureKind::Dvine;
        fc.m = cfg.m;
        fc.k_ipfp = cfg.k_ipfp;
        fc.estimator = cfg.edge;
        auto pair_mi = [&](int cx, int cy) {
          DataMatrix pf(cfg.n, 2), pe(cfg.n, 2);
          auto ex = rank_pit(eval_half.column(cx));
          auto ey = rank_pit(eval_half.column(cy));
          for (long long i = 0; i < cfg.n; ++i) {
            pf.at(i, 0) = fit_half.at(i, cx);
            pf.at(i, 1) = fit_half.at(i, cy);
            pe.at(i, 0) = ex[static_cast<std::size_t>(i)];
            pe.at(i, 1) = ey[static_cast<std::size_t>(i)];
          }
          VineModel mdl = fit(pf, fc);
          return total_correlation(mdl, pe).total;
        };
        mi1 = pair_mi(0, 2);
        mi2 = pair_mi(1, 3);
      } else {
        DataMatrix xb(total, 2), yb(total, 2);
        for (long long i = 0; i < total; ++i) {
          xb.at(i, 0) = all.at(i, 0);
          xb.at(i, 1) = all.at(i, 1);
          yb.at(i, 0) = all.at(i, 2);
          yb.at(i, 1) = all.at(i, 3);
        }
        joint_mi = ksg_mi_blocks(xb, yb, cfg.ksg_k);
        mi1 = ksg_mi(all.column(0), all.column(2), cfg.ksg_k);
        mi2 = ksg_mi(all.column(1), all.column(3), cfg.ksg_k);
      }
      add_acc += std::abs(joint_mi - (mi1 + mi2));
    }

    // Monotonicity: common random numbers, dependence increasing in rho.
    {
      std::vector<double> x(static_cast<std::size_t>(cfg.n)),
          eps(static_cast<std::size_t>(cfg.n));
      for (long long i = 0; i < cfg.n; ++i) {
        x[static_cast<std::size_t>(i)] = rng.normal();
        eps[static_cast<std::size_t>(i)] = rng.normal();
      }
      double prev = 0.0;
      for (std::size_t s = 0; s < cfg.mono_rhos.size(); ++s) {
        double rho = cfg.mono_rhos[s];
        std::vector<double> y(static_cast<std::size_t>(cfg.n));
        double sr = std::sqrt(1.0 - rho * rho);
        for (long long i = 0; i < cfg.n; ++i)
          y[static_cast<std::size_t>(i)] =
              rho * x[static_cast<std::size_t>(i)] + sr * eps[static_cast<std::size_t>(i)];
        double mi = suite_pair_mi(cfg, x, y);
        if (s > 0) {
          mono_acc += std::max(0.0, prev - mi);
          ++mono_steps;
        }
        prev = mi;
      }
    }
  }

  rep.dpi_violation_rate = static_cast<double>(violations) / cfg.trials;
  rep.additivity_err = add_acc / cfg.trials;
  rep.monotonicity_err = mono_steps > 0 ? mono_acc / static_cast<double>(mono_steps) : 0.0;
  return rep;
}

}  // namespace vdc
