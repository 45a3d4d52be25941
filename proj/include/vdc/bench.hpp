#ifndef VDC_BENCH_HPP
#define VDC_BENCH_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vdc/copula.hpp"
#include "vdc/info.hpp"
#include "vdc/ipfp.hpp"
#include "vdc/matrix.hpp"

namespace vdc {

// Gaussian AR(1) process: corr(X_i, X_j) = rho^|i-j|.
DataMatrix gaussian_ar1_sample(int d, double rho, long long n, std::uint64_t seed);
std::vector<std::vector<double>> ar1_correlation(int d, double rho);

// True density averaged per cell (midpoint subsampling).
DensityGrid true_density_grid(const CopulaSpec& spec, int m, int points = 8);
// True density sampled at cell centers (the oracle "method").
DensityGrid center_density_grid(const CopulaSpec& spec, int m);

// Benchmark metrics on a fitted grid.
double grid_ise(const GridBuffer& estimate, const GridBuffer& truth);
// Kendall tau implied by the grid through 4 * int C dC - 1.
double grid_tau(const GridBuffer& grid);
// Corner estimate of lambda_U at q = 1 - 4/m.
double grid_upper_tail(const GridBuffer& grid);

struct BenchRow {
  std::string case_id;
  std::string method;
  std::string metric;
  double value = 0.0;
};

struct BenchAggregate {
  std::string method;
  std::string metric;
  double mean = 0.0;
  double stddev = 0.0;
};

struct BenchSuiteResult {
  std::vector<BenchRow> rows;
  std::vector<BenchAggregate> aggregates;
};

std::vector<BenchAggregate> aggregate_rows(const std::vector<BenchRow>& rows);

struct BenchConfig {
  std::vector<CopulaSpec> suite;
  std::vector<std::string> methods;  // hist | shrink | kde | oracle
  long long n = 2000;
  int m = 64;
  int k_ipfp = 15;
  std::uint64_t root_seed = 1;
  int repeats = 1;  // per-case seed = root_seed * 10^6 + case_index
  int threads = 1;
};

// Per (spec, method, seed): sample, run the bivariate pipeline, score
// ISE / |d tau| / |d lambda_U| / time against the analytic oracles.
BenchSuiteResult bench_bivariate(const BenchConfig& cfg);

// Default 24-spec evaluation suite (families x parameters x rotations).
std::vector<CopulaSpec> default_bench_suite();
std::string spec_case_id(const CopulaSpec& spec);

struct TcScalingRow {
  int d = 0;
  double tc_true = 0.0;
  double tc_grid = 0.0;
  double tc_ksg = 0.0;
  double tc_gaussian = 0.0;
  double grid_abs_err = 0.0;
  double fit_seconds = 0.0;
};

struct TcScalingConfig {
  std::vector<int> d_list = {5, 10, 20};
  double rho = 0.7;
  long long n = 20000;
  std::uint64_t seed = 1;
  FitConfig fit;                 // estimator defaults chosen by the caller
  long long ksg_subsample = 4000;  // cap for the O(n^2 d) KSG chain
  int ksg_k = 5;
};

// Fit a D-vine per dimension on AR(1) data, evaluate held-out TC, and run
// the KSG chain-rule and Gaussian-baseline references.
std::vector<TcScalingRow> tc_scaling(const TcScalingConfig& cfg);

}  // namespace vdc

#endif
