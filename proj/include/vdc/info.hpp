#ifndef VDC_INFO_HPP
#define VDC_INFO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "vdc/matrix.hpp"
#include "vdc/vine.hpp"

namespace vdc {

// Plug-in MI: sample mean of the interpolated log density at the
// observations (same interpolation as the vine likelihood).
double grid_mi(const DensityGrid& grid, const PseudoObs& obs,
               bool const_lookup = false);

// Population MI of the grid itself: sum c log c * delta^2.
double grid_mi_integral(const GridBuffer& grid);

struct TcDecomposition {
  double total = 0.0;
  std::vector<std::pair<std::string, double>> per_edge;  // edge id, mean log c
  struct TreeShare {
    int tree_level;
    double signed_sum;
    double absolute_share;
  };
  std::vector<TreeShare> per_tree;
};

// Held-out total correlation with the per-edge/per-tree breakdown.
TcDecomposition total_correlation(const VineModel& model,
                                  const DataMatrix& heldout);

// I(X;Y) = TC(joint) - TC(X block) - TC(Y block) on matched rows.
double block_mi(const VineModel& model_joint, const VineModel& model_x,
                const VineModel& model_y, const DataMatrix& heldout_joint,
                const DataMatrix& heldout_x, const DataMatrix& heldout_y);

// KSG estimator (variant 1) with Chebyshev distances; a deterministic
// 1e-10-amplitude jitter breaks rank ties before counting.
double ksg_mi(std::span<const double> x, std::span<const double> y, int k);

// KSG between vector-valued blocks (columns of x_block / y_block).
double ksg_mi_blocks(const DataMatrix& x_block, const DataMatrix& y_block, int k);

struct GaussianBaselineResult {
  std::vector<std::vector<double>> pairwise_mi;
  double tc = 0.0;
};

// Probit-transformed pseudo-observations -> correlation matrix R;
// pairwise MI = -0.5 log(1-r^2), TC = -0.5 log det R.
GaussianBaselineResult gaussian_baseline(const DataMatrix& data);

// TC of an explicit correlation matrix (used for analytic references).
double gaussian_tc_from_correlation(const std::vector<std::vector<double>>& corr);

enum class SuiteEstimator { Grid, Ksg };

struct SelfConsistencyConfig {
  SuiteEstimator estimator = SuiteEstimator::Grid;
  int trials = 30;
  long long n = 10000;
  std::uint64_t seed = 1;
  int m = 64;
  EdgeEstimatorConfig edge;     // grid-estimator configuration
  int k_ipfp = 15;
  int ksg_k = 5;
  double rho_min = 0.3, rho_max = 0.8;
  std::vector<double> mono_rhos = {0.2, 0.4, 0.6, 0.8};
};

struct SelfConsistencyReport {
  double dpi_violation_rate = 0.0;  // fraction in [0,1]
  double additivity_err = 0.0;      // mean |I_joint - (I1+I2)|
  double monotonicity_err = 0.0;    // mean positive part of decreases
  std::vector<double> dpi_margins;  // I(X;Y) - I(X;Z) per trial
};

// DPI on Gaussian chains X -> Y -> Z, additivity under independent pair
// stacking, monotonicity along an increasing-dependence ladder.
SelfConsistencyReport self_consistency_suite(const SelfConsistencyConfig& cfg);

// Full bivariate pipeline MI: pseudo-observations -> histogram ->
// estimator -> IPFP -> plug-in MI on the same points.
double pipeline_mi(std::span<const double> x, std::span<const double> y,
                   int m, const EdgeEstimatorConfig& est, int k_ipfp,
                   bool const_lookup = false);

}  // namespace vdc

#endif
