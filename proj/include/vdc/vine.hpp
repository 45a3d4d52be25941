#ifndef VDC_VINE_HPP
#define VDC_VINE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vdc/estimator.hpp"
#include "vdc/hfunc.hpp"
#include "vdc/ipfp.hpp"
#include "vdc/kendall.hpp"
#include "vdc/matrix.hpp"

namespace vdc {

enum class StructureKind { Dvine, Rvine };

StructureKind structure_from_string(const std::string& s);
std::string structure_to_string(StructureKind k);

struct FitStats {
  double tau_hat = 0.0;
  long long n_used = 0;
  double mean_log_density = 0.0;
};

// One pair-copula edge (j,k|D). The grid's u axis belongs to variable j.
// parent_* wire the conditional-margin dataflow: the j-side input comes
// from edge parent_j's margin for variable j (side 0 = that edge's own j
// margin, 1 = its k margin); parent -1 reads the raw coordinate.
struct VineEdge {
  int j = 0, k = 0;
  std::vector<int> conditioning;  // sorted
  int tree_level = 1;
  int parent_j = -1, parent_j_side = 0;
  int parent_k = -1, parent_k_side = 0;
  DensityGrid grid;
  HTables htables;
  FitStats stats;
};

struct FitConfig {
  StructureKind structure = StructureKind::Dvine;
  int m = 64;
  int k_ipfp = 15;
  EdgeEstimatorConfig estimator;
  long long min_samples = 100;
  int max_tree_level = 0;    // 0 = no truncation
  bool const_lookup = false; // piecewise-constant log-density lookup
  int threads = 1;
};

struct VineModel {
  int d = 0;
  int m = 0;
  StructureKind structure = StructureKind::Dvine;
  std::vector<int> order;        // D-vine path; empty for R-vine
  std::vector<VineEdge> edges;   // grouped by ascending tree level
  FitConfig config;
};

// Dissmann-style fit: tree 1 structure from pairwise |tau| (MST for R-vine,
// greedy path for D-vine), per-edge histogram -> estimator -> IPFP ->
// h-tables, conditional pseudo-observations pushed forward per tree.
// Columns are rank-transformed internally, so any strictly increasing
// per-column transform of the input yields the identical model.
VineModel fit(const DataMatrix& data, const FitConfig& cfg);

// Log-density interpolation used across likelihood and information code:
// bilinear in log density between cell centers, clamped at the border
// cells; piecewise-constant lookup when const_lookup is set.
double grid_log_density(const GridBuffer& grid, double u, double v,
                        bool const_lookup);

// Sum of log edge densities at the recursively conditioned coordinates
// (copula-space input).
double log_likelihood(const VineModel& model, std::span<const double> u_row);

// Per-edge mean log density over a copula-space dataset, recursion shared
// with log_likelihood.
std::vector<double> edge_mean_log_density(const VineModel& model,
                                          const DataMatrix& u_data);

// Inverse-h sampling; rows are bit-reproducible for a given seed.
DataMatrix sample_model(const VineModel& model, long long n, std::uint64_t seed);

// Copy with the grids of the given tree levels replaced by the uniform
// density while the cached h-tables (and hence the conditioning recursion)
// stay untouched: the levels' log-density contribution drops to exactly 0.
VineModel uniformize_trees(const VineModel& model, const std::vector<int>& levels);

// Regular-vine structure checks (tree sizes, spanning trees, proximity
// condition, D-vine path shape). Throws std::logic_error on violation.
void check_structure(const VineModel& model);

void save_model(const VineModel& model, const std::string& path);
VineModel load_model(const std::string& path);

nlohmann::json fit_config_to_json(const FitConfig& cfg);
FitConfig fit_config_from_json(const nlohmann::json& j);

// Greedy D-vine ordering on |tau|: start from the strongest pair, extend
// whichever path endpoint has the strongest unused partner.
std::vector<int> dvine_order_greedy(const std::vector<std::vector<double>>& tau);

}  // namespace vdc

#endif
