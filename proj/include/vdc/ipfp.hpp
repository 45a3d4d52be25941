#ifndef VDC_IPFP_HPP
#define VDC_IPFP_HPP

#include <optional>
#include <vector>

#include "vdc/estimator.hpp"
#include "vdc/transform.hpp"

namespace vdc {

// m x m density with unit mass and uniform marginals up to the projection
// residual reported alongside it.
struct DensityGrid : GridBuffer {};

struct IpfpReport {
  int iterations = 0;
  std::vector<double> max_row_err;  // per completed iteration
  std::vector<double> max_col_err;
  double mass_err = 0.0;
  double wall_time = 0.0;  // seconds
};

struct ValidityReport {
  double max_row_dev = 0.0;
  double max_col_dev = 0.0;
  double mass_err = 0.0;
};

// In-place marginal scalings; a row pass makes every row marginal exactly
// uniform, a column pass likewise for columns.
void ipfp_row_pass(GridBuffer& g);
void ipfp_col_pass(GridBuffer& g);

// Alternating row/column scaling (row first, column last within each
// iteration) for k iterations, stopping early once both marginal errors
// fall below `tol` when given. Output mass is normalized to 1.
std::pair<DensityGrid, IpfpReport> project(const RawGrid& raw, int k,
                                           std::optional<double> tol = std::nullopt);

ValidityReport validity_report(const GridBuffer& grid);

// sum p log(p/q) delta^2 with 0 log 0 = 0; q must be strictly positive.
double kl_divergence(const GridBuffer& p, const GridBuffer& q);

}  // namespace vdc

#endif
