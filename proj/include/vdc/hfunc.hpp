#ifndef VDC_HFUNC_HPP
#define VDC_HFUNC_HPP

#include <vector>

#include "vdc/ipfp.hpp"

namespace vdc {

enum class HSide { UGivenV, VGivenU };

// Cached conditional-CDF tables. Each conditioning cell owns m+1 cumulative
// node values, stored contiguously: first entry 0, last entry exactly 1
// after the per-cell rescale, non-decreasing in between.
struct HTables {
  int m = 0;
  std::vector<double> h_u_given_v;  // [v_cell * (m+1) + u_node]
  std::vector<double> h_v_given_u;  // [u_cell * (m+1) + v_node]

  double ugv(int u_node, int v_cell) const {
    return h_u_given_v[static_cast<std::size_t>(v_cell) * (m + 1) + u_node];
  }
  double vgu(int v_node, int u_cell) const {
    return h_v_given_u[static_cast<std::size_t>(u_cell) * (m + 1) + v_node];
  }
};

// Cumulative sums of the grid along each axis. Throws std::invalid_argument
// when the worse marginal deviation exceeds 1e-2.
HTables build_h_tables(const DensityGrid& grid);

// Conditional CDF with linear interpolation in the target coordinate and
// nearest-cell selection in the conditioning coordinate.
double h_forward(const HTables& t, HSide side, double target, double cond);

// Piecewise-linear inverse; ties in flat regions resolve to the smallest
// preimage.
double h_inverse(const HTables& t, HSide side, double w, double cond);

}  // namespace vdc

#endif
