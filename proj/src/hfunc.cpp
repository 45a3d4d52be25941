#include "vdc/hfunc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vdc {

namespace {

int cond_cell(double cond, int m) {
  if (!(cond >= 0.0 && cond <= 1.0))
    throw std::domain_error("h-function: conditioning value outside [0,1]");
  return std::min(static_cast<int>(cond * m), m - 1);
}

}  // namespace

HTables build_h_tables(const DensityGrid& grid) {
  ValidityReport v = validity_report(grid);
  if (std::max(v.max_row_dev, v.max_col_dev) > 1e-2)
    throw std::invalid_argument(
        "build_h_tables: marginal deviation exceeds 1e-2; project first");
  const int m = grid.m;
  const double delta = grid.delta();
  HTables t;
  t.m = m;
  t.h_u_given_v.assign(static_cast<std::size_t>(m) * (m + 1), 0.0);
  t.h_v_given_u.assign(static_cast<std::size_t>(m) * (m + 1), 0.0);
  for (int b = 0; b < m; ++b) {
    double* col = &t.h_u_given_v[static_cast<std::size_t>(b) * (m + 1)];
    double acc = 0.0;
    col[0] = 0.0;
    for (int a = 0; a < m; ++a) {
      acc += grid.at(a, b) * delta;
      col[a + 1] = acc;
    }
    double scale = 1.0 / acc;  // force an exact conditional CDF
    for (int a = 1; a <= m; ++a) col[a] *= scale;
    col[m] = 1.0;
  }
  for (int a = 0; a < m; ++a) {
    double* row = &t.h_v_given_u[static_cast<std::size_t>(a) * (m + 1)];
    double acc = 0.0;
    row[0] = 0.0;
    for (int b = 0; b < m; ++b) {
      acc += grid.at(a, b) * delta;
      row[b + 1] = acc;
    }
    double scale = 1.0 / acc;
    for (int b = 1; b <= m; ++b) row[b] *= scale;
    row[m] = 1.0;
  }
  return t;
}

double h_forward(const HTables& t, HSide side, double target, double cond) {
  if (!(target >= 0.0 && target <= 1.0))
    throw std::domain_error("h_forward: target outside [0,1]");
  const int m = t.m;
  const int c = cond_cell(cond, m);
  const double* tab = (side == HSide::UGivenV)
                          ? &t.h_u_given_v[static_cast<std::size_t>(c) * (m + 1)]
                          : &t.h_v_given_u[static_cast<std::size_t>(c) * (m + 1)];
  if (target >= 1.0) return 1.0;
  double s = target * m;
  int node = static_cast<int>(s);
  double w = s - node;
  return tab[node] + w * (tab[node + 1] - tab[node]);
}

double h_inverse(const HTables& t, HSide side, double w, double cond) {
  if (!(w >= 0.0 && w <= 1.0))
    throw std::domain_error("h_inverse: probability outside [0,1]");
  const int m = t.m;
  const int c = cond_cell(cond, m);
  const double* tab = (side == HSide::UGivenV)
                          ? &t.h_u_given_v[static_cast<std::size_t>(c) * (m + 1)]
                          : &t.h_v_given_u[static_cast<std::size_t>(c) * (m + 1)];
  // Smallest node with tab[node+1] >= w.
  const double* pos = std::lower_bound(tab + 1, tab + m + 1, w);
  int node = static_cast<int>(pos - tab) - 1;
  double lo = tab[node], hi = tab[node + 1];
  double frac = (hi > lo) ? (w - lo) / (hi - lo) : 0.0;
  return (node + frac) / m;
}

}  // namespace vdc
