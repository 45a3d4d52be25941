#ifndef VDC_MATRIX_HPP
#define VDC_MATRIX_HPP

#include <span>
#include <vector>

namespace vdc {

// Dense row-major n x d matrix of doubles.
struct DataMatrix {
  long long n = 0;
  int d = 0;
  std::vector<double> values;

  DataMatrix() = default;
  DataMatrix(long long n_, int d_)
      : n(n_), d(d_), values(static_cast<std::size_t>(n_) * d_, 0.0) {}

  double at(long long i, int j) const {
    return values[static_cast<std::size_t>(i) * d + j];
  }
  double& at(long long i, int j) {
    return values[static_cast<std::size_t>(i) * d + j];
  }
  std::span<const double> row(long long i) const {
    return {values.data() + static_cast<std::size_t>(i) * d,
            static_cast<std::size_t>(d)};
  }
  std::vector<double> column(int j) const {
    std::vector<double> col(static_cast<std::size_t>(n));
    for (long long i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = at(i, j);
    return col;
  }
};

}  // namespace vdc

#endif
