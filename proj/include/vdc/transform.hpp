#ifndef VDC_TRANSFORM_HPP
#define VDC_TRANSFORM_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace vdc {

// Square grid of doubles, row-major; index a runs along the u axis and
// b along the v axis, so values[a*m+b] covers the cell
// [a/m,(a+1)/m) x [b/m,(b+1)/m).
struct GridBuffer {
  int m = 0;
  std::vector<double> values;

  GridBuffer() = default;
  GridBuffer(int m_, double fill)
      : m(m_), values(static_cast<std::size_t>(m_) * m_, fill) {}

  double delta() const { return 1.0 / m; }
  double& at(int a, int b) { return values[static_cast<std::size_t>(a) * m + b]; }
  double at(int a, int b) const {
    return values[static_cast<std::size_t>(a) * m + b];
  }
  double total_mass() const;
};

// Rank pseudo-observations of a bivariate sample; coordinates are
// r/(n+1) with midranks for ties.
struct PseudoObs {
  std::vector<double> u, v;
  long long n = 0;
};

// Density-scale histogram: sum_ab values[a,b] * delta^2 == 1.
struct Histogram : GridBuffer {
  long long n = 0;
};

enum class CorruptVariant { Direct, UniformMix, Gaussian, Multinomial };

CorruptVariant corrupt_variant_from_string(const std::string& s);

// Midrank probability integral transform of one column: rank/(n+1).
std::vector<double> rank_pit(std::span<const double> x);

PseudoObs pseudo_observations(std::span<const double> x,
                              std::span<const double> y);

Histogram histogram(const PseudoObs& obs, int m);

// The four corruption variants applied to a histogram. UniformMix blends
// toward the uniform density, Gaussian adds clipped cell noise and
// renormalizes, Multinomial resamples counts at the histogram's n.
Histogram corrupt(const Histogram& h, CorruptVariant variant, double level,
                  std::uint64_t seed);

}  // namespace vdc

#endif
