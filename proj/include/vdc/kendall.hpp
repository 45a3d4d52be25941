#ifndef VDC_KENDALL_HPP
#define VDC_KENDALL_HPP

#include <span>

namespace vdc {

// Tie-corrected sample Kendall tau_b in O(n log n) (merge-sort inversion
// counting). Throws std::invalid_argument when either coordinate is
// constant.
double kendall_tau(std::span<const double> x, std::span<const double> y);

}  // namespace vdc

#endif
