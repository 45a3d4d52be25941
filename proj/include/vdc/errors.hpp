#ifndef VDC_ERRORS_HPP
#define VDC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace vdc {

// Problems with input files or data content (CLI exit code 3).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failures: nonconvergence, singular matrices (CLI exit code 4).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace vdc

#endif
