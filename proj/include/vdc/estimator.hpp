#ifndef VDC_ESTIMATOR_HPP
#define VDC_ESTIMATOR_HPP

#include <optional>
#include <string>
#include <vector>

#include "vdc/transform.hpp"

namespace vdc {

// Strict positivity floor required by the IPFP projection.
inline constexpr double kEpsFloor = 1e-12;

// Strictly positive raw density grid produced by an edge estimator.
struct RawGrid : GridBuffer {
  std::string source;
  std::vector<std::string> warnings;
};

enum class EstimatorKind { Histogram, Shrinkage, Kde, Import };

EstimatorKind estimator_kind_from_string(const std::string& s);
std::string estimator_kind_to_string(EstimatorKind k);

struct EdgeEstimatorConfig {
  EstimatorKind kind = EstimatorKind::Shrinkage;
  std::optional<double> alpha;            // shrinkage weight; default m^2/(m^2+n)
  std::optional<double> bandwidth_cells;  // KDE sigma; default 64/m cells
  std::string grid_dir;                   // import source directory
};

// Floored pass-through of the histogram.
RawGrid estimate_raw_histogram(const Histogram& h);

// (1-alpha) H + alpha * uniform; default alpha(n) = m^2 / (m^2 + n).
RawGrid estimate_shrinkage(const Histogram& h,
                           std::optional<double> alpha = std::nullopt);

// Truncated-Gaussian smoothing (4 sigma support) with mirror reflection at
// the grid boundary; mass-preserving and linear in the input.
RawGrid estimate_grid_kde(const Histogram& h, double bandwidth_cells);

// Load an externally produced grid (format of grid_io); negative cells are
// floored with a recorded warning, dimension mismatches raise DataError.
RawGrid import_grid(const std::string& base_path);

// Dispatch on the configuration; `edge_id` names the file for imports.
RawGrid run_estimator(const EdgeEstimatorConfig& cfg, const Histogram& h,
                      const std::string& edge_id = "edge");

double default_shrinkage_alpha(int m, long long n);
double default_kde_bandwidth_cells(int m);

}  // namespace vdc

#endif
