#ifndef VDC_GRID_IO_HPP
#define VDC_GRID_IO_HPP

#include <string>

#include "vdc/transform.hpp"

namespace vdc {

// Grid file format: `<base>.json` sidecar {m, n, scale:"density"} plus
// `<base>.bin` with m*m row-major little-endian float64 values. A plain
// CSV debug form is also provided.

void save_grid(const std::string& base_path, const GridBuffer& grid,
               long long n);

struct LoadedGrid {
  GridBuffer grid;
  long long n = 0;
};

// Throws DataError on malformed sidecars or payload size mismatches.
LoadedGrid load_grid(const std::string& base_path);

void save_grid_csv(const std::string& path, const GridBuffer& grid);
GridBuffer load_grid_csv(const std::string& path);

}  // namespace vdc

#endif
