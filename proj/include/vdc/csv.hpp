#ifndef VDC_CSV_HPP
#define VDC_CSV_HPP

#include <string>
#include <vector>

#include "vdc/matrix.hpp"

namespace vdc {

// Strict numeric CSV reader; blank cells, non-numeric tokens and ragged
// rows raise DataError with row/column coordinates (1-based).
DataMatrix ingest_csv(const std::string& path, bool has_header);

void write_csv(const std::string& path, const DataMatrix& data,
               const std::vector<std::string>& header = {});

}  // namespace vdc

#endif
