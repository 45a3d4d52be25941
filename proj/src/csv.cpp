#include "vdc/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "vdc/errors.hpp"

namespace vdc {

DataMatrix ingest_csv(const std::string& path, bool has_header) {
  std::ifstream f(path);
  if (!f) throw DataError("ingest_csv: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  long long line_no = 0;
  bool skipped_header = false;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (has_header && !skipped_header) {
      skipped_header = true;
      continue;
    }
    std::vector<double> row;
    std::size_t pos = 0;
    long long col_no = 0;
    while (pos <= line.size()) {
      std::size_t next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      ++col_no;
      std::string_view cell(line.data() + pos, next - pos);
      // trim spaces
      while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t'))
        cell.remove_prefix(1);
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t'))
        cell.remove_suffix(1);
      double val = 0.0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), val);
      if (cell.empty() || res.ec != std::errc() ||
          res.ptr != cell.data() + cell.size() || !std::isfinite(val))
        throw DataError("ingest_csv: bad value at row " +
                        std::to_string(line_no) + " column " +
                        std::to_string(col_no) + " of " + path);
      row.push_back(val);
      pos = next + 1;
      if (next == line.size()) break;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw DataError("ingest_csv: ragged row " + std::to_string(line_no) +
                      " (" + std::to_string(row.size()) + " columns, expected " +
                      std::to_string(rows.front().size()) + ")");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("ingest_csv: no data rows in " + path);
  DataMatrix out(static_cast<long long>(rows.size()),
                 static_cast<int>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      out.at(static_cast<long long>(i), static_cast<int>(j)) = rows[i][j];
  return out;
}

void write_csv(const std::string& path, const DataMatrix& data,
               const std::vector<std::string>& header) {
  std::ofstream f(path);
  if (!f) throw DataError("write_csv: cannot open " + path);
  f.precision(17);
  if (!header.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) f << ',';
      f << header[i];
    }
    f << '\n';
  }
  for (long long i = 0; i < data.n; ++i) {
    for (int j = 0; j < data.d; ++j) {
      if (j) f << ',';
      f << data.at(i, j);
    }
    f << '\n';
  }
}

}  // namespace vdc
