#include "vdc/grid_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vdc/errors.hpp"

namespace vdc {

void save_grid(const std::string& base_path, const GridBuffer& grid,
               long long n) {
  nlohmann::json meta{{"m", grid.m}, {"n", n}, {"scale", "density"}};
  std::ofstream js(base_path + ".json");
  if (!js) throw DataError("save_grid: cannot open " + base_path + ".json");
  js << meta.dump(2) << "\n";
  std::ofstream bin(base_path + ".bin", std::ios::binary);
  if (!bin) throw DataError("save_grid: cannot open " + base_path + ".bin");
  bin.write(reinterpret_cast<const char*>(grid.values.data()),
            static_cast<std::streamsize>(grid.values.size() * sizeof(double)));
}

LoadedGrid load_grid(const std::string& base_path) {
  std::ifstream js(base_path + ".json");
  if (!js) throw DataError("load_grid: cannot open " + base_path + ".json");
  nlohmann::json meta;
  try {
    js >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("load_grid: malformed sidecar " + base_path + ".json: " +
                    e.what());
  }
  LoadedGrid out;
  if (!meta.contains("m") || !meta["m"].is_number_integer())
    throw DataError("load_grid: sidecar missing integer field 'm'");
  out.grid.m = meta["m"].get<int>();
  if (out.grid.m < 2) throw DataError("load_grid: invalid grid size");
  out.n = meta.value("n", 0LL);

  std::ifstream bin(base_path + ".bin", std::ios::binary);
  if (!bin) throw DataError("load_grid: cannot open " + base_path + ".bin");
  bin.seekg(0, std::ios::end);
  auto bytes = static_cast<std::size_t>(bin.tellg());
  bin.seekg(0, std::ios::beg);
  const std::size_t expect =
      static_cast<std::size_t>(out.grid.m) * out.grid.m * sizeof(double);
  if (bytes != expect)
    throw DataError("load_grid: payload size mismatch for " + base_path +
                    ".bin (got " + std::to_string(bytes) + " bytes, expected " +
                    std::to_string(expect) + ")");
  out.grid.values.resize(static_cast<std::size_t>(out.grid.m) * out.grid.m);
  bin.read(reinterpret_cast<char*>(out.grid.values.data()),
           static_cast<std::streamsize>(expect));
  if (!bin) throw DataError("load_grid: short read on " + base_path + ".bin");
  return out;
}

void save_grid_csv(const std::string& path, const GridBuffer& grid) {
  std::ofstream f(path);
  if (!f) throw DataError("save_grid_csv: cannot open " + path);
  f.precision(17);
  for (int a = 0; a < grid.m; ++a) {
    for (int b = 0; b < grid.m; ++b) {
      if (b) f << ',';
      f << grid.at(a, b);
    }
    f << '\n';
  }
}

GridBuffer load_grid_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("load_grid_csv: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double val = 0.0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), val);
      if (res.ec != std::errc())
        throw DataError("load_grid_csv: bad value '" + cell + "'");
      row.push_back(val);
    }
    rows.push_back(std::move(row));
  }
  const std::size_t m = rows.size();
  if (m < 2) throw DataError("load_grid_csv: too few rows");
  GridBuffer grid(static_cast<int>(m), 0.0);
  for (std::size_t a = 0; a < m; ++a) {
    if (rows[a].size() != m)
      throw DataError("load_grid_csv: row " + std::to_string(a + 1) +
                      " has " + std::to_string(rows[a].size()) +
                      " columns, expected " + std::to_string(m));
    for (std::size_t b = 0; b < m; ++b)
      grid.at(static_cast<int>(a), static_cast<int>(b)) = rows[a][b];
  }
  return grid;
}

}  // namespace vdc
