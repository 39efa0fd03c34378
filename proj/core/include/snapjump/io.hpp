#pragma once

#include <string>
#include <vector>

#include "snapjump/types.hpp"

namespace snapjump {

// Minimal numeric CSV: one header row of column names, then double-valued
// rows. All values are written with %.17g so round-trips are bit-exact.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  // Column index by name; throws AssemblyError when missing.
  int col(const std::string& name) const;
};

std::string format_full(double v);  // %.17g

void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

}  // namespace snapjump
