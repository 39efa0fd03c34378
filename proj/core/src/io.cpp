#include "snapjump/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace snapjump {

int CsvTable::col(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  throw AssemblyError("CSV column '" + name + "' not found");
}

std::string format_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw AssemblyError("cannot open '" + path + "' for writing");
  for (size_t i = 0; i < table.columns.size(); ++i)
    out << (i ? "," : "") << table.columns[i];
  out << "\n";
  for (const auto& row : table.rows) {
    for (size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << format_full(row[i]);
    out << "\n";
  }
  if (!out) throw AssemblyError("write failed for '" + path + "'");
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw AssemblyError("cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) return table;
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) table.columns.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(table.columns.size());
    std::stringstream ls(line);
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw AssemblyError("non-numeric CSV cell '" + cell + "' in '" +
                            path + "'");
      }
    }
    if (row.size() != table.columns.size())
      throw AssemblyError("ragged CSV row in '" + path + "'");
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace snapjump
