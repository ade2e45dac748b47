#include "contnash/csvio.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "contnash/errors.h"

namespace contnash {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void CsvTable::add_row(const std::vector<std::optional<double>>& cells) {
  std::vector<std::string> row;
  row.reserve(cells.size());
  for (const auto& c : cells) row.push_back(c ? format_double(*c) : std::string());
  rows.push_back(std::move(row));
}

void CsvTable::add_row(const std::vector<std::string>& cells) { rows.push_back(cells); }

std::string csv_to_string(const CsvTable& table) {
  std::ostringstream out;
  for (std::size_t k = 0; k < table.header.size(); ++k) {
    if (k) out << ',';
    out << table.header[k];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out << ',';
      out << row[k];
    }
    out << '\n';
  }
  return out.str();
}

void write_csv(const CsvTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: keep '\n' on all hosts
  if (!out) throw IoError("cannot open CSV for writing: " + path);
  out << csv_to_string(table);
  if (!out) throw IoError("failed writing CSV: " + path);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open CSV: " + path);
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma == std::string::npos ? comma : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

}  // namespace contnash
