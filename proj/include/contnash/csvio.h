#pragma once

#include <optional>
#include <string>
#include <vector>

namespace contnash {

// 17 significant digits, '.' decimal point regardless of locale; doubles
// round-trip bit-exactly through this formatting.
std::string format_double(double x);

// Tabular CSV: '\n' line endings, no quoting (values never contain commas).
// Cells are preformatted strings; empty optional -> empty cell.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(const std::vector<std::optional<double>>& cells);
  void add_row(const std::vector<std::string>& cells);
};

void write_csv(const CsvTable& table, const std::string& path);
std::string csv_to_string(const CsvTable& table);

// Minimal reader for round-trip tests and the cross-trial summary: splits on
// commas, no quoting or escaping.
CsvTable read_csv(const std::string& path);

}  // namespace contnash
