#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace hslab {

// Column-major numeric table. Lines starting with '#' are comments.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> comments;

  // Index of a named column, throws Error when missing.
  std::size_t column(const std::string& name) const;
  std::vector<double> column_values(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

// Shortest representation that round-trips a double.
std::string format_double(double v);

void write_csv_row(std::ostream& out, const std::vector<double>& row);

}  // namespace hslab
