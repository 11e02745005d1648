#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace udn {

struct CsvRow {
  double axis_value = 0.0;
  std::string scheme;
  std::string path; // "mc" or "analytic"
  double value = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

std::string csv_header();
/// One line, numbers in %.10g, scheme quoted when it holds a comma.
std::string format_csv_row(const CsvRow &row);
void write_csv(std::ostream &os, const std::vector<CsvRow> &rows);

} // namespace udn
