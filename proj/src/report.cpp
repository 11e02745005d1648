#include "udn/report.hpp"

#include <cstdio>
#include <ostream>

namespace udn {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string field(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos)
    return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"')
      out += '"';
    out += c;
  }
  return out + '"';
}

} // namespace

std::string csv_header() { return "axis_value,scheme,path,value,ci_lo,ci_hi"; }

std::string format_csv_row(const CsvRow &r) {
  return num(r.axis_value) + ',' + field(r.scheme) + ',' + field(r.path) + ',' + num(r.value) +
         ',' + num(r.ci_lo) + ',' + num(r.ci_hi);
}

void write_csv(std::ostream &os, const std::vector<CsvRow> &rows) {
  os << csv_header() << '\n';
  for (const auto &r : rows)
    os << format_csv_row(r) << '\n';
}

} // namespace udn
