#include "covertseq/csv.hpp"

#include <cstdio>

namespace covertseq {

std::string csv_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void CsvWriter::comment(const std::string& text) { os_ << "# " << text << "\n"; }

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) os_ << ',';
    os_ << cells[i];
  }
  os_ << "\n";
}

}  // namespace covertseq
