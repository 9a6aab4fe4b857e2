#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace covertseq {

// Fixed "%.10g" rendering so reruns produce byte-identical files.
std::string csv_double(double v);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}
  void comment(const std::string& text);
  void row(const std::vector<std::string>& cells);

 private:
  std::ostream& os_;
};

}  // namespace covertseq
