#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace pla::cli {

/// Shortest round-trip text for a double; "inf", "-inf", "nan" otherwise.
std::string format_double(double v);

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);

  void header(const std::vector<std::string>& columns);
  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(const std::string& v);
  void end_row();
  void close();

 private:
  std::ofstream out_;
  std::string line_;
  bool first_ = true;
};

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);

}  // namespace pla::cli
