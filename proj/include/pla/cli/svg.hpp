#pragma once

#include <string>
#include <vector>

namespace pla::cli {

struct ChartSpec {
  std::string title;
  std::string x_column;
  std::vector<std::string> y_columns;
  bool log_x = false;
  bool log_y = false;
  std::size_t max_points = 5000;  // per series
};

/// Reads the CSV back and writes a static scatter chart. Non-finite or
/// (on log axes) nonpositive cells are skipped.
void write_chart(const std::string& csv_path, const std::string& svg_path,
                 const ChartSpec& spec);

}  // namespace pla::cli
