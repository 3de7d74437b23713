#include "pla/cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "pla/cli/csv.hpp"
#include "pla/errors.hpp"

namespace pla::cli {

namespace {

constexpr double kWidth = 640, kHeight = 420, kMargin = 56;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

bool parse(const std::string& s, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    return used == s.size() && std::isfinite(out);
  } catch (...) {
    return false;
  }
}

std::string num(double v) { return format_double(std::round(v * 100.0) / 100.0); }

}  // namespace

void write_chart(const std::string& csv_path, const std::string& svg_path,
                 const ChartSpec& spec) {
  const CsvTable table = read_csv(csv_path);
  const int xc = table.column(spec.x_column);
  if (xc < 0) throw Error("chart: missing column '" + spec.x_column + "'");

  std::vector<Series> series;
  for (const auto& name : spec.y_columns) {
    const int yc = table.column(name);
    if (yc < 0) continue;
    Series s{name, {}};
    for (const auto& row : table.rows) {
      if (s.points.size() >= spec.max_points) break;
      if (static_cast<int>(row.size()) <= std::max(xc, yc)) continue;
      double x = 0, y = 0;
      if (!parse(row[static_cast<std::size_t>(xc)], x) ||
          !parse(row[static_cast<std::size_t>(yc)], y)) continue;
      if ((spec.log_x && x <= 0) || (spec.log_y && y <= 0)) continue;
      s.points.emplace_back(spec.log_x ? std::log10(x) : x, spec.log_y ? std::log10(y) : y);
    }
    series.push_back(std::move(s));
  }

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      x0 = std::min(x0, x); x1 = std::max(x1, x);
      y0 = std::min(y0, y); y1 = std::max(y1, y);
    }
  }
  if (!(x1 >= x0)) { x0 = 0; x1 = 1; y0 = 0; y1 = 1; }
  if (x1 == x0) { x0 -= 0.5; x1 += 0.5; }
  if (y1 == y0) { y0 -= 0.5; y1 += 0.5; }
  auto px = [&](double x) { return kMargin + (x - x0) / (x1 - x0) * (kWidth - 2 * kMargin); };
  auto py = [&](double y) { return kHeight - kMargin - (y - y0) / (y1 - y0) * (kHeight - 2 * kMargin); };
  auto label = [](double v, bool log) { return format_double(log ? std::pow(10.0, v) : v); };

  std::ofstream out(svg_path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + svg_path + "' for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << spec.title << "</text>\n"
      << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kWidth - 2 * kMargin
      << "\" height=\"" << kHeight - 2 * kMargin << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kMargin << "\" y=\"" << kHeight - kMargin + 16 << "\">"
      << label(x0, spec.log_x) << "</text>\n"
      << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - kMargin + 16
      << "\" text-anchor=\"end\">" << label(x1, spec.log_x) << "</text>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
      << spec.x_column << (spec.log_x ? " (log)" : "") << "</text>\n"
      << "<text x=\"" << kMargin - 4 << "\" y=\"" << kHeight - kMargin
      << "\" text-anchor=\"end\">" << label(y0, spec.log_y) << "</text>\n"
      << "<text x=\"" << kMargin - 4 << "\" y=\"" << kMargin + 10 << "\" text-anchor=\"end\">"
      << label(y1, spec.log_y) << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kColors[i % std::size(kColors)];
    out << "<g fill=\"" << color << "\">\n";
    for (const auto& [x, y] : series[i].points) {
      out << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"2\"/>\n";
    }
    out << "</g>\n<text x=\"" << kWidth - kMargin - 4 << "\" y=\"" << kMargin + 14 + 14 * i
        << "\" text-anchor=\"end\" fill=\"" << color << "\">" << series[i].name
        << (spec.log_y ? " (log)" : "") << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace pla::cli
