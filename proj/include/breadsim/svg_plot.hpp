#pragma once

/**
 * Static SVG charts of success versus iteration, one panel per sweep
 * point, one curve per method (mean across seeds). Panels are grouped by
 * the sidecar's non-method sweep assignment when present, so a method
 * sweep collapses into a single panel per remaining axis value.
 */

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "breadsim/errors.hpp"

namespace breadsim {

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (iteration, success)
};

struct PlotPanel {
  std::string title;
  std::vector<PlotSeries> series;
};

namespace detail {

struct CsvData {
  // (method, iteration) -> list of per-seed values
  std::map<std::pair<std::string, int>, std::vector<double>> cells;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

inline CsvData read_success_csv(const std::filesystem::path& path,
                                const std::string& metric) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty file '" + path.string() + "'");
  const auto header = split_csv_line(line);
  int it_col = -1, method_col = -1, value_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "iteration") it_col = static_cast<int>(i);
    if (header[i] == "method") method_col = static_cast<int>(i);
    if (header[i] == metric) value_col = static_cast<int>(i);
  }
  if (it_col < 0 || method_col < 0 || value_col < 0)
    throw IoError("'" + path.string() + "' lacks iteration/method/" + metric +
                  " columns");
  CsvData data;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw IoError("'" + path.string() + "': ragged csv row");
    data.cells[{fields[static_cast<std::size_t>(method_col)],
                std::stoi(fields[static_cast<std::size_t>(it_col)])}]
        .push_back(std::stod(fields[static_cast<std::size_t>(value_col)]));
  }
  return data;
}

inline std::string panel_key_for(const std::filesystem::path& csv_path,
                                 std::string* title_out) {
  std::filesystem::path meta_path = csv_path;
  meta_path += ".meta.json";
  std::ifstream meta_in(meta_path, std::ios::binary);
  if (meta_in) {
    try {
      nlohmann::json meta = nlohmann::json::parse(meta_in);
      auto assignment = meta.value("sweep_assignment", nlohmann::json::object());
      assignment.erase("method");
      std::string key, title;
      for (const auto& [axis, value] : assignment.items()) {
        key += axis + "=" + value.get<std::string>() + " ";
        title += axis + " = " + value.get<std::string>() + "  ";
      }
      if (key.empty()) {
        key = "__base__";
        title = csv_path.stem().string();
      }
      *title_out = title;
      return key;
    } catch (const nlohmann::json::exception&) {
      // fall through to filename grouping
    }
  }
  *title_out = csv_path.stem().string();
  return csv_path.string();
}

inline std::string color_for(std::size_t index) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#ff7f0e", "#9467bd", "#8c564b"};
  return palette[index % (sizeof(palette) / sizeof(palette[0]))];
}

inline std::string fmt(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%g", v);
  return buffer;
}

}  // namespace detail

/// Collapses CSV files into panels; files sharing the same non-method
/// sweep assignment merge into one panel.
inline std::vector<PlotPanel> build_panels(
    const std::vector<std::filesystem::path>& csv_paths,
    const std::string& metric = "dp_success") {
  std::map<std::string, PlotPanel> panels;
  std::vector<std::string> order;
  for (const auto& path : csv_paths) {
    std::string title;
    const std::string key = detail::panel_key_for(path, &title);
    if (!panels.count(key)) {
      panels[key].title = title;
      order.push_back(key);
    }
    const detail::CsvData data = detail::read_success_csv(path, metric);
    std::map<std::string, PlotSeries> by_method;
    for (const auto& [cell, values] : data.cells) {
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= static_cast<double>(values.size());
      auto& series = by_method[cell.first];
      series.label = cell.first;
      series.points.emplace_back(cell.second, mean);
    }
    for (auto& [method, series] : by_method) {
      std::sort(series.points.begin(), series.points.end());
      panels[key].series.push_back(std::move(series));
    }
  }
  std::vector<PlotPanel> out;
  for (const auto& key : order) out.push_back(std::move(panels[key]));
  std::size_t total_points = 0;
  for (const auto& panel : out)
    for (const auto& series : panel.series) total_points += series.points.size();
  if (total_points == 0) throw IoError("no data rows to plot");
  return out;
}

inline std::string render_success_svg(const std::vector<PlotPanel>& panels) {
  const double panel_w = 380, panel_h = 300;
  const double margin_l = 52, margin_r = 14, margin_t = 34, margin_b = 40;
  const double plot_w = panel_w - margin_l - margin_r;
  const double plot_h = panel_h - margin_t - margin_b;
  const std::size_t columns = std::min<std::size_t>(panels.size(), 3);
  const std::size_t rows = (panels.size() + columns - 1) / columns;

  // Stable method -> color assignment across panels.
  std::map<std::string, std::size_t> color_index;
  for (const auto& panel : panels)
    for (const auto& series : panel.series)
      if (!color_index.count(series.label))
        color_index[series.label] = color_index.size();

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
      << columns * panel_w << "\" height=\"" << rows * panel_h
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t p = 0; p < panels.size(); ++p) {
    const PlotPanel& panel = panels[p];
    const double ox = (p % columns) * panel_w + margin_l;
    const double oy = (p / columns) * panel_h + margin_t;

    double max_iter = 1.0;
    for (const auto& series : panel.series)
      for (const auto& [x, y] : series.points) max_iter = std::max(max_iter, x);

    auto sx = [&](double x) { return ox + x / max_iter * plot_w; };
    auto sy = [&](double y) { return oy + (1.0 - y) * plot_h; };

    svg << "<text x=\"" << ox + plot_w / 2 << "\" y=\"" << oy - 14
        << "\" text-anchor=\"middle\" font-size=\"13\">" << panel.title
        << "</text>\n";
    svg << "<rect x=\"" << ox << "\" y=\"" << oy << "\" width=\"" << plot_w
        << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"#444\"/>\n";

    for (int tick = 0; tick <= 4; ++tick) {
      const double y = tick / 4.0;
      svg << "<line x1=\"" << ox << "\" y1=\"" << sy(y) << "\" x2=\"" << ox + plot_w
          << "\" y2=\"" << sy(y) << "\" stroke=\"#ddd\"/>\n";
      svg << "<text x=\"" << ox - 6 << "\" y=\"" << sy(y) + 4
          << "\" text-anchor=\"end\">" << detail::fmt(y) << "</text>\n";
    }
    for (int tick = 0; tick <= 4; ++tick) {
      const double x = max_iter * tick / 4.0;
      svg << "<text x=\"" << sx(x) << "\" y=\"" << oy + plot_h + 16
          << "\" text-anchor=\"middle\">" << detail::fmt(x) << "</text>\n";
    }
    svg << "<text x=\"" << ox + plot_w / 2 << "\" y=\"" << oy + plot_h + 32
        << "\" text-anchor=\"middle\">iteration</text>\n";

    double legend_y = oy + 14;
    for (const auto& series : panel.series) {
      const std::string color = detail::color_for(color_index[series.label]);
      svg << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.8\" points=\"";
      for (const auto& [x, y] : series.points)
        svg << detail::fmt(sx(x)) << ',' << detail::fmt(sy(y)) << ' ';
      svg << "\"/>\n";
      svg << "<line x1=\"" << ox + plot_w - 86 << "\" y1=\"" << legend_y
          << "\" x2=\"" << ox + plot_w - 66 << "\" y2=\"" << legend_y
          << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
      svg << "<text x=\"" << ox + plot_w - 60 << "\" y=\"" << legend_y + 4 << "\">"
          << series.label << "</text>\n";
      legend_y += 15;
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

inline void write_success_svg(const std::vector<std::filesystem::path>& csv_paths,
                              const std::filesystem::path& out_path,
                              const std::string& metric = "dp_success") {
  const auto panels = build_panels(csv_paths, metric);
  const std::string svg = render_success_svg(panels);
  if (out_path.has_parent_path())
    std::filesystem::create_directories(out_path.parent_path());
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + out_path.string() + "'");
  out << svg;
}

}  // namespace breadsim
