#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "hwnas/errors.hpp"
#include "hwnas/text.hpp"
#include "src/pipeline/internal.hpp"

namespace hwnas {

namespace {

struct PlotPoint {
  std::string genome_key;
  double x = 0.0;
  double y = 0.0;
  bool pareto = false;
};

std::string sig3(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

// Canonical minimizing value: accuracy is the only maximized metric.
double canonical(const std::string& metric, double v) {
  return metric == "accuracy" ? -v : v;
}

std::string render_svg(const std::vector<PlotPoint>& points, const std::string& x_metric,
                       const std::string& y_metric, bool log_x) {
  constexpr double kWidth = 800.0, kHeight = 600.0;
  constexpr double kLeft = 70.0, kRight = 20.0, kTop = 40.0, kBottom = 60.0;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  double x_min = points[0].x, x_max = points[0].x;
  double y_min = points[0].y, y_max = points[0].y;
  for (const PlotPoint& p : points) {
    const double px = log_x ? std::log10(p.x) : p.x;
    x_min = std::min(x_min, px);
    x_max = std::max(x_max, px);
    y_min = std::min(y_min, p.y);
    y_max = std::max(y_max, p.y);
  }
  if (log_x) {
    x_min = std::log10(points[0].x);
    x_max = x_min;
    for (const PlotPoint& p : points) {
      x_min = std::min(x_min, std::log10(p.x));
      x_max = std::max(x_max, std::log10(p.x));
    }
  }
  if (x_max - x_min <= 0.0) {
    x_min -= 1.0;
    x_max += 1.0;
  }
  if (y_max - y_min <= 0.0) {
    y_min -= 1.0;
    y_max += 1.0;
  }

  auto sx = [&](double v) {
    const double t = ((log_x ? std::log10(v) : v) - x_min) / (x_max - x_min);
    return kLeft + t * plot_w;
  };
  auto sy = [&](double v) { return kTop + (1.0 - (v - y_min) / (y_max - y_min)) * plot_h; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" "
         "viewBox=\"0 0 800 600\">\n";
  svg += "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n";
  svg += "<g font-family=\"sans-serif\" font-size=\"13\" fill=\"#202124\">\n";

  const std::string title = xml_escape(y_metric) + " vs " + xml_escape(x_metric) +
                            (log_x ? " (log x)" : "");
  svg += "<text x=\"" + fmt_fixed(kLeft + plot_w / 2, 1) +
         "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" + title + "</text>\n";

  // axes
  const std::string axis_style = "stroke=\"#202124\" stroke-width=\"1\"";
  svg += "<line x1=\"" + fmt_fixed(kLeft, 1) + "\" y1=\"" + fmt_fixed(kTop + plot_h, 1) +
         "\" x2=\"" + fmt_fixed(kLeft + plot_w, 1) + "\" y2=\"" + fmt_fixed(kTop + plot_h, 1) +
         "\" " + axis_style + "/>\n";
  svg += "<line x1=\"" + fmt_fixed(kLeft, 1) + "\" y1=\"" + fmt_fixed(kTop, 1) + "\" x2=\"" +
         fmt_fixed(kLeft, 1) + "\" y2=\"" + fmt_fixed(kTop + plot_h, 1) + "\" " + axis_style +
         "/>\n";

  for (int i = 0; i < 5; ++i) {
    const double tx = x_min + (x_max - x_min) * i / 4.0;
    const double px = kLeft + plot_w * i / 4.0;
    const double label_x = log_x ? std::pow(10.0, tx) : tx;
    svg += "<line x1=\"" + fmt_fixed(px, 1) + "\" y1=\"" + fmt_fixed(kTop + plot_h, 1) +
           "\" x2=\"" + fmt_fixed(px, 1) + "\" y2=\"" + fmt_fixed(kTop + plot_h + 6, 1) + "\" " +
           axis_style + "/>\n";
    svg += "<text x=\"" + fmt_fixed(px, 1) + "\" y=\"" + fmt_fixed(kTop + plot_h + 22, 1) +
           "\" text-anchor=\"middle\">" + sig3(label_x) + "</text>\n";

    const double ty = y_min + (y_max - y_min) * i / 4.0;
    const double py = kTop + plot_h * (1.0 - i / 4.0);
    svg += "<line x1=\"" + fmt_fixed(kLeft - 6, 1) + "\" y1=\"" + fmt_fixed(py, 1) + "\" x2=\"" +
           fmt_fixed(kLeft, 1) + "\" y2=\"" + fmt_fixed(py, 1) + "\" " + axis_style + "/>\n";
    svg += "<text x=\"" + fmt_fixed(kLeft - 10, 1) + "\" y=\"" + fmt_fixed(py + 4, 1) +
           "\" text-anchor=\"end\">" + sig3(ty) + "</text>\n";
  }

  svg += "<text x=\"" + fmt_fixed(kLeft + plot_w / 2, 1) + "\" y=\"" + fmt_fixed(kHeight - 14, 1) +
         "\" text-anchor=\"middle\">" + xml_escape(x_metric) + "</text>\n";
  svg += "<text x=\"18\" y=\"" + fmt_fixed(kTop + plot_h / 2, 1) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         fmt_fixed(kTop + plot_h / 2, 1) + ")\">" + xml_escape(y_metric) + "</text>\n";

  // front polyline, pareto points sorted along x
  std::vector<const PlotPoint*> front;
  for (const PlotPoint& p : points) {
    if (p.pareto) front.push_back(&p);
  }
  std::sort(front.begin(), front.end(), [](const PlotPoint* a, const PlotPoint* b) {
    return a->x < b->x || (a->x == b->x && a->y < b->y);
  });
  if (front.size() > 1) {
    std::string pts;
    for (const PlotPoint* p : front) {
      if (!pts.empty()) pts += " ";
      pts += fmt_fixed(sx(p->x), 1) + "," + fmt_fixed(sy(p->y), 1);
    }
    svg += "<polyline points=\"" + pts +
           "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n";
  }

  for (const PlotPoint& p : points) {
    if (p.pareto) continue;
    svg += "<circle cx=\"" + fmt_fixed(sx(p.x), 1) + "\" cy=\"" + fmt_fixed(sy(p.y), 1) +
           "\" r=\"3\" fill=\"#9aa0a6\" fill-opacity=\"0.75\"/>\n";
  }
  for (const PlotPoint* p : front) {
    svg += "<circle cx=\"" + fmt_fixed(sx(p->x), 1) + "\" cy=\"" + fmt_fixed(sy(p->y), 1) +
           "\" r=\"4\" fill=\"#d62728\"/>\n";
  }

  svg += "</g>\n</svg>\n";
  return svg;
}

}  // namespace

std::string cmd_plot(const std::string& run_dir, const PlotRequest& request) {
  namespace fs = std::filesystem;
  const fs::path dir(run_dir);
  const std::string trials_path = (dir / "trials.csv").string();
  const pipeline::CsvTable table = pipeline::read_csv(trials_path);

  auto metric_column = [&](const std::string& name) {
    if (name != "trial_index" && name != "genome_key" && name != "failed") {
      const int col = table.column(name);
      if (col >= 0) return col;
    }
    std::string msg = "unknown metric '" + name + "'; trials.csv offers:";
    for (const std::string& c : table.columns) {
      if (c != "trial_index" && c != "genome_key" && c != "failed") msg += " " + c;
    }
    throw ConfigError(msg);
  };
  const int x_col = metric_column(request.x_metric);
  const int y_col = metric_column(request.y_metric);
  const int key_col = table.column("genome_key");
  const int failed_col = table.column("failed");
  if (key_col < 0) throw IoError(trials_path + ": missing genome_key column");

  std::vector<PlotPoint> points;
  std::set<std::string> seen;
  for (const auto& row : table.rows) {
    if (failed_col >= 0 && row[static_cast<std::size_t>(failed_col)] == "1") continue;
    PlotPoint p;
    p.genome_key = row[static_cast<std::size_t>(key_col)];
    if (!seen.insert(p.genome_key).second) continue;
    if (!parse_double(row[static_cast<std::size_t>(x_col)], p.x)) {
      throw ConfigError("metric '" + request.x_metric + "' is not numeric");
    }
    if (!parse_double(row[static_cast<std::size_t>(y_col)], p.y)) {
      throw ConfigError("metric '" + request.y_metric + "' is not numeric");
    }
    points.push_back(std::move(p));
  }
  if (points.empty()) throw ConfigError(trials_path + " holds no successful trials to plot");
  if (request.log_x) {
    for (const PlotPoint& p : points) {
      if (p.x <= 0.0) {
        throw ConfigError("--logx needs positive '" + request.x_metric + "' values, found " +
                          fmt_double(p.x));
      }
    }
  }

  // 2D strict dominance, small n
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double xi = canonical(request.x_metric, points[i].x);
    const double yi = canonical(request.y_metric, points[i].y);
    bool dominated = false;
    for (std::size_t j = 0; j < points.size() && !dominated; ++j) {
      if (i == j) continue;
      const double xj = canonical(request.x_metric, points[j].x);
      const double yj = canonical(request.y_metric, points[j].y);
      dominated = xj <= xi && yj <= yi && (xj < xi || yj < yi);
    }
    points[i].pareto = !dominated;
  }

  const std::string stem = "plot_" + request.x_metric + "_vs_" + request.y_metric;
  const std::string csv_path = (dir / (stem + ".csv")).string();
  {
    std::ofstream out(csv_path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + csv_path);
    out << "genome_key," << request.x_metric << "," << request.y_metric << ",is_pareto\n";
    for (const PlotPoint& p : points) {
      out << p.genome_key << "," << fmt_double(p.x) << "," << fmt_double(p.y) << ","
          << (p.pareto ? "1" : "0") << "\n";
    }
    if (!out) throw IoError("failed writing " + csv_path);
  }

  const std::string svg_path = (dir / (stem + ".svg")).string();
  {
    std::ofstream out(svg_path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + svg_path);
    out << render_svg(points, request.x_metric, request.y_metric, request.log_x);
    if (!out) throw IoError("failed writing " + svg_path);
  }

  log_info("wrote " + csv_path);
  log_info("wrote " + svg_path);
  return run_dir;
}

}  // namespace hwnas
