#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "bilin/error.hpp"
#include "bilin/harness.hpp"
#include "bilin/serialize.hpp"

namespace bilin {

using nlohmann::json;

namespace {

struct Point {
  int m = 0;
  double trajectories = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string g4(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"};

void write_svg(const std::string& path, const std::map<std::string, std::vector<Point>>& curves) {
  constexpr double W = 720, Hgt = 440, left = 70, right = 190, top = 30, bottom = 55;
  double xmin = INFINITY, xmax = -INFINITY, ymin = 0.0, ymax = -INFINITY;
  for (const auto& [_, pts] : curves) {
    for (const auto& p : pts) {
      const double x = std::log10(std::max(1.0, p.trajectories));
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, p.q1);
      ymax = std::max(ymax, p.q3);
    }
  }
  if (!(xmax > xmin)) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (!(ymax > ymin)) ymax = ymin + 1.0;
  const double pw = W - left - right, ph = Hgt - top - bottom;
  auto sx = [&](double t) { return left + (std::log10(std::max(1.0, t)) - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double v) { return top + (ymax - v) / (ymax - ymin) * ph; };

  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << Hgt
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  for (int k = static_cast<int>(std::ceil(xmin)); k <= static_cast<int>(std::floor(xmax)); ++k) {
    const double x = left + (k - xmin) / (xmax - xmin) * pw;
    out << "<line x1=\"" << x << "\" y1=\"" << top + ph << "\" x2=\"" << x << "\" y2=\"" << top + ph + 5
        << "\" stroke=\"black\"/><text x=\"" << x << "\" y=\"" << top + ph + 18
        << "\" text-anchor=\"middle\">1e" << k << "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double v = ymin + (ymax - ymin) * k / 4.0;
    out << "<text x=\"" << left - 6 << "\" y=\"" << sy(v) + 4 << "\" text-anchor=\"end\">" << g4(v) << "</text>\n";
  }
  out << "<text x=\"" << left + pw / 2 << "\" y=\"" << Hgt - 12
      << "\" text-anchor=\"middle\">trajectories (log scale)</text>\n";
  out << "<text transform=\"translate(18," << top + ph / 2
      << ") rotate(-90)\" text-anchor=\"middle\">suboptimality</text>\n";
  std::size_t c = 0;
  for (const auto& [label, pts] : curves) {
    const char* color = kColors[c % std::size(kColors)];
    out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
    for (const auto& p : pts) out << sx(p.trajectories) << ',' << sy(p.q3) << ' ';
    for (auto it = pts.rbegin(); it != pts.rend(); ++it) out << sx(it->trajectories) << ',' << sy(it->q1) << ' ';
    out << "\"/>\n<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : pts) out << sx(p.trajectories) << ',' << sy(p.median) << ' ';
    out << "\"/>\n";
    for (const auto& p : pts) {
      out << "<circle cx=\"" << sx(p.trajectories) << "\" cy=\"" << sy(p.median) << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
    }
    const double ly = top + 10 + 18.0 * static_cast<double>(c);
    out << "<line x1=\"" << W - right + 15 << "\" y1=\"" << ly << "\" x2=\"" << W - right + 35 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/><text x=\"" << W - right + 40 << "\" y=\"" << ly + 4
        << "\">" << label << "</text>\n";
    ++c;
  }
  out << "</svg>\n";
}

}  // namespace

PlotArtifacts emit_plots(const std::vector<std::string>& result_files, const std::string& out_prefix) {
  if (result_files.empty()) throw Error(ErrorCode::ConfigError, "emit_plots needs at least one result file");
  std::map<std::string, std::vector<Point>> curves;
  for (const auto& path : result_files) {
    const json doc = read_json_file(path);
    try {
      if (doc.at("schema").get<std::string>() != kResultsSchema) {
        throw Error(ErrorCode::SchemaMismatch, path + ": not a results document");
      }
      const std::string label =
          doc.at("instance").at("generator").get<std::string>() + "/" + doc.at("spec").get<std::string>();
      auto& pts = curves[label];
      for (const auto& a : doc.at("aggregates")) {
        if (a.at("count").get<std::size_t>() == 0) continue;
        pts.push_back({a.at("m").get<int>(), a.at("mean_trajectories").get<double>(), a.at("median").get<double>(),
                       a.at("q1").get<double>(), a.at("q3").get<double>()});
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaMismatch, path + ": " + e.what());
    }
  }
  PlotArtifacts art;
  art.csv_path = out_prefix + ".csv";
  art.svg_path = out_prefix + ".svg";
  std::ofstream csv(art.csv_path);
  if (!csv) throw Error(ErrorCode::ConfigError, "cannot write " + art.csv_path);
  csv << "curve,m,trajectories,median,q1,q3\n";
  for (auto& [label, pts] : curves) {
    std::stable_sort(pts.begin(), pts.end(),
                     [](const Point& a, const Point& b) { return a.trajectories < b.trajectories; });
    for (const auto& p : pts) {
      csv << label << ',' << p.m << ',' << g17(p.trajectories) << ',' << g17(p.median) << ',' << g17(p.q1) << ','
          << g17(p.q3) << '\n';
      ++art.points;
    }
  }
  art.curves = curves.size();
  write_svg(art.svg_path, curves);
  return art;
}

}  // namespace bilin
