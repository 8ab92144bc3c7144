#include "ouvol/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ouvol {

namespace {

void append_g17(std::string& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

std::string g6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

/// Three-stop color ramp from dark blue through teal to yellow; u in [0,1].
std::string ramp_color(double u) {
  u = std::clamp(u, 0.0, 1.0);
  static const int stops[3][3] = {{68, 1, 84}, {33, 145, 140}, {253, 231, 37}};
  const double seg = u * 2.0;
  const int lo = seg < 1.0 ? 0 : 1;
  const double w = seg - lo;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                static_cast<int>(std::lround(stops[lo][0] + w * (stops[lo + 1][0] - stops[lo][0]))),
                static_cast<int>(std::lround(stops[lo][1] + w * (stops[lo + 1][1] - stops[lo][1]))),
                static_cast<int>(std::lround(stops[lo][2] + w * (stops[lo + 1][2] - stops[lo][2]))));
  return buf;
}

}  // namespace

std::string format_g17(double v) {
  std::string out;
  append_g17(out, v);
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path dir = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  fs::create_directories(dir);
  const fs::path tmp = dir / (path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string surface_csv(const ValueSurface& f, const ValueSurface& consumption) {
  if (!f.grid.same_shape(consumption.grid)) {
    throw std::invalid_argument("surface_csv: value and consumption grids differ");
  }
  std::string out = "t,y,f,consumption_rate\n";
  out.reserve(out.size() + f.values.size() * 48);
  for (int i = 0; i <= f.grid.m_steps; ++i) {
    for (int j = 0; j < f.grid.j_nodes; ++j) {
      append_g17(out, f.grid.t_node(i));
      out += ',';
      append_g17(out, f.grid.y_node(j));
      out += ',';
      append_g17(out, f.node(i, j));
      out += ',';
      append_g17(out, consumption.node(i, j));
      out += '\n';
    }
  }
  return out;
}

std::string consumption_csv(const ValueSurface& consumption) {
  std::string out = "t,y,consumption_rate\n";
  out.reserve(out.size() + consumption.values.size() * 36);
  for (int i = 0; i <= consumption.grid.m_steps; ++i) {
    for (int j = 0; j < consumption.grid.j_nodes; ++j) {
      append_g17(out, consumption.grid.t_node(i));
      out += ',';
      append_g17(out, consumption.grid.y_node(j));
      out += ',';
      append_g17(out, consumption.node(i, j));
      out += '\n';
    }
  }
  return out;
}

std::string probes_csv(const std::vector<ProbeEstimate>& probes, const DerivedConstants& dc) {
  std::string out = "t,y,estimate,std_error,lower_bound,upper_bound,envelope\n";
  for (const ProbeEstimate& p : probes) {
    append_g17(out, p.t);
    out += ',';
    append_g17(out, p.y);
    out += ',';
    append_g17(out, p.mean);
    out += ',';
    append_g17(out, p.std_error);
    out += ',';
    append_g17(out, p.mean - 3.0 * p.std_error);
    out += ',';
    append_g17(out, p.mean + 3.0 * p.std_error);
    out += ',';
    append_g17(out, envelope_upper(dc, p.t, p.y));
    out += '\n';
  }
  return out;
}

std::string path_csv(const StrategyPath& path) {
  std::string out = "t,Y,X,c,pi,c_over_X\n";
  for (std::size_t k = 0; k < path.times.size(); ++k) {
    append_g17(out, path.times[k]);
    out += ',';
    append_g17(out, path.factor_level[k]);
    out += ',';
    append_g17(out, path.wealth[k]);
    out += ',';
    append_g17(out, path.consumption[k]);
    out += ',';
    append_g17(out, path.fraction[k]);
    out += ',';
    append_g17(out, path.wealth[k] > 0.0 ? path.consumption[k] / path.wealth[k] : 0.0);
    out += '\n';
  }
  return out;
}

std::string factor_csv(const FactorPath& path, const std::vector<double>& times) {
  std::string out = "u,Y\n";
  for (double u : times) {
    append_g17(out, u);
    out += ',';
    append_g17(out, path.value(u));
    out += '\n';
  }
  return out;
}

std::string jumps_csv(const std::vector<JumpEvent>& jumps) {
  std::string out = "tau,z\n";
  for (const JumpEvent& j : jumps) {
    append_g17(out, j.time);
    out += ',';
    append_g17(out, j.size);
    out += '\n';
  }
  return out;
}

std::string checks_csv(const std::vector<CheckRow>& rows) {
  std::string out = "check,value,bound,passed\n";
  for (const CheckRow& row : rows) {
    out += row.name;
    out += ',';
    append_g17(out, row.value);
    out += ',';
    append_g17(out, row.bound);
    out += ',';
    out += row.passed ? "1" : "0";
    out += '\n';
  }
  return out;
}

std::vector<JumpEvent> read_scenario_csv(const std::string& text) {
  std::vector<JumpEvent> jumps;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    std::size_t start = 0;
    while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start]))) ++start;
    line.erase(0, start);
    if (line.empty()) continue;
    if (line_no == 1 && line.find("tau") != std::string::npos) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::invalid_argument("scenario line " + std::to_string(line_no) + ": expected 'tau,z'");
    }
    try {
      const double tau = std::stod(line.substr(0, comma));
      const double z = std::stod(line.substr(comma + 1));
      jumps.push_back({tau, z});
    } catch (const std::exception&) {
      throw std::invalid_argument("scenario line " + std::to_string(line_no) + ": bad number");
    }
  }
  return jumps;
}

std::string svg_heatmap(const ValueSurface& surface, const std::string& title) {
  const SolverGrid& g = surface.grid;
  const int rows = g.m_steps + 1;
  const int cols = g.j_nodes;
  const int stride_t = std::max(1, (rows + 119) / 120);
  const int stride_y = std::max(1, (cols + 99) / 100);

  double lo = surface.values.front();
  double hi = lo;
  for (double v : surface.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi > lo ? hi - lo : 1.0;

  const double left = 70.0, top = 40.0, width = 760.0, height = 500.0;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"600\" "
         "viewBox=\"0 0 900 600\">\n"
      << "<rect width=\"900\" height=\"600\" fill=\"white\"/>\n"
      << "<text x=\"450\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">"
      << escape_xml(title) << "</text>\n";

  for (int i = 0; i < rows; i += stride_t) {
    const int i_hi = std::min(rows, i + stride_t);
    const double x0 = left + width * i / rows;
    const double x1 = left + width * i_hi / rows;
    for (int j = 0; j < cols; j += stride_y) {
      const int j_hi = std::min(cols, j + stride_y);
      // y axis points up: larger factor levels sit closer to the top edge.
      const double yb = top + height * (1.0 - static_cast<double>(j) / cols);
      const double yt = top + height * (1.0 - static_cast<double>(j_hi) / cols);
      double acc = 0.0;
      int n = 0;
      for (int ii = i; ii < i_hi; ++ii) {
        for (int jj = j; jj < j_hi; ++jj) {
          acc += surface.node(ii, jj);
          ++n;
        }
      }
      const double u = (acc / n - lo) / span;
      svg << "<rect x=\"" << g6(x0) << "\" y=\"" << g6(yt) << "\" width=\"" << g6(x1 - x0 + 0.5)
          << "\" height=\"" << g6(yb - yt + 0.5) << "\" fill=\"" << ramp_color(u) << "\"/>\n";
    }
  }

  svg << "<rect x=\"" << g6(left) << "\" y=\"" << g6(top) << "\" width=\"" << g6(width)
      << "\" height=\"" << g6(height) << "\" fill=\"none\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << g6(left) << "\" y=\"580\" font-family=\"sans-serif\" font-size=\"12\">t = 0"
      << "</text>\n";
  svg << "<text x=\"" << g6(left + width) << "\" y=\"580\" text-anchor=\"end\" "
         "font-family=\"sans-serif\" font-size=\"12\">t = "
      << g6(g.horizon) << "</text>\n";
  svg << "<text x=\"12\" y=\"" << g6(top + 12.0) << "\" font-family=\"sans-serif\" "
         "font-size=\"12\">y = "
      << g6(g.y_max) << "</text>\n";
  svg << "<text x=\"12\" y=\"" << g6(top + height) << "\" font-family=\"sans-serif\" "
         "font-size=\"12\">y = 0</text>\n";
  svg << "<text x=\"450\" y=\"596\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">range ["
      << g6(lo) << ", " << g6(hi) << "]</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

std::string svg_lines(const std::vector<SvgSeries>& series, const std::string& title,
                      const std::string& x_label, const std::string& y_label) {
  double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
  bool first = true;
  for (const SvgSeries& s : series) {
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (first) {
        x_lo = x_hi = s.x[k];
        y_lo = y_hi = s.y[k];
        first = false;
      } else {
        x_lo = std::min(x_lo, s.x[k]);
        x_hi = std::max(x_hi, s.x[k]);
        y_lo = std::min(y_lo, s.y[k]);
        y_hi = std::max(y_hi, s.y[k]);
      }
    }
  }
  if (x_hi <= x_lo) x_hi = x_lo + 1.0;
  if (y_hi <= y_lo) y_hi = y_lo + 1.0;
  const double pad = 0.05 * (y_hi - y_lo);
  y_lo -= pad;
  y_hi += pad;

  const double left = 70.0, top = 40.0, width = 760.0, height = 500.0;
  const auto px = [&](double x) { return left + width * (x - x_lo) / (x_hi - x_lo); };
  const auto py = [&](double y) { return top + height * (1.0 - (y - y_lo) / (y_hi - y_lo)); };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"600\" "
         "viewBox=\"0 0 900 600\">\n"
      << "<rect width=\"900\" height=\"600\" fill=\"white\"/>\n"
      << "<text x=\"450\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">"
      << escape_xml(title) << "</text>\n"
      << "<rect x=\"" << g6(left) << "\" y=\"" << g6(top) << "\" width=\"" << g6(width)
      << "\" height=\"" << g6(height) << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const SvgSeries& ser = series[s];
    if (ser.x.empty()) continue;
    svg << "<polyline fill=\"none\" stroke=\"" << palette[s % 4]
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < ser.x.size(); ++k) {
      svg << g6(px(ser.x[k])) << ',' << g6(py(ser.y[k])) << ' ';
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << g6(left + 12.0) << "\" y=\"" << g6(top + 20.0 + 18.0 * s)
        << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << palette[s % 4] << "\">"
        << escape_xml(ser.label) << "</text>\n";
  }

  svg << "<text x=\"450\" y=\"580\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">"
      << escape_xml(x_label) << "</text>\n";
  svg << "<text x=\"16\" y=\"" << g6(top - 10.0) << "\" font-family=\"sans-serif\" "
         "font-size=\"12\">"
      << escape_xml(y_label) << "</text>\n";
  svg << "<text x=\"" << g6(left) << "\" y=\"580\" font-family=\"sans-serif\" font-size=\"12\">"
      << g6(x_lo) << "</text>\n";
  svg << "<text x=\"" << g6(left + width) << "\" y=\"580\" text-anchor=\"end\" "
         "font-family=\"sans-serif\" font-size=\"12\">"
      << g6(x_hi) << "</text>\n";
  svg << "<text x=\"" << g6(left - 6.0) << "\" y=\"" << g6(py(y_lo)) << "\" text-anchor=\"end\" "
         "font-family=\"sans-serif\" font-size=\"12\">"
      << g6(y_lo) << "</text>\n";
  svg << "<text x=\"" << g6(left - 6.0) << "\" y=\"" << g6(py(y_hi) + 10.0) << "\" "
         "text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
      << g6(y_hi) << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace ouvol
