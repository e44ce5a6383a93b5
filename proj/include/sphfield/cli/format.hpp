#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>
#include <system_error>
#include <vector>

namespace sphfield::cli {

/// Shortest decimal that reads back as the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Fixed-point with `digits` decimals, for plot coordinates.
inline std::string format_fixed(double v, int digits = 2) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  return std::string(buf, res.ptr);
}

/// Three significant digits, for axis labels.
inline std::string format_general(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 3);
  return std::string(buf, res.ptr);
}

/// Comma-separated table with a header row; cells are preformatted strings.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  CsvTable& row(std::vector<std::string> cells) {
    rows_.push_back(std::move(cells));
    return *this;
  }

  std::string str() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
      }
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string cell(double v) { return format_double(v); }
inline std::string cell(int v) { return std::to_string(v); }
inline std::string cell(bool v) { return v ? "true" : "false"; }

// ---------------------------------------------------------------------------
// Minimal line charts. Output depends only on the data, so it is
// byte-reproducible like the CSV and JSON reports.
// ---------------------------------------------------------------------------

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color;
  bool markers = false;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += ch;
    }
  }
  return out;
}

inline std::string render_svg(const ChartSpec& spec, const std::vector<Series>& series) {
  constexpr double W = 640, H = 420, left = 70, right = 180, top = 40, bottom = 50;
  auto tx = [&](double v) { return spec.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return spec.log_y ? std::log10(v) : v; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!spec.log_x || x > 0) && (!spec.log_y || y > 0);
  };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  }
  if (!(x0 <= x1)) x0 = 0, x1 = 1;
  if (!(y0 <= y1)) y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double v) { return left + (tx(v) - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return top + ph - (ty(v) - y0) / (y1 - y0) * ph; };

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" "
                    "font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
  out += "<text x=\"" + format_fixed(W / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
         svg_escape(spec.title) + "</text>\n";
  out += "<rect x=\"" + format_fixed(left) + "\" y=\"" + format_fixed(top) + "\" width=\"" + format_fixed(pw) +
         "\" height=\"" + format_fixed(ph) + "\" fill=\"none\" stroke=\"#444\"/>\n";
  // ticks: five per axis, labelled in data units
  for (int k = 0; k <= 4; ++k) {
    const double fx = x0 + (x1 - x0) * k / 4, fy = y0 + (y1 - y0) * k / 4;
    const double vx = spec.log_x ? std::pow(10.0, fx) : fx, vy = spec.log_y ? std::pow(10.0, fy) : fy;
    const double sx = left + pw * k / 4, sy = top + ph - ph * k / 4;
    out += "<text x=\"" + format_fixed(sx) + "\" y=\"" + format_fixed(top + ph + 16) +
           "\" text-anchor=\"middle\">" + format_general(vx) + "</text>\n";
    out += "<text x=\"" + format_fixed(left - 6) + "\" y=\"" + format_fixed(sy + 4) + "\" text-anchor=\"end\">" +
           format_general(vy) + "</text>\n";
  }
  out += "<text x=\"" + format_fixed(left + pw / 2) + "\" y=\"" + format_fixed(H - 12) +
         "\" text-anchor=\"middle\">" + svg_escape(spec.x_label) + "</text>\n";
  out += "<text x=\"16\" y=\"" + format_fixed(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         format_fixed(top + ph / 2) + ")\">" + svg_escape(spec.y_label) + "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& sr = series[s];
    std::string pts;
    for (std::size_t i = 0; i < sr.x.size(); ++i) {
      if (!usable(sr.x[i], sr.y[i])) continue;
      if (!pts.empty()) pts += ' ';
      pts += format_fixed(px(sr.x[i])) + "," + format_fixed(py(sr.y[i]));
      if (sr.markers) {
        out += "<circle cx=\"" + format_fixed(px(sr.x[i])) + "\" cy=\"" + format_fixed(py(sr.y[i])) +
               "\" r=\"3\" fill=\"" + sr.color + "\"/>\n";
      }
    }
    if (!pts.empty()) {
      out += "<polyline fill=\"none\" stroke=\"" + sr.color + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    }
    const double ly = top + 14 + 18.0 * static_cast<double>(s);
    out += "<line x1=\"" + format_fixed(W - right + 10) + "\" y1=\"" + format_fixed(ly - 4) + "\" x2=\"" +
           format_fixed(W - right + 30) + "\" y2=\"" + format_fixed(ly - 4) + "\" stroke=\"" + sr.color +
           "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + format_fixed(W - right + 36) + "\" y=\"" + format_fixed(ly) + "\">" +
           svg_escape(sr.label) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace sphfield::cli
