#include "echelon/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace echelon::svg {

namespace {

constexpr int kWidth = 720, kHeight = 480;
constexpr int kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;

const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                         "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

struct Range {
  double lo = 0, hi = 1;
  double clamp01(double v) const { return hi > lo ? (v - lo) / (hi - lo) : 0.5; }
};

Range span(const std::vector<double>& values) {
  Range r;
  if (values.empty()) return r;
  r.lo = *std::min_element(values.begin(), values.end());
  r.hi = *std::max_element(values.begin(), values.end());
  if (r.hi == r.lo) {
    r.lo -= 1;
    r.hi += 1;
  }
  const double pad = 0.05 * (r.hi - r.lo);
  r.lo -= pad;
  r.hi += pad;
  return r;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void line_chart(const std::string& path, const std::string& title,
                const std::string& x_label, const std::string& y_label,
                const std::vector<Series>& series) {
  std::vector<double> xs, ys;
  for (const auto& s : series) {
    xs.insert(xs.end(), s.x.begin(), s.x.end());
    for (size_t i = 0; i < s.y.size(); ++i) {
      const double b = i < s.band.size() ? s.band[i] : 0.0;
      ys.push_back(s.y[i] - b);
      ys.push_back(s.y[i] + b);
    }
  }
  if (xs.empty()) throw std::invalid_argument("line_chart: no data");
  Range rx = span(xs), ry = span(ys);
  auto px = [&](double v) { return kLeft + rx.clamp01(v) * (kWidth - kLeft - kRight); };
  auto py = [&](double v) { return kHeight - kBottom - ry.clamp01(v) * (kHeight - kTop - kBottom); };

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << kHeight
      << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << kWidth / 2 << "' y='20' text-anchor='middle' font-size='15'>" << title
      << "</text>\n";
  // axes
  out << "<line x1='" << kLeft << "' y1='" << kHeight - kBottom << "' x2='" << kWidth - kRight
      << "' y2='" << kHeight - kBottom << "' stroke='black'/>\n";
  out << "<line x1='" << kLeft << "' y1='" << kTop << "' x2='" << kLeft << "' y2='"
      << kHeight - kBottom << "' stroke='black'/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double fx = rx.lo + (rx.hi - rx.lo) * tick / 4.0;
    const double fy = ry.lo + (ry.hi - ry.lo) * tick / 4.0;
    out << "<text x='" << px(fx) << "' y='" << kHeight - kBottom + 18
        << "' text-anchor='middle' font-size='11'>" << num(fx) << "</text>\n";
    out << "<text x='" << kLeft - 8 << "' y='" << py(fy) + 4
        << "' text-anchor='end' font-size='11'>" << num(fy) << "</text>\n";
  }
  out << "<text x='" << (kLeft + kWidth - kRight) / 2 << "' y='" << kHeight - 12
      << "' text-anchor='middle' font-size='12'>" << x_label << "</text>\n";
  out << "<text x='16' y='" << (kTop + kHeight - kBottom) / 2
      << "' text-anchor='middle' font-size='12' transform='rotate(-90 16 "
      << (kTop + kHeight - kBottom) / 2 << ")'>" << y_label << "</text>\n";

  for (size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kColors[si % 8];
    if (!s.band.empty()) {
      out << "<path d='";
      for (size_t i = 0; i < s.x.size(); ++i)
        out << (i ? "L" : "M") << px(s.x[i]) << " " << py(s.y[i] + s.band[i]);
      for (size_t i = s.x.size(); i-- > 0;)
        out << "L" << px(s.x[i]) << " " << py(s.y[i] - s.band[i]);
      out << "Z' fill='" << color << "' opacity='0.15' stroke='none'/>\n";
    }
    out << "<path d='";
    for (size_t i = 0; i < s.x.size(); ++i)
      out << (i ? "L" : "M") << px(s.x[i]) << " " << py(s.y[i]);
    out << "' fill='none' stroke='" << color << "' stroke-width='1.8'"
        << (s.dashed ? " stroke-dasharray='6 4'" : "") << "/>\n";
    out << "<text x='" << kWidth - kRight - 6 << "' y='" << kTop + 16 * (si + 1)
        << "' text-anchor='end' font-size='12' fill='" << color << "'>" << s.label
        << "</text>\n";
  }
  out << "</svg>\n";
}

void bar_chart(const std::string& path, const std::string& title,
               const std::vector<std::string>& categories, const std::vector<Series>& series) {
  if (categories.empty() || series.empty())
    throw std::invalid_argument("bar_chart: no data");
  std::vector<double> ys{0.0};
  for (const auto& s : series) ys.insert(ys.end(), s.y.begin(), s.y.end());
  Range ry = span(ys);
  auto py = [&](double v) { return kHeight - kBottom - ry.clamp01(v) * (kHeight - kTop - kBottom); };
  const double group_w =
      static_cast<double>(kWidth - kLeft - kRight) / static_cast<double>(categories.size());
  const double bar_w = group_w / (static_cast<double>(series.size()) + 1.0);

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << kHeight
      << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << kWidth / 2 << "' y='20' text-anchor='middle' font-size='15'>" << title
      << "</text>\n";
  out << "<line x1='" << kLeft << "' y1='" << py(0.0) << "' x2='" << kWidth - kRight << "' y2='"
      << py(0.0) << "' stroke='black'/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double fy = ry.lo + (ry.hi - ry.lo) * tick / 4.0;
    out << "<text x='" << kLeft - 8 << "' y='" << py(fy) + 4
        << "' text-anchor='end' font-size='11'>" << num(fy) << "</text>\n";
  }
  for (size_t c = 0; c < categories.size(); ++c) {
    const double gx = kLeft + group_w * (static_cast<double>(c) + 0.5);
    out << "<text x='" << gx << "' y='" << kHeight - kBottom + 18
        << "' text-anchor='middle' font-size='11'>" << categories[c] << "</text>\n";
    for (size_t si = 0; si < series.size(); ++si) {
      if (c >= series[si].y.size()) continue;
      const double v = series[si].y[c];
      const double x0 =
          gx + (static_cast<double>(si) - static_cast<double>(series.size()) / 2.0) * bar_w;
      const double y0 = std::min(py(0.0), py(v));
      const double h = std::abs(py(v) - py(0.0));
      out << "<rect x='" << x0 << "' y='" << y0 << "' width='" << bar_w * 0.9 << "' height='"
          << h << "' fill='" << kColors[si % 8] << "'/>\n";
    }
  }
  for (size_t si = 0; si < series.size(); ++si)
    out << "<text x='" << kWidth - kRight - 6 << "' y='" << kTop + 16 * (si + 1)
        << "' text-anchor='end' font-size='12' fill='" << kColors[si % 8] << "'>"
        << series[si].label << "</text>\n";
  out << "</svg>\n";
}

}  // namespace echelon::svg
