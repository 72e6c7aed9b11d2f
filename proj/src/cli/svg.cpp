#include "lilxing/cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace lilxing::cli {

namespace {

constexpr double kWidth = 640, kHeight = 440;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 60;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                    "#8c564b"};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Roughly five round tick values covering [lo, hi].
std::vector<double> ticks(double lo, double hi) {
  const double raw = (hi - lo) / 5;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) {
    out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  }
  return out;
}

}  // namespace

void write_rate_plot(std::ostream& out, const std::vector<RateSeries>& series,
                     const std::string& title) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = xlo, yhi = -xlo;
  for (const auto& s : series) {
    if (s.loglog.size() != s.log_p.size()) throw std::invalid_argument("write_rate_plot: ragged series");
    for (std::size_t i = 0; i < s.loglog.size(); ++i) {
      xlo = std::min(xlo, s.loglog[i]);
      xhi = std::max(xhi, s.loglog[i]);
      ylo = std::min(ylo, s.log_p[i]);
      yhi = std::max(yhi, s.log_p[i]);
    }
  }
  if (!std::isfinite(xlo)) throw std::invalid_argument("write_rate_plot: no finite points");
  if (xhi - xlo < 1e-9) { xlo -= 0.5; xhi += 0.5; }
  if (yhi - ylo < 1e-9) { ylo -= 0.5; yhi += 0.5; }
  const double xpad = 0.05 * (xhi - xlo), ypad = 0.08 * (yhi - ylo);
  xlo -= xpad; xhi += xpad; ylo -= ypad; yhi += ypad;

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - xlo) / (xhi - xlo) * pw; };
  auto sy = [&](double y) { return kTop + (yhi - y) / (yhi - ylo) * ph; };

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(title) << "</text>\n"
      << "<defs><clipPath id=\"plot\"><rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop)
      << "\" width=\"" << num(pw) << "\" height=\"" << num(ph) << "\"/></clipPath></defs>\n"
      << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw)
      << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (double v : ticks(xlo, xhi)) {
    out << "<line x1=\"" << num(sx(v)) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(sx(v))
        << "\" y2=\"" << num(kTop + ph + 5) << "\" stroke=\"black\"/>"
        << "<text x=\"" << num(sx(v)) << "\" y=\"" << num(kTop + ph + 18)
        << "\" text-anchor=\"middle\">" << num(v) << "</text>\n";
  }
  for (double v : ticks(ylo, yhi)) {
    out << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(sy(v)) << "\" x2=\"" << num(kLeft)
        << "\" y2=\"" << num(sy(v)) << "\" stroke=\"black\"/>"
        << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(sy(v) + 4)
        << "\" text-anchor=\"end\">" << num(v) << "</text>\n";
  }
  out << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 15)
      << "\" text-anchor=\"middle\">log log(1/t)</text>\n"
      << "<text x=\"18\" y=\"" << num(kTop + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << num(kTop + ph / 2) << ")\">log p</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* colour = kPalette[k % std::size(kPalette)];
    if (s.loglog.empty()) continue;
    const double mx = std::accumulate(s.loglog.begin(), s.loglog.end(), 0.0) / s.loglog.size();
    const double my = std::accumulate(s.log_p.begin(), s.log_p.end(), 0.0) / s.log_p.size();
    const double y0 = my - s.epsilon * (xlo - mx), y1 = my - s.epsilon * (xhi - mx);
    out << "<line clip-path=\"url(#plot)\" x1=\"" << num(sx(xlo)) << "\" y1=\"" << num(sy(y0))
        << "\" x2=\"" << num(sx(xhi)) << "\" y2=\"" << num(sy(y1)) << "\" stroke=\"" << colour
        << "\" stroke-dasharray=\"6 4\"/>\n";
    std::vector<std::size_t> order(s.loglog.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s.loglog[a] < s.loglog[b]; });
    out << "<polyline fill=\"none\" stroke=\"" << colour << "\" points=\"";
    for (std::size_t i : order) out << num(sx(s.loglog[i])) << ',' << num(sy(s.log_p[i])) << ' ';
    out << "\"/>\n";
    for (std::size_t i : order) {
      out << "<circle cx=\"" << num(sx(s.loglog[i])) << "\" cy=\"" << num(sy(s.log_p[i]))
          << "\" r=\"4\" fill=\"" << colour << "\"/>\n";
    }
    const double ly = kTop + 14 + 36 * double(k);
    out << "<circle cx=\"" << num(kWidth - kRight + 18) << "\" cy=\"" << num(ly) << "\" r=\"4\" fill=\""
        << colour << "\"/><text x=\"" << num(kWidth - kRight + 28) << "\" y=\"" << num(ly + 4)
        << "\">eps = " << num(s.epsilon) << "</text>\n"
        << "<line x1=\"" << num(kWidth - kRight + 10) << "\" y1=\"" << num(ly + 16) << "\" x2=\""
        << num(kWidth - kRight + 26) << "\" y2=\"" << num(ly + 16) << "\" stroke=\"" << colour
        << "\" stroke-dasharray=\"6 4\"/><text x=\"" << num(kWidth - kRight + 28) << "\" y=\""
        << num(ly + 20) << "\">slope -" << num(s.epsilon) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace lilxing::cli
