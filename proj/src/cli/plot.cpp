#include "hslab/cli/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <sstream>

#include "hslab/cli/artifacts.hpp"
#include "hslab/errors.hpp"
#include "hslab/rate_lab.hpp"

namespace hslab::cli {

namespace {

constexpr double kWidth = 720, kHeight = 480;
constexpr double kLeft = 80, kRight = 30, kTop = 40, kBottom = 60;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string px(double v) { return fmt("%.2f", v); }

struct Axis {
  double lo = 0, hi = 1;  // log10 bounds
  double a = 0, b = 1;    // pixel range

  double map(double v) const { return a + (std::log10(v) - lo) / (hi - lo) * (b - a); }
};

Axis make_axis(double vmin, double vmax, double a, double b) {
  Axis ax;
  ax.lo = std::floor(std::log10(vmin));
  ax.hi = std::ceil(std::log10(vmax));
  if (ax.hi <= ax.lo) ax.hi = ax.lo + 1;
  ax.a = a;
  ax.b = b;
  return ax;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '-' && !out.empty() && out.back() == '-') out += " -";
    else out += c;
  }
  return out;
}

std::string slope_label(const char* name, const std::vector<double>& n, const std::vector<double>& v) {
  try {
    const auto f = fit_slope(n, v);
    return std::string(name) + " slope " + fmt("%.3f", f.slope) + " ± " + fmt("%.3f", f.half_width);
  } catch (const Error&) {
    return std::string(name) + " slope n/a (fewer than 4 points)";
  }
}

}  // namespace

std::string render_rate_svg(const CsvTable& table) {
  const auto n = table.column_values("n");
  const auto err = table.column_values("mean_err");
  const auto pred = table.column_values("predicted");
  std::vector<double> se(n.size(), 0.0);
  const bool has_se = std::find(table.header.begin(), table.header.end(), "stderr") != table.header.end();
  if (has_se) se = table.column_values("stderr");
  if (n.empty()) throw Error("report has no rows to plot");
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!(n[i] > 0.0) || !(err[i] > 0.0) || !(pred[i] > 0.0) || !std::isfinite(n[i]) || !std::isfinite(err[i]) ||
        !std::isfinite(pred[i])) {
      throw Error("report row " + std::to_string(i + 1) + " has a nonpositive or nonfinite value");
    }
  }

  double ymin = std::numeric_limits<double>::infinity(), ymax = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double lo = err[i] - se[i] > 0.0 ? err[i] - se[i] : err[i];
    ymin = std::min({ymin, lo, pred[i]});
    ymax = std::max({ymax, err[i] + se[i], pred[i]});
  }
  const auto [xmin, xmax] = std::minmax_element(n.begin(), n.end());
  const Axis ax = make_axis(*xmin, *xmax, kLeft, kWidth - kRight);
  const Axis ay = make_axis(ymin, ymax, kHeight - kBottom, kTop);

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  for (const auto& c : table.comments) {
    const auto b = c.find_first_not_of("# ");
    if (b != std::string::npos) s << "<!-- " << escape(c.substr(b)) << " -->\n";
  }
  s << "<!-- plotted by " << kToolName << " " << tool_version() << " -->\n";
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // grid and ticks
  for (int k = static_cast<int>(ax.lo); k <= static_cast<int>(ax.hi); ++k) {
    const double x = ax.map(std::pow(10.0, k));
    s << "<line x1=\"" << px(x) << "\" y1=\"" << px(kTop) << "\" x2=\"" << px(x) << "\" y2=\""
      << px(kHeight - kBottom) << "\" stroke=\"#dddddd\"/>\n";
    s << "<text x=\"" << px(x) << "\" y=\"" << px(kHeight - kBottom + 18)
      << "\" text-anchor=\"middle\">10<tspan dy=\"-6\" font-size=\"9\">" << k << "</tspan></text>\n";
    for (int m = 2; m <= 9 && k < static_cast<int>(ax.hi); ++m) {
      const double xm = ax.map(m * std::pow(10.0, k));
      s << "<line x1=\"" << px(xm) << "\" y1=\"" << px(kHeight - kBottom) << "\" x2=\"" << px(xm) << "\" y2=\""
        << px(kHeight - kBottom - 4) << "\" stroke=\"black\"/>\n";
    }
  }
  for (int k = static_cast<int>(ay.lo); k <= static_cast<int>(ay.hi); ++k) {
    const double y = ay.map(std::pow(10.0, k));
    s << "<line x1=\"" << px(kLeft) << "\" y1=\"" << px(y) << "\" x2=\"" << px(kWidth - kRight) << "\" y2=\""
      << px(y) << "\" stroke=\"#dddddd\"/>\n";
    s << "<text x=\"" << px(kLeft - 8) << "\" y=\"" << px(y + 4)
      << "\" text-anchor=\"end\">10<tspan dy=\"-6\" font-size=\"9\">" << k << "</tspan></text>\n";
  }
  s << "<rect x=\"" << px(kLeft) << "\" y=\"" << px(kTop) << "\" width=\"" << px(kWidth - kLeft - kRight)
    << "\" height=\"" << px(kHeight - kTop - kBottom) << "\" fill=\"none\" stroke=\"black\"/>\n";
  s << "<text x=\"" << px((kLeft + kWidth - kRight) / 2) << "\" y=\"" << px(kHeight - 15)
    << "\" text-anchor=\"middle\">sample size n</text>\n";
  s << "<text transform=\"translate(20," << px((kTop + kHeight - kBottom) / 2)
    << ") rotate(-90)\" text-anchor=\"middle\">L2 error</text>\n";

  auto series = [&](const std::vector<double>& v, const char* color, const char* dash) {
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"";
    if (*dash) s << " stroke-dasharray=\"" << dash << "\"";
    s << " points=\"";
    for (std::size_t i = 0; i < n.size(); ++i) s << (i ? " " : "") << px(ax.map(n[i])) << ',' << px(ay.map(v[i]));
    s << "\"/>\n";
    for (std::size_t i = 0; i < n.size(); ++i) {
      s << "<circle cx=\"" << px(ax.map(n[i])) << "\" cy=\"" << px(ay.map(v[i])) << "\" r=\"3\" fill=\"" << color
        << "\"/>\n";
    }
  };
  if (has_se) {
    for (std::size_t i = 0; i < n.size(); ++i) {
      if (!(se[i] > 0.0) || !(err[i] - se[i] > 0.0)) continue;
      const double x = ax.map(n[i]);
      s << "<line x1=\"" << px(x) << "\" y1=\"" << px(ay.map(err[i] - se[i])) << "\" x2=\"" << px(x) << "\" y2=\""
        << px(ay.map(err[i] + se[i])) << "\" stroke=\"#1f77b4\"/>\n";
    }
  }
  series(pred, "#ff7f0e", "6,4");
  series(err, "#1f77b4", "");

  const double lx = kWidth - kRight - 250, ly = kTop + 20;
  s << "<rect x=\"" << px(lx - 10) << "\" y=\"" << px(ly - 15) << "\" width=\"250\" height=\"48\" fill=\"white\""
    << " stroke=\"#999999\"/>\n";
  s << "<line x1=\"" << px(lx) << "\" y1=\"" << px(ly - 4) << "\" x2=\"" << px(lx + 24) << "\" y2=\"" << px(ly - 4)
    << "\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n";
  s << "<text x=\"" << px(lx + 30) << "\" y=\"" << px(ly) << "\">" << slope_label("empirical", n, err)
    << "</text>\n";
  s << "<line x1=\"" << px(lx) << "\" y1=\"" << px(ly + 16) << "\" x2=\"" << px(lx + 24) << "\" y2=\""
    << px(ly + 16) << "\" stroke=\"#ff7f0e\" stroke-width=\"2\" stroke-dasharray=\"6,4\"/>\n";
  s << "<text x=\"" << px(lx + 30) << "\" y=\"" << px(ly + 20) << "\">" << slope_label("predicted", n, pred)
    << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

std::string plot_report(const std::string& report_path, const std::string& out_path) {
  const CsvTable t = read_csv_file(report_path);
  const std::string svg = render_rate_svg(t);
  std::string out = out_path;
  if (out.empty()) out = std::filesystem::path(report_path).replace_extension(".svg").string();
  atomic_write(out, svg);
  return out;
}

}  // namespace hslab::cli
