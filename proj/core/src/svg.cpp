#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "cube_transport/concentration.hpp"
#include "cube_transport/error.hpp"

namespace cube_transport {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMargin = 50.0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string profile_svg(const ConcentrationProfile& p, const std::string& title) {
  const double t_max = p.ts.empty() ? 1.0 : std::max(p.ts.back(), 1e-12);
  const auto px = [&](double t) { return kMargin + t / t_max * (kWidth - 2 * kMargin); };
  const auto py = [&](double y) { return kHeight - kMargin - std::clamp(y, 0.0, 1.0) * (kHeight - 2 * kMargin); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";
  // Axes with ticks at 0, 0.5, 1 and at the ends of the t range.
  svg << "<line x1=\"" << kMargin << "\" y1=\"" << py(0) << "\" x2=\"" << px(t_max) << "\" y2=\"" << py(0)
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kMargin << "\" y1=\"" << py(0) << "\" x2=\"" << kMargin << "\" y2=\"" << py(1)
      << "\" stroke=\"black\"/>\n";
  for (double y : {0.0, 0.5, 1.0}) {
    svg << "<text x=\"" << kMargin - 8 << "\" y=\"" << fmt(py(y) + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
        << y << "</text>\n";
  }
  svg << "<text x=\"" << kMargin << "\" y=\"" << py(0) + 18 << "\" font-size=\"11\">0</text>\n";
  svg << "<text x=\"" << px(t_max) << "\" y=\"" << py(0) + 18 << "\" text-anchor=\"end\" font-size=\"11\">t = "
      << fmt(t_max) << "</text>\n";

  // 3 SE band around the measured curve.
  svg << "<polygon fill=\"steelblue\" fill-opacity=\"0.25\" stroke=\"none\" points=\"";
  for (std::size_t i = 0; i < p.ts.size(); ++i) {
    svg << fmt(px(p.ts[i])) << ',' << fmt(py(p.measured[i] + 3 * p.standard_error[i])) << ' ';
  }
  for (std::size_t i = p.ts.size(); i-- > 0;) {
    svg << fmt(px(p.ts[i])) << ',' << fmt(py(p.measured[i] - 3 * p.standard_error[i])) << ' ';
  }
  svg << "\"/>\n";

  const auto polyline = [&](const std::vector<double>& ys, const char* color) {
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < p.ts.size(); ++i) {
      svg << fmt(px(p.ts[i])) << ',' << fmt(py(ys[i])) << ' ';
    }
    svg << "\"/>\n";
  };
  polyline(p.measured, "steelblue");
  polyline(p.bound, "firebrick");
  svg << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kMargin << "\" text-anchor=\"end\" font-size=\"11\" "
      << "fill=\"steelblue\">measured</text>\n";
  svg << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kMargin + 14 << "\" text-anchor=\"end\" font-size=\"11\" "
      << "fill=\"firebrick\">1 - exp(-t^2/alpha^2), alpha = " << fmt(p.alpha) << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

void write_profile_svg(const ConcentrationProfile& p, const std::string& title, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot write " + path.string());
  }
  out << profile_svg(p, title);
}

}  // namespace cube_transport
