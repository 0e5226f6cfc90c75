#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ellipse/cli.hpp"

namespace ellipse::cli {

namespace {

struct View {
  double x0, y0, x1, y1;
};

std::string fmt(double v) {
  // Plots do not need 17 digits.
  std::ostringstream ss;
  ss.imbue(std::locale::classic());
  ss.precision(6);
  ss << v;
  return ss.str();
}

std::string xml_escape(std::string_view s) {
  std::string out;
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

// Zero set of a general conic inside the view, traced column by column as
// the low and high roots in y. Gaps start new subpaths.
std::string conic_path(const ConicCoeffs& c, const View& v) {
  constexpr int kSteps = 600;
  std::string low, high;
  bool low_open = false, high_open = false;
  auto append = [](std::string& d, bool& open, double x, double y) {
    d += open ? " L" : " M";
    d += fmt(x) + "," + fmt(y);
    open = true;
  };
  for (int i = 0; i <= kSteps; ++i) {
    const double x = v.x0 + (v.x1 - v.x0) * i / kSteps;
    // c y^2 + 2(b x + e) y + (a x^2 + 2 d x + f) = 0
    const double qa = c.c, qb = 2.0 * (c.b * x + c.e), qc = c.a * x * x + 2.0 * c.d * x + c.f;
    double y1 = NAN, y2 = NAN;
    const double scale = std::abs(qa) + std::abs(qb) + std::abs(qc);
    if (std::abs(qa) <= 1e-12 * scale) {
      if (qb != 0.0) y1 = -qc / qb;
    } else {
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        y1 = (-qb - s) / (2.0 * qa);
        y2 = (-qb + s) / (2.0 * qa);
        if (y1 > y2) std::swap(y1, y2);
      }
    }
    auto inside = [&](double y) { return std::isfinite(y) && y >= v.y0 && y <= v.y1; };
    if (inside(y1)) append(low, low_open, x, y1); else low_open = false;
    if (inside(y2)) append(high, high_open, x, y2); else high_open = false;
  }
  std::string d = low + high;
  if (d.empty()) d = " M" + fmt(v.x0) + "," + fmt(v.y0);  // nothing visible
  return d.substr(1);
}

}  // namespace

std::string render_svg(const PointsFile& pts, const ConicCoeffs& ideal, const std::vector<SvgCurve>& fits) {
  View v{0, 0, 1, 1};
  bool any = false;
  auto grow = [&](double x, double y) {
    if (!any) {
      v = {x, y, x, y};
      any = true;
    }
    v.x0 = std::min(v.x0, x);
    v.y0 = std::min(v.y0, y);
    v.x1 = std::max(v.x1, x);
    v.y1 = std::max(v.y1, y);
  };
  for (const auto& p : pts.points) grow(p.x, p.y);
  if (is_ellipse(ideal)) {
    const BBox b = ellipse_bbox(ideal, 1.0);
    grow(b.xmin, b.ymin);
    grow(b.xmax, b.ymax);
  }
  const double margin = 0.05 * std::max({v.x1 - v.x0, v.y1 - v.y0, 1.0});
  v = {v.x0 - margin, v.y0 - margin, v.x1 + margin, v.y1 + margin};
  const double w = v.x1 - v.x0, h = v.y1 - v.y0;
  const double stroke = 0.003 * std::max(w, h);

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\""
      << fmt(std::round(800.0 * h / w)) << "\" viewBox=\"" << fmt(v.x0) << ' ' << fmt(v.y0) << ' '
      << fmt(w) << ' ' << fmt(h) << "\">\n";
  out << "  <rect x=\"" << fmt(v.x0) << "\" y=\"" << fmt(v.y0) << "\" width=\"" << fmt(w)
      << "\" height=\"" << fmt(h) << "\" fill=\"white\"/>\n";

  out << "  <g id=\"points\" fill=\"black\">\n";
  for (std::size_t i = 0; i < pts.points.size(); ++i) {
    const bool outlier = !pts.labels.empty() && pts.labels[i] == PointLabel::Outlier;
    out << "    <circle cx=\"" << fmt(pts.points[i].x) << "\" cy=\"" << fmt(pts.points[i].y)
        << "\" r=\"" << fmt(1.5 * stroke) << '"' << (outlier ? " fill=\"gray\"" : "") << "/>\n";
  }
  out << "  </g>\n";

  auto draw = [&](const ConicCoeffs& c, const char* color, const std::string& cls,
                  const std::string& label) {
    out << "  ";
    if (is_ellipse(c)) {
      const auto g = to_geometry(c);
      out << "<ellipse cx=\"" << fmt(g.center.x) << "\" cy=\"" << fmt(g.center.y) << "\" rx=\""
          << fmt(g.major) << "\" ry=\"" << fmt(g.minor) << "\" transform=\"rotate("
          << fmt(g.angle * 180.0 / std::numbers::pi) << ' ' << fmt(g.center.x) << ' '
          << fmt(g.center.y) << ")\"";
    } else {
      out << "<path d=\"" << conic_path(c, v) << "\"";
    }
    out << " class=\"" << cls << "\" data-label=\"" << xml_escape(label) << "\" fill=\"none\" stroke=\""
        << color << "\" stroke-width=\"" << fmt(stroke) << "\"/>\n";
  };
  draw(ideal, "green", "ideal", "ideal");
  for (const auto& f : fits) draw(f.conic, "blue", "fit", f.label);

  out << "</svg>\n";
  return out.str();
}

}  // namespace ellipse::cli
