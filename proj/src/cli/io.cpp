#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ellipse/cli.hpp"

namespace ellipse::cli {

LogLevel log_level() {
  const char* env = std::getenv("ELLIPSE_LOG");
  if (!env) return LogLevel::Warn;
  const std::string_view v(env);
  if (v == "error") return LogLevel::Error;
  if (v == "info") return LogLevel::Info;
  if (v == "debug") return LogLevel::Debug;
  return LogLevel::Warn;
}

void log(LogLevel level, std::string_view msg) {
  if (level > log_level()) return;
  static constexpr const char* names[] = {"error", "warn", "info", "debug"};
  std::cerr << "ellipse [" << names[static_cast<int>(level)] << "] " << msg << '\n';
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

PointsFile parse_points(std::string_view text, std::string_view origin) {
  PointsFile pf;
  std::size_t columns = 0;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw CliError(kConfig, std::string(origin) + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;

    std::vector<std::string_view> cols;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cols.push_back(trim(line.substr(start, comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cols.size() != 2 && cols.size() != 3)
      fail("expected 2 or 3 columns, got " + std::to_string(cols.size()));
    if (columns == 0) columns = cols.size();
    if (cols.size() != columns)
      fail("expected " + std::to_string(columns) + " columns like the first data line, got " +
           std::to_string(cols.size()));
    Point2 p;
    if (!parse_double(cols[0], p.x)) fail("bad x value '" + std::string(cols[0]) + "'");
    if (!parse_double(cols[1], p.y)) fail("bad y value '" + std::string(cols[1]) + "'");
    pf.points.push_back(p);
    if (columns == 3) {
      if (cols[2] == "inlier")
        pf.labels.push_back(PointLabel::Inlier);
      else if (cols[2] == "outlier")
        pf.labels.push_back(PointLabel::Outlier);
      else
        fail("label must be 'inlier' or 'outlier', got '" + std::string(cols[2]) + "'");
    }
  }
  if (pf.points.empty()) throw CliError(kConfig, std::string(origin) + ": no data lines");
  return pf;
}

PointsFile load_points(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(kConfig, path.string() + ": cannot open points file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_points(ss.str(), path.string());
}

std::string format_points(const PointsFile& pf) {
  std::string out;
  for (std::size_t i = 0; i < pf.points.size(); ++i) {
    out += format_number(pf.points[i].x);
    out += ',';
    out += format_number(pf.points[i].y);
    if (!pf.labels.empty()) out += pf.labels[i] == PointLabel::Inlier ? ",inlier" : ",outlier";
    out += '\n';
  }
  return out;
}

namespace {

void emit(const nlohmann::ordered_json& j, std::string& out, int indent) {
  using V = nlohmann::detail::value_t;
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  switch (j.type()) {
    case V::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad + "  " + nlohmann::ordered_json(k).dump() + ": ";
        emit(v, out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case V::array: {
      bool scalars = true;
      for (const auto& v : j) scalars = scalars && !v.is_structured();
      if (scalars) {
        out += '[';
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ", ";
          emit(j[i], out, indent);
        }
        out += ']';
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad + "  ";
        emit(j[i], out, indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case V::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_number(v) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string to_json_text(const nlohmann::ordered_json& j) {
  std::string out;
  emit(j, out, 0);
  out += '\n';
  return out;
}

nlohmann::ordered_json conic_json(const ConicCoeffs& c) {
  return {{"a", c.a}, {"b", c.b}, {"c", c.c}, {"d", c.d}, {"e", c.e}, {"f", c.f}};
}

nlohmann::ordered_json geometry_json(const ConicCoeffs& c) {
  if (!is_ellipse(c)) return nullptr;
  const auto g = to_geometry(c);
  return {{"center_x", g.center.x}, {"center_y", g.center.y}, {"major", g.major},
          {"minor", g.minor},       {"angle", g.angle}};
}

}  // namespace ellipse::cli
