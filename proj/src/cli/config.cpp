#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "ellipse/cli.hpp"
#include "ellipse/error.hpp"

namespace ellipse::cli {

namespace {

using nlohmann::json;

std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

// Walks one object, remembering the dotted path for messages and rejecting
// keys nobody asked for.
class Fields {
 public:
  Fields(const json& obj, std::string path, std::string_view origin)
      : obj_(obj), path_(std::move(path)), origin_(origin) {
    if (!obj_.is_object()) fail(path_.empty() ? "document" : path_, "must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  Fields child(const std::string& key) {
    seen_.insert(key);
    if (!obj_.contains(key)) fail(at(key), "is required");
    return Fields(obj_.at(key), at(key), origin_);
  }

  double number(const std::string& key, std::optional<double> dflt = std::nullopt) {
    seen_.insert(key);
    if (!obj_.contains(key)) {
      if (!dflt) fail(at(key), "is required");
      return *dflt;
    }
    const json& v = obj_.at(key);
    if (!v.is_number()) fail(at(key), "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(at(key), "must be finite");
    return d;
  }

  long long integer(const std::string& key, std::optional<long long> dflt = std::nullopt) {
    seen_.insert(key);
    if (!obj_.contains(key)) {
      if (!dflt) fail(at(key), "is required");
      return *dflt;
    }
    const json& v = obj_.at(key);
    if (!v.is_number_integer()) fail(at(key), "must be an integer");
    return v.get<long long>();
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t dflt) {
    seen_.insert(key);
    if (!obj_.contains(key)) return dflt;
    const json& v = obj_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      fail(at(key), "must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  void finish() {
    for (const auto& [k, v] : obj_.items())
      if (!seen_.count(k)) fail(at(k), "unknown field");
  }

  [[noreturn]] void fail(const std::string& where, const std::string& what) const {
    throw CliError(kConfig, std::string(origin_) + ": " + where + ": " + what);
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& obj_;
  std::string path_;
  std::string_view origin_;
  std::set<std::string> seen_;
};

std::string num(double v) { return format_number(v); }

}  // namespace

SceneConfig parse_config(std::string_view text, std::string_view origin) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte);
    std::string msg = e.what();
    // Drop the library's "[json.exception.parse_error.101] " prefix.
    if (const auto p = msg.find("] "); p != std::string::npos) msg = msg.substr(p + 2);
    throw CliError(kConfig, std::string(origin) + ":" + std::to_string(line) + ":" +
                                std::to_string(col) + ": " + msg);
  }

  Fields top(doc, "", origin);
  SceneConfig cfg;

  {
    Fields f = top.child("intrinsics");
    cfg.intr.focal = f.number("f_e");
    cfg.intr.px = f.number("px", 0.0);
    cfg.intr.py = f.number("py", 0.0);
    cfg.intr.l = f.number("l", 0.0);
    if (!(cfg.intr.focal > 0.0)) f.fail(f.at("f_e"), "must be > 0, got " + num(cfg.intr.focal));
    if (cfg.intr.l < 0.0 || cfg.intr.l > 1.0) f.fail(f.at("l"), "must be in [0, 1], got " + num(cfg.intr.l));
    f.finish();
  }
  {
    Fields f = top.child("scene");
    cfg.scene.u = f.number("u");
    cfg.scene.v = f.number("v");
    cfg.scene.theta = f.number("theta");
    if (!(cfg.scene.theta > 0.0 && cfg.scene.theta < std::numbers::pi / 2))
      f.fail(f.at("theta"), "must be in (0, pi/2), got " + num(cfg.scene.theta));
    if (!scene_is_valid(cfg.scene))
      f.fail(f.at("theta"), "sphere is not fully in front of the camera (atan(|(u, v)|) + theta >= pi/2)");
    f.finish();
  }
  {
    Fields f = top.child("sampling");
    const long long n = f.integer("n_inliers");
    if (n < 0 || n > 10'000'000) f.fail(f.at("n_inliers"), "must be in [0, 1e7], got " + std::to_string(n));
    cfg.n_inliers = static_cast<int>(n);
    cfg.arc_start = f.number("arc_start", 0.0);
    cfg.arc_end = f.number("arc_end", cfg.arc_start + 2.0 * std::numbers::pi);
    cfg.sigma = f.number("sigma", 0.0);
    if (cfg.sigma < 0.0) f.fail(f.at("sigma"), "must be >= 0, got " + num(cfg.sigma));
    f.finish();
  }
  if (top.has("outliers")) {
    Fields f = top.child("outliers");
    const long long n = f.integer("count", 0);
    if (n < 0 || n > 10'000'000) f.fail(f.at("count"), "must be in [0, 1e7], got " + std::to_string(n));
    cfg.outlier_count = static_cast<int>(n);
    if (f.has("bbox")) {
      const json& b = f.raw("bbox");
      const std::string where = f.at("bbox");
      if (!b.is_array() || b.size() != 4)
        f.fail(where, "must be [xmin, ymin, xmax, ymax]");
      double v[4];
      for (std::size_t i = 0; i < 4; ++i) {
        if (!b[i].is_number()) f.fail(where + "[" + std::to_string(i) + "]", "must be a number");
        v[i] = b[i].get<double>();
        if (!std::isfinite(v[i])) f.fail(where + "[" + std::to_string(i) + "]", "must be finite");
      }
      if (!(v[2] > v[0] && v[3] > v[1])) f.fail(where, "must have xmax > xmin and ymax > ymin");
      cfg.outlier_bbox = BBox{v[0], v[1], v[2], v[3]};
    }
    f.finish();
  }
  cfg.seed = top.unsigned_integer("seed", 0);
  top.finish();

  if (cfg.n_inliers + cfg.outlier_count < 1)
    throw CliError(kConfig, std::string(origin) + ": sampling.n_inliers: no points would be generated");
  return cfg;
}

SceneConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(kConfig, path.string() + ": cannot open config");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

Scenario synthesize(const SceneConfig& cfg, std::uint64_t seed) {
  Scenario s;
  s.truth = project_sphere(cfg.scene, cfg.intr);
  std::mt19937_64 rng(seed);
  if (cfg.n_inliers > 0)
    s.points = sample_conic_points(s.truth, cfg.n_inliers, cfg.arc_start, cfg.arc_end, cfg.sigma, rng);
  else
    s.points.sigma = cfg.sigma;
  BBox box;
  if (cfg.outlier_bbox) {
    box = *cfg.outlier_bbox;
    box.xmin -= cfg.intr.px;
    box.xmax -= cfg.intr.px;
    box.ymin -= cfg.intr.py;
    box.ymax -= cfg.intr.py;
  } else {
    box = ellipse_bbox(s.truth, 2.0);
  }
  s.points = add_outliers(std::move(s.points), cfg.outlier_count, box, rng);
  return s;
}

}  // namespace ellipse::cli
