#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ellipse/conic.hpp"
#include "ellipse/sphere.hpp"

namespace ellipse::cli {

enum Exit : int { kOk = 0, kConfig = 2, kIo = 3, kInsufficient = 4, kNoModel = 5 };

class CliError : public std::runtime_error {
 public:
  CliError(Exit code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Exit code() const noexcept { return code_; }

 private:
  Exit code_;
};

// ---- logging (stderr only) -------------------------------------------------

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Level from ELLIPSE_LOG; warn when unset or unrecognized.
LogLevel log_level();
void log(LogLevel level, std::string_view msg);

// ---- scene configuration ---------------------------------------------------

struct SceneConfig {
  Intrinsics intr;
  SphereScene scene;
  int n_inliers = 0;
  double arc_start = 0.0;
  double arc_end = 0.0;  // defaults to 2*pi when absent
  double sigma = 0.0;
  int outlier_count = 0;
  std::optional<BBox> outlier_bbox;  // image coordinates; default: 2x ellipse box
  std::uint64_t seed = 0;
};

/// Parses and validates a config document. Errors carry "origin:line:col"
/// for syntax problems and the dotted field path for semantic ones.
SceneConfig parse_config(std::string_view text, std::string_view origin = "config");
SceneConfig load_config(const std::filesystem::path& path);

/// Synthetic data for one seed: centered points and the oracle conic.
struct Scenario {
  ConicCoeffs truth;  // centered, normalized
  PointSet points;    // centered
};
Scenario synthesize(const SceneConfig& cfg, std::uint64_t seed);

// ---- text formats ------------------------------------------------------------

/// 17 significant digits, shortest exponent form, locale independent;
/// "nan", "inf", "-inf" for non-finite values.
std::string format_number(double v);

struct PointsFile {
  std::vector<Point2> points;      // image coordinates
  std::vector<PointLabel> labels;  // empty or one per point
};

PointsFile parse_points(std::string_view text, std::string_view origin = "points");
PointsFile load_points(const std::filesystem::path& path);
std::string format_points(const PointsFile& pf);

/// JSON text with every float printed through format_number (non-finite
/// becomes null); arrays of scalars stay on one line.
std::string to_json_text(const nlohmann::ordered_json& j);

nlohmann::ordered_json conic_json(const ConicCoeffs& c);
nlohmann::ordered_json geometry_json(const ConicCoeffs& c);  // null unless an ellipse

// ---- svg ----------------------------------------------------------------------

struct SvgCurve {
  std::string label;
  ConicCoeffs conic;  // image coordinates
};

/// Points, the ideal conic stroked green and each fit stroked blue.
/// Exactly one drawing element per conic.
std::string render_svg(const PointsFile& pts, const ConicCoeffs& ideal,
                       const std::vector<SvgCurve>& fits);

// ---- commands ----------------------------------------------------------------

struct GenerateOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;  // stdout when unset
};

struct FitOptions {
  std::filesystem::path points;
  std::string algorithm;  // ls-svd | direct | three-point-ransac
  std::optional<double> fe;
  double px = 0.0;
  double py = 0.0;
  double l = 0.0;
  std::optional<double> threshold;
  std::optional<double> confidence;
  std::optional<int> max_iters;
  std::optional<std::size_t> min_consensus;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> out;  // stdout when unset
  bool timestamps = false;
};

struct CompareOptions {
  std::filesystem::path config;
  int trials = 1;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  std::optional<double> threshold;  // default max(3 sigma, 0.05)
  std::optional<double> confidence;
  std::optional<int> max_iters;
};

/// Each returns a process exit code and never throws; diagnostics go to
/// `err`, machine-readable output to `out` when no file is given.
int cmd_generate(const GenerateOptions& opt, std::ostream& out, std::ostream& err);
int cmd_fit(const FitOptions& opt, std::ostream& out, std::ostream& err);
int cmd_compare(const CompareOptions& opt, std::ostream& out, std::ostream& err);

/// Full command line, as `main` sees it.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ellipse::cli
