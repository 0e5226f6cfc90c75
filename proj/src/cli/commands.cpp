#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include <CLI11.hpp>

#include "ellipse/cli.hpp"
#include "ellipse/error.hpp"
#include "ellipse/fitters.hpp"
#include "ellipse/ransac.hpp"

namespace ellipse::cli {

namespace {

using nlohmann::ordered_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CliError(kIo, path.string() + ": cannot open for writing");
  f << content;
  f.flush();
  if (!f) throw CliError(kIo, path.string() + ": write failed");
}

Exit exit_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::InsufficientData:
    case ErrorCode::DegenerateSample:
      return kInsufficient;
    case ErrorCode::NoModel:
      return kNoModel;
    default:
      return kConfig;
  }
}

// Runs a command body, turning every failure into an exit code.
template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const CliError& e) {
    err << "error: " << e.what() << '\n';
    return e.code();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  }
}

ordered_json intrinsics_json(const Intrinsics& intr, bool has_focal = true) {
  ordered_json j;
  j["f_e"] = has_focal ? ordered_json(intr.focal) : ordered_json(nullptr);
  j["px"] = intr.px;
  j["py"] = intr.py;
  j["l"] = intr.l;
  return j;
}

ordered_json scene_json(const SphereScene& s) { return {{"u", s.u}, {"v", s.v}, {"theta", s.theta}}; }

ConicCoeffs to_image(const ConicCoeffs& centered, const Intrinsics& intr) {
  return normalize(translate(centered, intr.px, intr.py));
}

PointsFile image_points(const PointSet& ps, const Intrinsics& intr) {
  PointsFile pf;
  pf.points = shift_points(ps.points, intr.px, intr.py);
  pf.labels = ps.labels;
  return pf;
}

std::vector<Point2> centered(const std::vector<Point2>& pts, double px, double py) {
  return shift_points(pts, -px, -py);
}

}  // namespace

// ---- generate ------------------------------------------------------------------

int cmd_generate(const GenerateOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const SceneConfig cfg = load_config(opt.config);
    const Scenario sc = synthesize(cfg, cfg.seed);
    const PointsFile pf = image_points(sc.points, cfg.intr);
    const std::string csv = format_points(pf);
    log(LogLevel::Info, "generate: " + std::to_string(pf.points.size()) + " points");
    if (!opt.out) {
      out << csv;
      return int{kOk};
    }
    write_file(*opt.out, csv);

    ordered_json truth;
    truth["seed"] = cfg.seed;
    truth["intrinsics"] = intrinsics_json(cfg.intr);
    truth["scene"] = scene_json(cfg.scene);
    const ConicCoeffs img = to_image(sc.truth, cfg.intr);
    truth["conic"] = conic_json(img);
    truth["conic_centered"] = conic_json(sc.truth);
    truth["geometry"] = geometry_json(img);
    truth["n_inliers"] = cfg.n_inliers;
    truth["n_outliers"] = cfg.outlier_count;
    truth["sigma"] = cfg.sigma;
    auto truth_path = *opt.out;
    truth_path.replace_extension(".truth.json");
    write_file(truth_path, to_json_text(truth));
    return int{kOk};
  });
}

// ---- fit -----------------------------------------------------------------------

int cmd_fit(const FitOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const bool ransac = opt.algorithm == "three-point-ransac";
    if (opt.algorithm != "ls-svd" && opt.algorithm != "direct" && !ransac)
      throw CliError(kConfig, "--algo: unknown algorithm '" + opt.algorithm + "'");
    if (ransac && !opt.fe) throw CliError(kConfig, "--fe is required for three-point-ransac");
    if (opt.fe && !(*opt.fe > 0.0 && std::isfinite(*opt.fe))) throw CliError(kConfig, "--fe must be > 0");
    if (!(opt.l >= 0.0 && opt.l <= 1.0)) throw CliError(kConfig, "--l must be in [0, 1]");

    const PointsFile pf = load_points(opt.points);
    const Intrinsics intr{opt.fe.value_or(1.0), opt.px, opt.py, opt.l};
    PointSet ps;
    ps.points = centered(pf.points, opt.px, opt.py);
    ps.labels = pf.labels;
    log(LogLevel::Info, "fit: " + std::to_string(ps.points.size()) + " points, " + opt.algorithm);

    ordered_json rep;
    rep["algorithm"] = opt.algorithm;
    rep["seed"] = opt.seed;
    rep["n_points"] = ps.points.size();
    rep["intrinsics"] = intrinsics_json(intr, opt.fe.has_value());

    ConicCoeffs c;
    ordered_json inliers = nullptr, details = nullptr;
    int iterations = 1;
    if (opt.algorithm == "ls-svd") {
      c = fit_ls_svd(ps.points);
    } else if (opt.algorithm == "direct") {
      c = fit_direct_ellipse(ps.points);
    } else {
      RansacConfig cfg;
      if (opt.threshold) cfg.threshold = *opt.threshold;
      if (opt.confidence) cfg.confidence = *opt.confidence;
      if (opt.max_iters) cfg.max_iterations = *opt.max_iters;
      cfg.min_consensus = opt.min_consensus;
      cfg.seed = opt.seed;
      const RansacResult r = run_ransac(ps, intr, cfg);
      c = r.conic;
      iterations = r.iterations;
      ordered_json mask = ordered_json::array();
      for (bool b : r.inlier_mask) mask.push_back(b ? 1 : 0);
      inliers = {{"count", r.consensus}, {"mask", mask}};
      details["threshold"] = cfg.threshold;
      details["confidence"] = cfg.confidence;
      details["max_iterations"] = cfg.max_iterations;
      details["min_consensus"] = cfg.min_consensus.value_or(ps.points.size());
      details["winning_iteration"] = r.winning_iteration;
      details["winning_consensus"] = r.winning_consensus;
      details["sample"] = r.sample;
      details["refined"] = r.refined;
      details["refine_converged"] = r.refine_converged;
      details["scene"] = r.scene ? scene_json(*r.scene) : ordered_json(nullptr);
    }
    c = normalize(c);
    const ConicCoeffs img = to_image(c, intr);
    rep["conic"] = conic_json(img);
    rep["conic_centered"] = conic_json(c);
    rep["is_ellipse"] = is_ellipse(c);
    rep["geometry"] = geometry_json(img);
    rep["residuals"] = {{"s1", s1_residual(c)},
                        {"s2", opt.fe ? ordered_json(s2_residual(c, intr)) : ordered_json(nullptr)}};
    rep["inliers"] = inliers;
    rep["iterations"] = iterations;
    rep["ransac"] = details;
    if (opt.timestamps) {
      const std::chrono::duration<double, std::milli> dt = std::chrono::steady_clock::now() - t0;
      rep["wall_time_ms"] = dt.count();
    }

    const std::string text = to_json_text(rep);
    if (opt.out)
      write_file(*opt.out, text);
    else
      out << text;
    return int{kOk};
  });
}

// ---- compare -------------------------------------------------------------------

namespace {

struct Metrics {
  bool ok = false;
  bool ellipse = false;
  double conic_err = kNaN;
  double center_err = kNaN;
  double major_err = kNaN;
  double minor_err = kNaN;
};

Metrics measure(const ConicCoeffs& fit, const ConicCoeffs& truth) {
  Metrics m;
  m.ok = true;
  m.ellipse = is_ellipse(fit);
  m.conic_err = compare_up_to_scale(fit, truth);
  const auto gt = to_geometry(truth);
  if (m.ellipse) {
    const auto g = to_geometry(fit);
    m.center_err = std::hypot(g.center.x - gt.center.x, g.center.y - gt.center.y);
    m.major_err = std::abs(g.major - gt.major) / gt.major;
    m.minor_err = std::abs(g.minor - gt.minor) / gt.minor;
  } else {
    // A hyperbola still has a center; a parabola has none.
    const auto ctr = conic_center(fit);
    m.center_err = ctr ? std::hypot(ctr->x - gt.center.x, ctr->y - gt.center.y) : kInf;
    m.major_err = m.minor_err = kInf;
  }
  return m;
}

double median(std::vector<double> v) {
  std::erase_if(v, [](double x) { return std::isnan(x); });
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

constexpr const char* kAlgos[] = {"ls_svd", "direct", "ransac"};

}  // namespace

int cmd_compare(const CompareOptions& opt, std::ostream& /*out*/, std::ostream& err) {
  return guarded(err, [&] {
    const SceneConfig cfg = load_config(opt.config);
    if (opt.trials < 1) throw CliError(kConfig, "--trials must be >= 1");
    RansacConfig rc;
    rc.threshold = opt.threshold.value_or(std::max(3.0 * cfg.sigma, 0.05));
    if (opt.confidence) rc.confidence = *opt.confidence;
    if (opt.max_iters) rc.max_iterations = *opt.max_iters;
    if (!(rc.threshold > 0.0)) throw CliError(kConfig, "--threshold must be > 0");

    std::error_code ec;
    std::filesystem::create_directories(opt.out_dir, ec);
    if (ec) throw CliError(kIo, opt.out_dir.string() + ": " + ec.message());

    std::string csv = "trial,seed";
    for (const char* a : kAlgos)
      for (const char* col : {"ok", "ellipse", "conic_err", "center_err", "major_err", "minor_err"})
        csv += std::string(",") + a + "_" + col;
    csv += '\n';

    std::vector<std::array<Metrics, 3>> rows;
    std::string svg;
    for (int t = 0; t < opt.trials; ++t) {
      // Per-trial seed: base seed plus trial index.
      const std::uint64_t seed = opt.seed + static_cast<std::uint64_t>(t);
      const Scenario sc = synthesize(cfg, seed);
      std::array<Metrics, 3> m;
      std::array<std::optional<ConicCoeffs>, 3> fits;
      auto attempt = [&](int k, auto&& fn) {
        try {
          fits[k] = normalize(fn());
          m[k] = measure(*fits[k], sc.truth);
        } catch (const Error& e) {
          log(LogLevel::Debug, "trial " + std::to_string(t) + ": " + kAlgos[k] + ": " + e.what());
        }
      };
      attempt(0, [&] { return fit_ls_svd(sc.points.points); });
      attempt(1, [&] { return fit_direct_ellipse(sc.points.points); });
      attempt(2, [&] {
        RansacConfig c = rc;
        c.seed = seed;
        return run_ransac(sc.points, cfg.intr, c).conic;
      });
      rows.push_back(m);

      csv += std::to_string(t) + "," + std::to_string(seed);
      for (const auto& x : m) {
        csv += std::string(",") + (x.ok ? "1" : "0") + "," + (x.ellipse ? "1" : "0");
        for (double v : {x.conic_err, x.center_err, x.major_err, x.minor_err}) csv += "," + format_number(v);
      }
      csv += '\n';

      if (t == 0) {
        std::vector<SvgCurve> curves;
        const char* labels[] = {"ls-svd", "direct", "three-point-ransac"};
        for (int k = 0; k < 3; ++k)
          if (fits[k]) curves.push_back({labels[k], to_image(*fits[k], cfg.intr)});
        svg = render_svg(image_points(sc.points, cfg.intr), to_image(sc.truth, cfg.intr), curves);
      }
    }

    // Summary: medians of the error columns; ok/ellipse hold the fraction of trials.
    csv += "median,";
    for (int k = 0; k < 3; ++k) {
      double ok = 0, el = 0;
      std::vector<double> cols[4];
      for (const auto& r : rows) {
        ok += r[k].ok;
        el += r[k].ellipse;
        cols[0].push_back(r[k].conic_err);
        cols[1].push_back(r[k].center_err);
        cols[2].push_back(r[k].major_err);
        cols[3].push_back(r[k].minor_err);
      }
      csv += "," + format_number(ok / rows.size()) + "," + format_number(el / rows.size());
      for (auto& c : cols) csv += "," + format_number(median(c));
    }
    csv += '\n';

    write_file(opt.out_dir / "compare.csv", csv);
    write_file(opt.out_dir / "scenario.svg", svg);
    log(LogLevel::Info, "compare: " + std::to_string(opt.trials) + " trials written to " + opt.out_dir.string());
    return int{kOk};
  });
}

// ---- command line --------------------------------------------------------------

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sphere-constrained ellipse fitting: synthesis, fitting and comparison"};
  app.require_subcommand(1);

  GenerateOptions gen;
  std::string gen_out;
  auto* g = app.add_subcommand("generate", "Synthesize labeled points from a scene config");
  g->add_option("--config", gen.config, "Scene config (JSON)")->required();
  g->add_option("--out", gen_out, "Points CSV; a sibling .truth.json is written too");

  FitOptions fit;
  std::string fit_out;
  double fe = 0.0, threshold = 0.0, confidence = 0.0;
  int max_iters = 0;
  std::size_t min_consensus = 0;
  auto* f = app.add_subcommand("fit", "Fit an ellipse to a points file");
  f->add_option("--points", fit.points, "Points CSV (image coordinates)")->required();
  f->add_option("--algo", fit.algorithm, "ls-svd | direct | three-point-ransac")
      ->required()
      ->check(CLI::IsMember({"ls-svd", "direct", "three-point-ransac"}));
  auto* fe_opt = f->add_option("--fe", fe, "Focal length in px");
  f->add_option("--px", fit.px, "Principal point x");
  f->add_option("--py", fit.py, "Principal point y");
  f->add_option("--l", fit.l, "Model parameter l (0 for pinhole)");
  auto* th_opt = f->add_option("--threshold", threshold, "Inlier threshold, px (Sampson)");
  auto* conf_opt = f->add_option("--confidence", confidence, "RANSAC confidence");
  auto* it_opt = f->add_option("--max-iters", max_iters, "RANSAC iteration cap");
  auto* mc_opt = f->add_option("--min-consensus", min_consensus, "Early-exit consensus size");
  f->add_option("--seed", fit.seed, "RNG seed");
  f->add_option("--out", fit_out, "Report JSON (stdout when omitted)");
  f->add_flag("--timestamps", fit.timestamps, "Append wall_time_ms to the report");

  CompareOptions cmp;
  double cmp_threshold = 0.0, cmp_conf = 0.0;
  int cmp_iters = 0;
  auto* c = app.add_subcommand("compare", "Run all algorithms over seeded trials");
  c->add_option("--config", cmp.config, "Scene config (JSON)")->required();
  c->add_option("--trials", cmp.trials, "Number of trials")->required();
  c->add_option("--seed", cmp.seed, "Base seed; trial i uses seed + i");
  c->add_option("--out-dir", cmp.out_dir, "Output directory")->required();
  auto* cth = c->add_option("--threshold", cmp_threshold, "RANSAC threshold (default max(3 sigma, 0.05))");
  auto* ccf = c->add_option("--confidence", cmp_conf, "RANSAC confidence");
  auto* cit = c->add_option("--max-iters", cmp_iters, "RANSAC iteration cap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfig;
  }

  if (g->parsed()) {
    if (!gen_out.empty()) gen.out = gen_out;
    return cmd_generate(gen, out, err);
  }
  if (f->parsed()) {
    if (*fe_opt) fit.fe = fe;
    if (*th_opt) fit.threshold = threshold;
    if (*conf_opt) fit.confidence = confidence;
    if (*it_opt) fit.max_iters = max_iters;
    if (*mc_opt) fit.min_consensus = min_consensus;
    if (!fit_out.empty()) fit.out = fit_out;
    return cmd_fit(fit, out, err);
  }
  if (*cth) cmp.threshold = cmp_threshold;
  if (*ccf) cmp.confidence = cmp_conf;
  if (*cit) cmp.max_iters = cmp_iters;
  return cmd_compare(cmp, out, err);
}

}  // namespace ellipse::cli
