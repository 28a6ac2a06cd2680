// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

namespace nint::cli {

namespace fs = std::filesystem;

namespace {

double parse_double(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::InvalidArgument, what + ": '" + s + "' is not a finite number");
  }
  return v;
}

std::pair<std::string, std::string> split_colon(const std::string& s) {
  const auto pos = s.find(':');
  if (pos == std::string::npos) return {s, ""};
  return {s.substr(0, pos), s.substr(pos + 1)};
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw Error(ErrorCode::IoFailure, "write error on '" + path.string() + "'");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create '" + dir.string() + "': " + ec.message());
}

struct Inputs {
  NormalMap normals;
  PixelMask mask;
  CameraModel camera;
};

/// Normals, mask (intersected with nonzero normals) and camera.
Inputs load_inputs(const std::string& normals_path, const std::string& mask_path,
                   const std::string& camera_path, std::ostream& err) {
  Inputs in;
  NormalMapFile nf = read_normal_map(normals_path);
  if (nf.renormalized > 0) {
    err << "warning: renormalized " << nf.renormalized << " normal(s) in '" << normals_path << "'\n";
  }
  in.normals = std::move(nf.normals);
  if (mask_path.empty()) {
    in.mask = std::move(nf.nonzero);
  } else {
    in.mask = read_mask(mask_path);
    require_same_shape(in.mask, in.normals, "mask vs normals");
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < in.mask.size(); ++i) {
      if (in.mask[i] && !nf.nonzero[i]) {
        in.mask[i] = 0;
        ++dropped;
      }
    }
    if (dropped > 0) err << "warning: masked out " << dropped << " pixel(s) with zero normals\n";
  }
  if (!camera_path.empty()) {
    LoadedCamera cam = read_camera(camera_path);
    for (const auto& w : cam.warnings) err << "warning: " << w << "\n";
    in.camera = std::move(cam.camera);
  }
  return in;
}

struct SolverFlags {
  int iters = 1200;
  bool no_alpha = false;
  std::string method = "ours";
  std::string connectivity = "4";
  std::string lambda = "const:0.5";
  std::string gamma = "full";
  double k = 2.0;
  double q = 50.0;
  double rho = 0.25;
  bool no_early_stop = false;

  void add_to(CLI::App& app) {
    app.add_option("--iters", iters, "Outer iterations")->capture_default_str();
    app.add_flag("--no-alpha", no_alpha, "Disable discontinuity (alpha) estimation");
    app.add_option("--method", method, "ours | bini")->capture_default_str();
    app.add_option("--connectivity", connectivity, "4 | diag4 | 8")->capture_default_str();
    app.add_option("--lambda-m", lambda, "const:L | ntau:K | nz:K | prod:K")->capture_default_str();
    app.add_option("--gamma-mode", gamma, "full | no_f | const_f:V | no_ndott")->capture_default_str();
    app.add_option("--k", k, "Bilateral sigmoid sharpness")->capture_default_str();
    app.add_option("--q", q, "Activation sharpness")->capture_default_str();
    app.add_option("--rho", rho, "Activation midpoint")->capture_default_str();
    app.add_flag("--no-early-stop", no_early_stop, "Always run all iterations");
  }

  SolverConfig config() const {
    SolverConfig c;
    c.max_outer_iters = iters;
    c.alpha_enabled = !no_alpha;
    if (method == "ours") {
      c.method = Method::Ours;
    } else if (method == "bini") {
      c.method = Method::BiNI;
    } else {
      throw Error(ErrorCode::InvalidArgument, "--method must be ours or bini, got '" + method + "'");
    }
    c.connectivity = parse_connectivity(connectivity);
    c.lambda = parse_lambda(lambda);
    c.gamma = parse_gamma(gamma);
    c.k = k;
    c.beta = {q, rho};
    if (no_early_stop) c.early_stop_rel_energy.reset();
    validate(c);
    return c;
  }
};

void write_pairs_csv(const fs::path& path, const IntegrationResult& r) {
  std::string s = "a_u,a_v,b_u,b_v,w,alpha,epsilon\n";
  for (std::size_t i = 0; i < r.graph.pairs.size(); ++i) {
    const DirectedPair& p = r.graph.pairs[i];
    const Pixel a = r.graph.pixel(p.a);
    const Pixel b = r.graph.pixel(p.b);
    s += std::to_string(a.u) + "," + std::to_string(a.v) + "," + std::to_string(b.u) + "," +
         std::to_string(b.v) + "," + fmt(r.weights[i]) + "," + fmt(r.alpha[i]) + "," +
         fmt(r.epsilon[i]) + "\n";
  }
  write_text(path, s);
}

std::string alpha_csv(const PairGraph& g, const std::vector<double>& alpha) {
  std::string s = "a_u,a_v,b_u,b_v,alpha\n";
  for (std::size_t i = 0; i < g.pairs.size(); ++i) {
    const Pixel a = g.pixel(g.pairs[i].a);
    const Pixel b = g.pixel(g.pairs[i].b);
    s += std::to_string(a.u) + "," + std::to_string(a.v) + "," + std::to_string(b.u) + "," +
         std::to_string(b.v) + "," + fmt(alpha[i]) + "\n";
  }
  return s;
}

nlohmann::ordered_json config_json(const SolverConfig& c) {
  nlohmann::ordered_json j;
  j["method"] = to_string(c.method);
  j["iterations"] = c.max_outer_iters;
  j["alpha_enabled"] = c.alpha_enabled;
  j["connectivity"] = to_string(c.connectivity);
  j["lambda_m"] = describe(c.lambda);
  j["gamma_mode"] = describe(c.gamma);
  j["k"] = c.k;
  j["q"] = c.beta.q;
  j["rho"] = c.beta.rho;
  j["early_stop"] = c.early_stop_rel_energy ? nlohmann::ordered_json(*c.early_stop_rel_energy)
                                            : nlohmann::ordered_json(nullptr);
  j["known_alpha"] = c.fixed_alpha.has_value();
  return j;
}

// ---------------------------------------------------------------------------

/// A subcommand: check() validates flag values (exit 2 on failure), exec()
/// does the work (exit 1 on failure).
struct Command {
  virtual ~Command() = default;
  virtual void check() {}
  virtual void exec(std::ostream& out, std::ostream& err) = 0;
};

void bind(CLI::App* app, Command* cmd, Command*& active) {
  app->callback([cmd, &active] { active = cmd; });
}

struct SynthCmd : Command {
  std::string scene, camera, size, out;
  std::pair<int, int> dims;

  void check() override { dims = parse_size(size); }

  void add(CLI::App& parent, Command*& active) {
    auto* app = parent.add_subcommand("synth", "Render an analytic ground-truth scene");
    app->add_option("--scene", scene, "Scene config file")->required();
    app->add_option("--camera", camera, "Camera config file")->required();
    app->add_option("--size", size, "Image size WxH")->required();
    app->add_option("--out", out, "Output directory")->required();
    bind(app, this, active);
  }

  void exec(std::ostream& out_s, std::ostream& err) override {
    const auto [w, h] = dims;
    const Scene sc = read_scene(scene);
    LoadedCamera cam = read_camera(camera);
    for (const auto& m : cam.warnings) err << "warning: " << m << "\n";
    const RayMap rays = build_ray_map(cam.camera, w, h);
    const Rendering r = render(sc, rays);
    if (count_valid(r.mask) == 0) throw Error(ErrorCode::EmptyMask, "scene is not visible");
    const fs::path dir(out);
    ensure_dir(dir);
    write_normal_map((dir / "normals.pfm").string(), r.normals, &r.mask);
    write_depth_map((dir / "depth_gt.pfm").string(), r.depth, &r.mask);
    write_mask((dir / "mask.pgm").string(), r.mask);
    if (std::holds_alternative<TabulatedRays>(cam.camera)) {
      write_vector_map((dir / "rays.pfm").string(), rays);
      write_text(dir / "camera.cfg", camera_to_config(cam.camera, "rays.pfm"));
    } else {
      write_text(dir / "camera.cfg", camera_to_config(cam.camera));
    }
    GraphOptions go;
    go.connectivity = Connectivity::Eight;
    const PairGraph g = build_graph(r.mask, r.normals, rays, go);
    write_text(dir / "alpha_gt.csv", alpha_csv(g, ground_truth_alpha(r.depth, g)));
    out_s << "wrote " << scene_name(sc) << " scene " << w << "x" << h << " ("
          << count_valid(r.mask) << " valid pixels) to " << dir.string() << "\n";
  }
};

struct IntegrateCmd : Command {
  std::string normals, mask, camera, out, alpha_gt;
  SolverFlags flags;
  SolverConfig cfg;

  void check() override {
    cfg = flags.config();
    if (!alpha_gt.empty() && cfg.method != Method::Ours) {
      throw Error(ErrorCode::InvalidArgument, "--alpha-gt requires --method ours");
    }
  }

  void add(CLI::App& parent, Command*& active) {
    auto* app = parent.add_subcommand("integrate", "Reconstruct depth from a normal map");
    app->add_option("--normals", normals, "3-channel PFM normal map")->required();
    app->add_option("--mask", mask, "PGM mask")->required();
    app->add_option("--camera", camera, "Camera config file")->required();
    app->add_option("--out", out, "Output directory")->required();
    flags.add_to(*app);
    app->add_option("--alpha-gt", alpha_gt,
                    "Directory with depth_gt.pfm; inject ground-truth alpha with beta = 1");
    bind(app, this, active);
  }

  void exec(std::ostream& out_s, std::ostream& err) override {
    Inputs in = load_inputs(normals, mask, camera, err);
    if (count_valid(in.mask) == 0) throw Error(ErrorCode::EmptyMask, "mask has no valid pixels");
    const RayMap rays = build_ray_map(in.camera, in.mask.width(), in.mask.height());
    PairGraph g = build_graph(in.mask, in.normals, rays, graph_options(cfg));
    if (!alpha_gt.empty()) {
      const DepthMap gt = read_depth_map((fs::path(alpha_gt) / "depth_gt.pfm").string());
      cfg.fixed_alpha = ground_truth_alpha(gt, g);
      cfg.beta_override = 1.0;
    }
    const IntegrationResult r = integrate(std::move(g), cfg);
    const fs::path dir(out);
    ensure_dir(dir);
    write_depth_map((dir / "depth.pfm").string(), r.depth, &r.mask);
    write_depth_map((dir / "epsilon_max.pfm").string(), r.epsilon_max, &r.mask);
    write_pairs_csv(dir / "pairs.csv", r);

    const Diagnostics& d = r.diagnostics;
    nlohmann::ordered_json j;
    j["config"] = config_json(cfg);
    j["iterations"] = d.iterations;
    j["early_stopped"] = d.early_stopped;
    j["final_energy"] = d.energy_trace.empty() ? 0.0 : d.energy_trace.back();
    j["dropped_pairs"] = d.dropped_pairs;
    j["pairs"] = r.graph.pairs.size();
    j["components"] = r.graph.component_count;
    j["gauge"] = "log depth has zero mean per connected component";
    long long cg_total = 0;
    for (int c : d.cg_iterations) cg_total += c;
    j["cg_iterations_total"] = cg_total;
    j["cg_stagnations"] = d.cg_stagnations;
    j["notes"] = d.notes;
    j["energy_trace"] = d.energy_trace;
    write_text(dir / "diagnostics.json", j.dump(2) + "\n");
    for (const auto& n : d.notes) err << "note: " << n << "\n";
    out_s << "integrated " << count_valid(r.mask) << " pixels in " << d.iterations
          << " iterations; wrote " << dir.string() << "\n";
  }
};

struct EvalCmd : Command {
  std::string est, gt, mask, align = "median", domain = "log", report;
  Alignment a;

  void check() override {
    if (align == "median") {
      a.mode = AlignMode::Median;
    } else if (align == "mean") {
      a.mode = AlignMode::Mean;
    } else {
      throw Error(ErrorCode::InvalidArgument, "--align must be median or mean");
    }
    if (domain == "log") {
      a.domain = AlignDomain::Log;
    } else if (domain == "linear") {
      a.domain = AlignDomain::Linear;
    } else {
      throw Error(ErrorCode::InvalidArgument, "--domain must be log or linear");
    }
  }

  void add(CLI::App& parent, Command*& active) {
    auto* app = parent.add_subcommand("eval", "Compare an estimated depth map with ground truth");
    app->add_option("--est", est, "Estimated depth PFM")->required();
    app->add_option("--gt", gt, "Ground-truth depth PFM")->required();
    app->add_option("--mask", mask, "PGM mask")->required();
    app->add_option("--align", align, "median | mean")->capture_default_str();
    app->add_option("--domain", domain, "log | linear")->capture_default_str();
    app->add_option("--report", report, "Report path (.csv, or .json)")->required();
    bind(app, this, active);
  }

  void exec(std::ostream& out_s, std::ostream&) override {
    const DepthMap e = read_depth_map(est);
    const DepthMap g = read_depth_map(gt);
    const PixelMask m = read_mask(mask);
    const MetricsReport r = evaluate(e, g, m, a);
    write_report(report, r);
    out_s << report_to_csv(r);
  }
};

struct ResidualsCmd : Command {
  std::string normals, depth_gt, camera, mask, method = "ours", variant = "abs", report,
      connectivity = "4";
  Method m = Method::Ours;
  ResidualVariant v = ResidualVariant::Abs;
  GraphOptions go;

  void check() override {
    if (method == "ours") {
      m = Method::Ours;
    } else if (method == "bini") {
      m = Method::BiNI;
    } else {
      throw Error(ErrorCode::InvalidArgument, "--method must be ours or bini");
    }
    v = parse_variant(variant);
    go.connectivity = parse_connectivity(connectivity);
  }

  void add(CLI::App& parent, Command*& active) {
    auto* app = parent.add_subcommand(
        "residuals", "Formulation residuals at ground-truth depth (alpha = 0)");
    app->add_option("--normals", normals, "3-channel PFM normal map")->required();
    app->add_option("--depth-gt", depth_gt, "Ground-truth depth PFM")->required();
    app->add_option("--camera", camera, "Camera config file")->required();
    app->add_option("--mask", mask, "PGM mask (default: nonzero normals with depth > 0)");
    app->add_option("--method", method, "ours | bini")->capture_default_str();
    app->add_option("--variant", variant, "abs | rel-log | rel-depth")->capture_default_str();
    app->add_option("--connectivity", connectivity, "4 | diag4 | 8")->capture_default_str();
    app->add_option("--report", report, "Report path (.csv, or .json)")->required();
    bind(app, this, active);
  }

  void exec(std::ostream& out_s, std::ostream& err) override {
    Inputs in = load_inputs(normals, mask, camera, err);
    const DepthMap gt = read_depth_map(depth_gt);
    require_same_shape(gt, in.mask, "depth vs normals");
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (!(gt[i] > 0.0)) in.mask[i] = 0;
    }
    const RayMap rays = build_ray_map(in.camera, gt.width(), gt.height());
    const ResidualStats s = formulation_residuals(gt, build_graph(in.mask, in.normals, rays, go), m, v);
    MetricsReport r;
    r.alignment = "none";
    r.pixel_count = count_valid(in.mask);
    r.residuals.emplace_back(std::string(to_string(m)) + "_" + to_string(v), s);
    write_report(report, r);
    std::string csv = report_to_csv(r);
    // Only the residual rows are meaningful here.
    std::istringstream lines(csv);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.rfind("made", 0) == 0 || line.rfind("re_", 0) == 0 || line.rfind("era_", 0) == 0) continue;
      out_s << line << "\n";
    }
    if (s.excluded > 0) err << "note: " << s.excluded << " pair(s) excluded (log depth near 0)\n";
  }
};

struct NoiseCmd : Command {
  std::string normals, mode, out, camera, mask;
  std::uint64_t seed = 0;
  bool filter = false;
  double threshold = 0.75;
  int window = 3;
  NoiseSpec spec;

  void check() override {
    spec = parse_noise(mode, seed);
    if (filter && camera.empty()) throw Error(ErrorCode::InvalidArgument, "--filter needs --camera");
    if (window < 3 || window % 2 == 0) {
      throw Error(ErrorCode::InvalidArgument, "--window must be odd and >= 3");
    }
    if (!(threshold > 0.0)) throw Error(ErrorCode::InvalidArgument, "--threshold must be > 0");
  }

  void add(CLI::App& parent, Command*& active) {
    auto* app = parent.add_subcommand("noise", "Corrupt (and optionally filter) a normal map");
    app->add_option("--normals", normals, "3-channel PFM normal map")->required();
    app->add_option("--mode", mode, "outliers:F | rot:SIGMA_DEG")->required();
    app->add_option("--seed", seed, "Random seed")->capture_default_str();
    app->add_flag("--filter", filter, "Apply the n.tau mitigation filter after corruption");
    app->add_option("--camera", camera, "Camera config file (required with --filter)");
    app->add_option("--mask", mask, "PGM mask (default: nonzero normals)");
    app->add_option("--threshold", threshold, "Filter relative deviation threshold")->capture_default_str();
    app->add_option("--window", window, "Filter window size (odd)")->capture_default_str();
    app->add_option("--out", out, "Output PFM")->required();
    bind(app, this, active);
  }

  void exec(std::ostream& out_s, std::ostream& err) override {
    Inputs in = load_inputs(normals, mask, camera, err);
    NormalMap n = corrupt(in.normals, in.mask, spec);
    if (filter) {
      const RayMap rays = build_ray_map(in.camera, n.width(), n.height());
      FilterResult f = mitigation_filter(n, rays, in.mask, threshold, window);
      n = std::move(f.normals);
      out_s << "filter flagged " << f.flagged << " pixel(s), " << f.unresolved << " unresolved\n";
    }
    write_normal_map(out, n, &in.mask);
    out_s << "wrote " << out << "\n";
  }
};

struct AblateCmd : Command {
  std::string suite, base, report;
  int iters = 1200;
  std::vector<SolverConfig> configs;

  void check() override {
    if (iters < 1) throw Error(ErrorCode::InvalidArgument, "--iters must be >= 1");
    configs = grid();
  }

  void add(CLI::App& parent, Command*& active) {
    auto* app = parent.add_subcommand("ablate", "Run a hyperparameter sweep on a synth directory");
    app->add_option("--suite", suite, "gamma | lambda | beta | connectivity")->required();
    app->add_option("--base", base,
                    "Directory with normals.pfm, mask.pgm, depth_gt.pfm and camera.cfg")
        ->required();
    app->add_option("--report", report, "Output CSV")->required();
    app->add_option("--iters", iters, "Outer iterations per grid point")->capture_default_str();
    bind(app, this, active);
  }

  std::vector<SolverConfig> grid() const {
    std::vector<SolverConfig> g;
    SolverConfig base_cfg;
    base_cfg.max_outer_iters = iters;
    if (suite == "gamma") {
      for (const char* m : {"full", "no_f", "const_f:1000", "const_f:2000", "const_f:3000", "no_ndott"}) {
        SolverConfig c = base_cfg;
        c.gamma = parse_gamma(m);
        g.push_back(c);
      }
    } else if (suite == "lambda") {
      g.push_back(base_cfg);
      for (const char* kind : {"ntau", "nz", "prod"}) {
        for (const char* k : {"1", "10", "100"}) {
          SolverConfig c = base_cfg;
          c.lambda = parse_lambda(std::string(kind) + ":" + k);
          g.push_back(c);
        }
      }
    } else if (suite == "beta") {
      for (double q : {10.0, 50.0, 100.0}) {
        for (double rho : {0.1, 0.25, 0.4}) {
          SolverConfig c = base_cfg;
          c.beta = {q, rho};
          g.push_back(c);
        }
      }
    } else if (suite == "connectivity") {
      for (Connectivity cn : {Connectivity::Four, Connectivity::DiagonalFour, Connectivity::Eight}) {
        SolverConfig c = base_cfg;
        c.connectivity = cn;
        g.push_back(c);
      }
    } else {
      throw Error(ErrorCode::InvalidArgument,
                  "--suite must be gamma, lambda, beta or connectivity, got '" + suite + "'");
    }
    return g;
  }

  void exec(std::ostream& out_s, std::ostream& err) override {
    const fs::path dir(base);
    Inputs in = load_inputs((dir / "normals.pfm").string(), (dir / "mask.pgm").string(),
                            (dir / "camera.cfg").string(), err);
    const DepthMap gt = read_depth_map((dir / "depth_gt.pfm").string());
    const RayMap rays = build_ray_map(in.camera, in.mask.width(), in.mask.height());
    std::string csv =
        "suite,method,connectivity,lambda_m,gamma_mode,k,q,rho,iters,made,re_percent,era_percent,"
        "nonpositive_log_events,status\n";
    for (const SolverConfig& c : configs) {
      std::string row = suite + "," + to_string(c.method) + "," + to_string(c.connectivity) + "," +
                        describe(c.lambda) + "," + describe(c.gamma) + "," + fmt(c.k) + "," +
                        fmt(c.beta.q) + "," + fmt(c.beta.rho) + "," + std::to_string(c.max_outer_iters) + ",";
      try {
        const IntegrationResult r =
            integrate(build_graph(in.mask, in.normals, rays, graph_options(c)), c);
        const MetricsReport m = evaluate(r.depth, gt, in.mask);
        row += fmt(m.made) + "," + fmt(m.re_percent) + "," + fmt(m.era_percent) + ",0,ok\n";
      } catch (const Error& e) {
        const bool nonpos = e.code() == ErrorCode::NonPositiveLogArgument;
        row += ",,," + std::string(nonpos ? "1" : "0") + "," + to_string(e.code()) + "\n";
        err << "grid point failed: " << e.what() << "\n";
      }
      csv += row;
      out_s << row;
    }
    write_text(report, csv);
  }
};

}  // namespace

LambdaMode parse_lambda(const std::string& s) {
  const auto [kind, value] = split_colon(s);
  if (value.empty()) throw Error(ErrorCode::InvalidArgument, "--lambda-m needs KIND:VALUE, got '" + s + "'");
  const double v = parse_double(value, "--lambda-m");
  LambdaMode m;
  if (kind == "const") {
    m = lambda_mode::Constant{v};
  } else if (kind == "ntau") {
    m = lambda_mode::SigmoidNTau{v};
  } else if (kind == "nz") {
    m = lambda_mode::SigmoidNz{v};
  } else if (kind == "prod") {
    m = lambda_mode::SigmoidProduct{v};
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown --lambda-m kind '" + kind + "'");
  }
  validate(m);
  return m;
}

GammaMode parse_gamma(const std::string& s) {
  const auto [kind, value] = split_colon(s);
  if (kind == "full" && value.empty()) return gamma_mode::Full{};
  if (kind == "no_f" && value.empty()) return gamma_mode::NoF{};
  if (kind == "no_ndott" && value.empty()) return gamma_mode::NoNdotT{};
  if (kind == "const_f" && !value.empty()) {
    const double v = parse_double(value, "--gamma-mode");
    if (!(v > 0.0)) throw Error(ErrorCode::InvalidArgument, "const_f value must be > 0");
    return gamma_mode::ConstF{v};
  }
  throw Error(ErrorCode::InvalidArgument, "unknown --gamma-mode '" + s + "'");
}

Connectivity parse_connectivity(const std::string& s) {
  if (s == "4") return Connectivity::Four;
  if (s == "diag4") return Connectivity::DiagonalFour;
  if (s == "8") return Connectivity::Eight;
  throw Error(ErrorCode::InvalidArgument, "--connectivity must be 4, diag4 or 8, got '" + s + "'");
}

std::pair<int, int> parse_size(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--size must be WxH");
  const std::string ws = s.substr(0, x), hs = s.substr(x + 1);
  const auto parse_dim = [&](const std::string& t) {
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size() || v <= 0 || v > (1 << 16)) {
      throw Error(ErrorCode::InvalidArgument, "--size must be WxH with positive integers, got '" + s + "'");
    }
    return static_cast<int>(v);
  };
  return {parse_dim(ws), parse_dim(hs)};
}

NoiseSpec parse_noise(const std::string& s, std::uint64_t seed) {
  const auto [kind, value] = split_colon(s);
  if (value.empty()) throw Error(ErrorCode::InvalidArgument, "--mode needs KIND:VALUE, got '" + s + "'");
  const double v = parse_double(value, "--mode");
  NoiseSpec spec;
  spec.seed = seed;
  if (kind == "outliers") {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::InvalidArgument, "outlier fraction must lie in [0, 1]");
    spec.mode = noise_mode::Outliers{v};
  } else if (kind == "rot") {
    if (!(v >= 0.0)) throw Error(ErrorCode::InvalidArgument, "rotation sigma must be >= 0");
    spec.mode = noise_mode::Rotational{v};
  } else {
    throw Error(ErrorCode::InvalidArgument, "--mode must be outliers:F or rot:S, got '" + s + "'");
  }
  return spec;
}

ResidualVariant parse_variant(const std::string& s) {
  if (s == "abs") return ResidualVariant::Abs;
  if (s == "rel-log") return ResidualVariant::RelLog;
  if (s == "rel-depth") return ResidualVariant::RelDepth;
  throw Error(ErrorCode::InvalidArgument, "--variant must be abs, rel-log or rel-depth, got '" + s + "'");
}

std::string describe(const LambdaMode& m) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, lambda_mode::Constant>) return "const:" + fmt(v.lambda);
        if constexpr (std::is_same_v<T, lambda_mode::SigmoidNTau>) return "ntau:" + fmt(v.k);
        if constexpr (std::is_same_v<T, lambda_mode::SigmoidNz>) return "nz:" + fmt(v.k);
        if constexpr (std::is_same_v<T, lambda_mode::SigmoidProduct>) return "prod:" + fmt(v.k);
      },
      m);
}

std::string describe(const GammaMode& m) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, gamma_mode::Full>) return "full";
        if constexpr (std::is_same_v<T, gamma_mode::NoF>) return "no_f";
        if constexpr (std::is_same_v<T, gamma_mode::ConstF>) return "const_f:" + fmt(v.value);
        if constexpr (std::is_same_v<T, gamma_mode::NoNdotT>) return "no_ndott";
      },
      m);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Normal integration with explicit depth discontinuities", "nint"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  Command* active = nullptr;
  SynthCmd synth;
  IntegrateCmd integ;
  EvalCmd eval;
  ResidualsCmd resid;
  NoiseCmd noise;
  AblateCmd ablate;
  synth.add(app, active);
  integ.add(app, active);
  eval.add(app, active);
  resid.add(app, active);
  noise.add(app, active);
  ablate.add(app, active);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return 2;
  }
  if (active == nullptr) return 2;
  try {
    active->check();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 2;
  }
  try {
    active->exec(out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("nint");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace nint::cli
