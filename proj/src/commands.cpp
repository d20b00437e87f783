#include "icfringe/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "icfringe/error.hpp"
#include "icfringe/parallel.hpp"
#include "icfringe/selftest.hpp"
#include "icfringe/stackio.hpp"

namespace icfringe {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

bool sets_setup(const RunConfig& cfg) {
  for (const char* key : {"lambda_p", "lambda_s", "lambda_i", "d", "f_c", "w_p", "L"}) {
    if (cfg.has_key(key)) return true;
  }
  return false;
}

FrameStack simulate(const RunConfig& cfg, const NoiseModel& noise, int threads) {
  return synthesize_stack(cfg.correlation_model(), cfg.envelope, cfg.setup, cfg.geometry, noise,
                          uniform_phases(cfg.n_phases), threads);
}

bool is_noiseless(const NoiseModel& noise) { return !noise.shot_noise && noise.read_noise_sigma == 0.0; }

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? kNaN : s / static_cast<double>(v.size());
}

// Sample standard deviation; zero for a single value.
double spread_of(const std::vector<double>& v) {
  if (v.size() < 2) return v.empty() ? kNaN : 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : "nan"; }

}  // namespace

RunConfig resolve_config(const CommandOptions& options) {
  RunConfig cfg = options.config_path ? load_config(*options.config_path) : parse_config("");
  if (options.seed) cfg.noise.rng_seed = *options.seed;
  if (options.model) cfg.model = *options.model;
  cfg.analysis.threads = resolve_threads(options.threads);
  return cfg;
}

std::filesystem::path cmd_simulate(const CommandOptions& options, std::ostream& log) {
  const RunConfig cfg = resolve_config(options);
  log << describe(cfg);
  const FrameStack stack = simulate(cfg, cfg.noise, cfg.analysis.threads);
  ensure_dir(options.out_dir);
  const auto path = options.out_dir / "stack.icfs";
  const std::uint64_t bytes = write_stack(stack, path);
  log << "wrote " << path.string() << " (" << bytes << " bytes) and " << sidecar_path(path).string() << '\n';
  return path;
}

Analysis cmd_analyze(const std::filesystem::path& stack_path, const CommandOptions& options, std::ostream& log) {
  const RunConfig cfg = resolve_config(options);
  const FrameStack stack = read_stack(stack_path);
  AnalysisConfig analysis = cfg.analysis;
  if (!sets_setup(cfg) && stack.metadata.setup) analysis.setup = *stack.metadata.setup;

  const Analysis result = analyze_stack(stack, analysis);
  ensure_dir(options.out_dir);
  const auto write = [&](const char* name, const auto& fn) {
    const auto path = options.out_dir / name;
    std::ofstream out = open_output(path);
    fn(out);
    finish(out, path);
  };
  write("visibility_map.csv", [&](std::ostream& o) { write_visibility_map_csv(result.vmap, o); });
  write("radial_profile.csv", [&](std::ostream& o) { write_profile_csv(result.profile, o); });
  write("estimate.csv", [&](std::ostream& o) { write_estimate_csv(result.estimate, o); });
  const std::string report = estimate_report(result.estimate);
  write("report.txt", [&](std::ostream& o) { o << report; });
  log << report;
  return result;
}

std::vector<SweepRow> run_sweep(const RunConfig& config) {
  const auto axis = [](const std::vector<double>& v, double fallback) {
    return v.empty() ? std::vector<double>{fallback} : v;
  };
  const auto wps = axis(config.sweep.w_p, config.setup.w_p);
  const auto ds = axis(config.sweep.d, config.setup.d);
  const auto scales = axis(config.sweep.photon_scale, config.noise.photon_scale);
  const int seeds = is_noiseless(config.noise) ? 1 : std::max(1, config.sweep.seeds);

  struct Point {
    RunConfig cfg;
  };
  std::vector<Point> points;
  for (double wp : wps) {
    for (double d : ds) {
      for (double scale : scales) {
        Point p{config};
        p.cfg.setup.w_p = wp;
        p.cfg.setup.d = d;
        p.cfg.analysis.setup = p.cfg.setup;
        p.cfg.noise.photon_scale = scale;
        points.push_back(std::move(p));
      }
    }
  }

  struct Outcome {
    std::optional<CorrelationEstimate> estimate;
    std::string status;
  };
  const std::size_t n_tasks = points.size() * static_cast<std::size_t>(seeds);
  std::vector<Outcome> outcomes(n_tasks);
  const int threads = config.analysis.threads;
  const int inner = n_tasks >= static_cast<std::size_t>(threads) ? 1 : threads;

  parallel_for(n_tasks, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const RunConfig& cfg = points[t / seeds].cfg;
      NoiseModel noise = cfg.noise;
      noise.rng_seed += t % seeds;
      AnalysisConfig analysis = cfg.analysis;
      analysis.threads = inner;
      try {
        cfg.setup.validate(cfg.energy_tolerance);
        noise.validate();
        outcomes[t].estimate = estimate_from_stack(simulate(cfg, noise, inner), analysis);
        outcomes[t].status = "ok";
      } catch (const Error& e) {
        outcomes[t].status = std::string(to_string(e.code()));
      }
    }
  });

  std::vector<SweepRow> rows;
  rows.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const RunConfig& cfg = points[i].cfg;
    SweepRow row;
    row.w_p = cfg.setup.w_p;
    row.d = cfg.setup.d;
    row.photon_scale = cfg.noise.photon_scale;
    row.n_seeds = seeds;
    row.sigma_c_true = correlation_width(cfg.correlation_model());
    row.inverse_wp2 = 1.0 / (row.w_p * row.w_p);
    row.regime_parameter = regime_parameter(row.sigma_c_true, cfg.setup);
    row.regime_valid = row.regime_parameter < cfg.analysis.inversion.regime_bound;
    try {
      row.fwhm_true = fwhm_from_sigma(row.sigma_c_true, cfg.setup, cfg.analysis.inversion.regime_bound);
    } catch (const Error&) {
      row.fwhm_true = kNaN;
    }
    std::vector<double> fwhm;
    std::vector<double> sigma;
    std::vector<double> variance;
    row.status = "ok";
    for (int s = 0; s < seeds; ++s) {
      const Outcome& o = outcomes[i * seeds + s];
      if (o.estimate) {
        fwhm.push_back(o.estimate->fwhm_camera);
        sigma.push_back(o.estimate->sigma_c);
        variance.push_back(o.estimate->variance);
      } else if (row.status == "ok") {
        row.status = o.status;
      }
    }
    row.n_ok = static_cast<int>(variance.size());
    row.fwhm = mean_of(fwhm);
    row.fwhm_std = spread_of(fwhm);
    row.sigma_c = mean_of(sigma);
    row.variance = mean_of(variance);
    row.variance_std = spread_of(variance);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string sweep_csv_header() {
  return "w_p,d,photon_scale,n_seeds,n_ok,sigma_c_true,fwhm_true_m,fwhm_m,fwhm_std_m,sigma_c,variance,"
         "variance_std,inverse_wp2,regime_parameter,regime_valid,status";
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << sweep_csv_header() << '\n';
  for (const SweepRow& r : rows) {
    out << csv_number(r.w_p) << ',' << csv_number(r.d) << ',' << csv_number(r.photon_scale) << ',' << r.n_seeds
        << ',' << r.n_ok << ',' << csv_number(r.sigma_c_true) << ',' << csv_number(r.fwhm_true) << ','
        << csv_number(r.fwhm) << ',' << csv_number(r.fwhm_std) << ',' << csv_number(r.sigma_c) << ','
        << csv_number(r.variance) << ',' << csv_number(r.variance_std) << ',' << csv_number(r.inverse_wp2) << ','
        << csv_number(r.regime_parameter) << ',' << (r.regime_valid ? 1 : 0) << ',' << r.status << '\n';
  }
}

std::filesystem::path cmd_sweep(const CommandOptions& options, std::ostream& log) {
  const RunConfig cfg = resolve_config(options);
  const auto rows = run_sweep(cfg);
  ensure_dir(options.out_dir);
  const auto path = options.out_dir / "sweep.csv";
  std::ofstream out = open_output(path);
  write_sweep_csv(rows, out);
  finish(out, path);
  for (const SweepRow& r : rows) {
    log << "w_p=" << r.w_p << " d=" << r.d << " photon_scale=" << r.photon_scale << "  variance=" << r.variance
        << "  1/w_p^2=" << r.inverse_wp2 << "  " << r.status << '\n';
  }
  log << "wrote " << path.string() << '\n';
  return path;
}

void write_profile_svg(const std::vector<std::filesystem::path>& profiles, const std::filesystem::path& out_path) {
  std::vector<std::pair<std::string, RadialProfile>> curves;
  double r_max = 0.0;
  for (const auto& p : profiles) {
    std::ifstream in(p);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + p.string());
    RadialProfile prof = read_profile_csv(in);
    if (!prof.radii.empty()) r_max = std::max(r_max, prof.radii.back());
    curves.emplace_back(p.string(), std::move(prof));
  }
  if (r_max <= 0.0) r_max = 1.0;

  constexpr double W = 640;
  constexpr double H = 400;
  constexpr double M = 50;
  const auto sx = [&](double r) { return M + (W - 2 * M) * r / r_max; };
  const auto sy = [&](double v) { return H - M - (H - 2 * M) * std::clamp(v, 0.0, 1.0); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<path d=\"M" << M << ' ' << M << " V" << H - M << " H" << W - M << "\" stroke=\"black\" fill=\"none\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">radius (mm), max "
      << r_max * 1e3 << "</text>\n";
  svg << "<text x=\"14\" y=\"" << H / 2 << "\" transform=\"rotate(-90 14 " << H / 2
      << ")\" text-anchor=\"middle\">visibility</text>\n";
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const auto& prof = curves[c].second;
    svg << "<polyline fill=\"none\" stroke=\"" << colors[c % 6] << "\" points=\"";
    for (std::size_t k = 0; k < prof.radii.size(); ++k) {
      if (prof.sample_counts[k] > 0 && std::isfinite(prof.visibility[k])) {
        svg << sx(prof.radii[k]) << ',' << sy(prof.visibility[k]) << ' ';
      }
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << W - M - 4 << "\" y=\"" << M + 16 * (c + 1) << "\" text-anchor=\"end\" fill=\""
        << colors[c % 6] << "\">" << curves[c].first << "</text>\n";
  }
  svg << "</svg>\n";

  std::ofstream out = open_output(out_path);
  out << svg.str();
  finish(out, out_path);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Induced-coherence fringe simulation and correlation-width estimation"};
  app.require_subcommand(1);
  app.fallthrough();

  CommandOptions opts;
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int threads = 0;
  std::string model;
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--out-dir", out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "noise seed (overrides the config)");
  auto* threads_opt =
      app.add_option("--threads", threads, "worker threads (default ICFRINGE_THREADS, then 1)")->check(CLI::PositiveNumber);
  auto* model_opt =
      app.add_option("--model", model, "correlation model")->check(CLI::IsMember({"gaussian", "spdc"}));

  auto* simulate_cmd = app.add_subcommand("simulate", "render a phase-stepped frame stack");
  auto* analyze_cmd = app.add_subcommand("analyze", "estimate the correlation width from a stack");
  std::string stack_path;
  analyze_cmd->add_option("stack", stack_path, "stack file")->required();
  auto* sweep_cmd = app.add_subcommand("sweep", "simulate and analyze over a parameter grid");
  auto* selftest_cmd = app.add_subcommand("selftest", "run the built-in consistency checks");
  auto* plot_cmd = app.add_subcommand("plot", "draw radial-profile CSVs as SVG");
  std::vector<std::string> plot_inputs;
  std::string plot_output = "profiles.svg";
  plot_cmd->add_option("profiles", plot_inputs, "radial_profile.csv files")->required();
  plot_cmd->add_option("-o,--output", plot_output, "SVG file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  if (!config_path.empty()) opts.config_path = config_path;
  opts.out_dir = out_dir;
  if (*seed_opt) opts.seed = seed;
  if (*threads_opt) opts.threads = threads;
  if (*model_opt) opts.model = parse_model_kind(model);

  try {
    if (*simulate_cmd) {
      cmd_simulate(opts, out);
    } else if (*analyze_cmd) {
      cmd_analyze(stack_path, opts, out);
    } else if (*sweep_cmd) {
      cmd_sweep(opts, out);
    } else if (*selftest_cmd) {
      const SelfTestReport report = run_selftest({}, resolve_threads(opts.threads));
      out << format_report(report);
      return report.passed() ? 0 : 2;
    } else if (*plot_cmd) {
      std::vector<std::filesystem::path> inputs(plot_inputs.begin(), plot_inputs.end());
      write_profile_svg(inputs, opts.out_dir / plot_output);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_status(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace icfringe
