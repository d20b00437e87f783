#include "icfringe/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "icfringe/error.hpp"
#include "icfringe/estimate.hpp"
#include "icfringe/model.hpp"
#include "icfringe/pipeline.hpp"
#include "icfringe/stackio.hpp"
#include "icfringe/synth.hpp"

namespace icfringe {

namespace {

template <typename F>
SelfTestCheck guarded(std::string name, F&& body) {
  SelfTestCheck check{std::move(name), false, {}};
  try {
    body(check);
  } catch (const std::exception& e) {
    check.passed = false;
    check.detail = std::string("exception: ") + e.what();
  }
  return check;
}

void quadrature_oracle(SelfTestCheck& check, const SelfTestOptions& options) {
  const OpticalSetup setup;
  OpticalSetup reference = setup;
  reference.d *= 1.0 + options.closed_form_perturbation;
  double worst = 0.0;
  for (double sigma : {2000.0, 5000.0, 8000.0, 11000.0, 13000.0}) {
    for (double rho : {0.0, 0.5e-3, 1.0e-3, 1.5e-3, 2.0e-3}) {
      const TransverseWaveVector q_s{rho / setup.camera_scale(), 0.0};
      const double v = fringe_terms_2d(GaussianCorrelationModel{sigma}, setup, q_s).visibility();
      worst = std::max(worst, std::abs(v - visibility_closed_form(sigma, reference, rho)));
    }
  }
  check.passed = worst <= 1e-6;
  std::ostringstream os;
  os << "25 points, max |quadrature - closed form| = " << worst;
  check.detail = os.str();
}

void inversion_round_trip(SelfTestCheck& check) {
  const OpticalSetup setup;
  double worst = 0.0;
  for (double sigma : {500.0, 2000.0, 5000.0, 6250.0, 8000.0, 12000.0}) {
    const double fwhm = fwhm_from_sigma(sigma, setup);
    worst = std::max(worst, std::abs(sigma_from_fwhm(fwhm, setup).sigma_c - sigma) / sigma);
  }
  check.passed = worst <= 1e-6;
  std::ostringstream os;
  os << "max relative sigma_c error " << worst;
  check.detail = os.str();
}

void pipeline_exactness(SelfTestCheck& check, int threads) {
  OpticalSetup setup;
  setup.w_p = 125e-6;
  const double sigma = 1.0 / setup.w_p;
  const CameraGeometry geometry = CameraGeometry::centered(64, 64, 48e-6);
  const FrameStack stack = synthesize_stack(GaussianCorrelationModel{sigma}, SignalEnvelope{}, setup, geometry,
                                            NoiseModel::noiseless(), uniform_phases(25), threads);
  const VisibilityMap vmap = fit_visibility(stack, MaskOptions{}, threads);
  double worst = 0.0;
  for (int y = 0; y < geometry.height; ++y) {
    for (int x = 0; x < geometry.width; ++x) {
      const double rho = std::hypot(x - geometry.center.x, y - geometry.center.y) * geometry.pixel_pitch;
      worst = std::max(worst, std::abs(vmap.fitted_visibility(x, y) - visibility_closed_form(sigma, setup, rho)));
    }
  }
  check.passed = worst <= 1e-6;
  std::ostringstream os;
  os << "64x64 noiseless stack, max per-pixel visibility error " << worst;
  check.detail = os.str();
}

void format_round_trip(SelfTestCheck& check) {
  const CameraGeometry geometry = CameraGeometry::centered(24, 20, 16e-6);
  NoiseModel noise;
  noise.rng_seed = 7;
  noise.read_noise_sigma = 2.0;
  const FrameStack stack = synthesize_stack(GaussianCorrelationModel{8000.0}, SignalEnvelope{}, OpticalSetup{},
                                            geometry, noise, uniform_phases(7));
  std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
  const std::uint64_t bytes = write_stack_binary(stack, buf);
  FrameStack back = read_stack_binary(buf);
  apply_metadata(back, format_metadata(stack));
  check.passed = bytes == stack_file_size(24, 20, 7) && back == stack;
  check.detail = std::to_string(bytes) + " bytes, " + (back == stack ? "identical" : "differs") + " after read";
}

}  // namespace

bool SelfTestReport::passed() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

SelfTestReport run_selftest(const SelfTestOptions& options, int threads) {
  const auto start = std::chrono::steady_clock::now();
  SelfTestReport report;
  report.checks.push_back(guarded("quadrature vs closed form", [&](auto& c) { quadrature_oracle(c, options); }));
  report.checks.push_back(guarded("inversion round trip", [&](auto& c) { inversion_round_trip(c); }));
  report.checks.push_back(guarded("pipeline exactness", [&](auto& c) { pipeline_exactness(c, threads); }));
  report.checks.push_back(guarded("stack format round trip", [&](auto& c) { format_round_trip(c); }));
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string format_report(const SelfTestReport& report) {
  std::ostringstream os;
  for (const auto& c : report.checks) os << (c.passed ? "PASS  " : "FAIL  ") << c.name << ": " << c.detail << '\n';
  os << (report.passed() ? "selftest passed" : "selftest FAILED") << " in " << report.seconds << " s\n";
  return os.str();
}

}  // namespace icfringe
