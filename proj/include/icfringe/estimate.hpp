#pragma once

#include <optional>

#include "icfringe/model.hpp"
#include "icfringe/pipeline.hpp"

namespace icfringe {

struct InversionOptions {
  /// Largest admissible 2 alpha sigma_c^2; FWHM(sigma_c) is monotone well below 1.
  double regime_bound = 0.5;
  double sigma_min = 100.0;
  /// Upper end of the bisection bracket; the regime-bound sigma when absent.
  std::optional<double> sigma_max;
  double relative_tolerance = 1e-6;
};

struct EstimateDiagnostics {
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  int iterations = 0;
  /// |fwhm_from_sigma(sigma_c) - fwhm| / fwhm.
  double roundtrip_error = 0.0;
  /// Filled by estimate_from_stack.
  std::optional<double> peak_visibility;
  std::optional<PixelCoord> center;
  bool center_degenerate = false;
  std::optional<double> center_score;
  /// Secondary estimator: closed-form profile fitted to the whole radial profile.
  std::optional<double> profile_fit_sigma_c;
  std::optional<double> profile_fit_rms;
};

struct CorrelationEstimate {
  double sigma_c = 0.0;
  /// sigma_c^2, the conditional transverse-momentum variance.
  double variance = 0.0;
  double fwhm_camera = 0.0;
  /// FWHM expressed in signal wave-vector units.
  double fwhm_q = 0.0;
  /// 2 alpha sigma_c^2.
  double regime_parameter = 0.0;
  bool valid = false;
  /// 1 / w_p^2 when the pump waist of the data is known.
  std::optional<double> theoretical_variance;
  EstimateDiagnostics diagnostics;
};

/// 2 alpha sigma_c^2 with alpha = lambda_i d / (4 pi).
double regime_parameter(double sigma_c, const OpticalSetup& setup);

/// Largest sigma_c inside the regime: sqrt(regime_bound / (2 alpha)).
double regime_sigma(const OpticalSetup& setup, double regime_bound = 0.5);

/// Camera-plane FWHM of the Gaussian-model visibility peak.
/// Throws NoDecay for d = 0 and RegimeViolation when 2 alpha sigma_c^2 >= regime_bound.
double fwhm_from_sigma(double sigma_c, const OpticalSetup& setup, double regime_bound = 0.5);

/// Bisection of fwhm_from_sigma for the sigma_c reproducing `fwhm`.
/// Throws InvalidArgument (fwhm <= 0), NoDecay, BracketFailure (fwhm wider than
/// the bracket allows) or RegimeViolation (the bracket reaches the regime bound,
/// or fwhm is narrower than any in-regime sigma_c produces).
CorrelationEstimate sigma_from_fwhm(double fwhm, const OpticalSetup& setup, const InversionOptions& options = {});

struct ProfileFit {
  double sigma_c = 0.0;
  double amplitude = 0.0;
  double rms = 0.0;
};

/// Least-squares fit of A * exp(-2 a^2 s^2 q^2 / (1 + 4 a^2 s^4)) to the
/// populated bins of a radial profile, amplitude free.
ProfileFit fit_profile(const RadialProfile& profile, const OpticalSetup& setup, const InversionOptions& options = {});

struct AnalysisConfig {
  OpticalSetup setup;
  double background = 0.0;
  /// Pixels. Blurring averages over the fringe chirp and lowers the visibility off axis.
  double blur_sigma = 0.0;
  MaskOptions mask;
  CenterSearchOptions center;
  int n_angles = 201;
  double radial_step = 1.0;
  InversionOptions inversion;
  int threads = 1;
};

struct Analysis {
  VisibilityMap vmap;
  RadialProfile profile;
  CorrelationEstimate estimate;
};

/// preprocess -> fit_visibility -> find_center -> (re-mask) -> radial_profile
/// -> profile_fwhm -> sigma_from_fwhm. Errors carry the failing stage.
/// A flat visibility map (DegenerateScore) falls back to the intensity centroid.
Analysis analyze_stack(const FrameStack& stack, const AnalysisConfig& config);

/// The estimate part of analyze_stack.
CorrelationEstimate estimate_from_stack(const FrameStack& stack, const AnalysisConfig& config);

}  // namespace icfringe
