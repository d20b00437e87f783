#include "icfringe/estimate.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>

#include "icfringe/error.hpp"

namespace icfringe {

namespace {

// FWHM of the visibility peak with no regime check.
double fwhm_unchecked(double sigma_c, const OpticalSetup& setup) {
  const double alpha = setup.phase_coefficient();
  const double a2s2 = alpha * alpha * sigma_c * sigma_c;
  const double q_half = std::sqrt(std::numbers::ln2 * (1.0 + 4.0 * a2s2 * sigma_c * sigma_c) / (2.0 * a2s2));
  return 2.0 * setup.camera_scale() * q_half;
}

void require_decay(const OpticalSetup& setup) {
  if (!(setup.phase_coefficient() > 0.0)) {
    throw Error(ErrorCode::NoDecay, "idler propagation distance is zero; visibility does not decay");
  }
}

template <typename F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw e.with_stage(stage);
  }
}

}  // namespace

double regime_parameter(double sigma_c, const OpticalSetup& setup) {
  return 2.0 * setup.phase_coefficient() * sigma_c * sigma_c;
}

double regime_sigma(const OpticalSetup& setup, double regime_bound) {
  require_decay(setup);
  return std::sqrt(regime_bound / (2.0 * setup.phase_coefficient()));
}

double fwhm_from_sigma(double sigma_c, const OpticalSetup& setup, double regime_bound) {
  if (!(sigma_c > 0.0) || !std::isfinite(sigma_c)) {
    throw Error(ErrorCode::InvalidArgument, "sigma_c must be finite and > 0");
  }
  require_decay(setup);
  const double regime = regime_parameter(sigma_c, setup);
  if (regime >= regime_bound) {
    std::ostringstream os;
    os << "2 alpha sigma_c^2 = " << regime << " >= regime bound " << regime_bound;
    throw Error(ErrorCode::RegimeViolation, os.str());
  }
  return fwhm_unchecked(sigma_c, setup);
}

CorrelationEstimate sigma_from_fwhm(double fwhm, const OpticalSetup& setup, const InversionOptions& options) {
  if (!(fwhm > 0.0) || !std::isfinite(fwhm)) {
    throw Error(ErrorCode::InvalidArgument, "fwhm must be finite and > 0");
  }
  require_decay(setup);
  const double top = regime_sigma(setup, options.regime_bound);
  const double lo = options.sigma_min;
  const double hi = options.sigma_max.value_or(top);
  if (!(lo > 0.0) || !(hi > lo)) {
    throw Error(ErrorCode::InvalidArgument, "bisection bracket must satisfy 0 < sigma_min < sigma_max");
  }
  // The default upper end sits exactly on the bound; allow for its rounding.
  if (regime_parameter(hi, setup) > options.regime_bound * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "bracket upper end " << hi << " m^-1 gives 2 alpha sigma_c^2 = " << regime_parameter(hi, setup)
       << " >= regime bound " << options.regime_bound;
    throw Error(ErrorCode::RegimeViolation, os.str());
  }
  const double widest = fwhm_unchecked(lo, setup);
  const double narrowest = fwhm_unchecked(hi, setup);
  if (fwhm > widest) {
    std::ostringstream os;
    os << "fwhm " << fwhm << " m exceeds the widest achievable " << widest << " m at sigma_c = " << lo;
    throw Error(ErrorCode::BracketFailure, os.str());
  }
  if (fwhm < narrowest) {
    std::ostringstream os;
    os << "fwhm " << fwhm << " m is narrower than " << narrowest << " m at sigma_c = " << hi;
    if (options.sigma_max && *options.sigma_max < top) {
      throw Error(ErrorCode::BracketFailure, os.str());
    }
    os << "; the implied sigma_c lies beyond the regime bound " << options.regime_bound;
    throw Error(ErrorCode::RegimeViolation, os.str());
  }

  // FWHM decreases in sigma_c; bisect on log sigma_c to a relative width far below the tolerance.
  const auto f = [&](double log_sigma) { return fwhm_unchecked(std::exp(log_sigma), setup) - fwhm; };
  std::uintmax_t iterations = 200;
  const auto tol = [](double a, double b) { return std::abs(b - a) < 1e-12; };
  const auto [a, b] = boost::math::tools::bisect(f, std::log(lo), std::log(hi), tol, iterations);
  const double sigma = std::exp(0.5 * (a + b));

  CorrelationEstimate est;
  est.sigma_c = sigma;
  est.variance = sigma * sigma;
  est.fwhm_camera = fwhm;
  est.fwhm_q = fwhm / setup.camera_scale();
  est.regime_parameter = regime_parameter(sigma, setup);
  est.valid = est.regime_parameter < options.regime_bound;
  est.diagnostics.bracket_lo = lo;
  est.diagnostics.bracket_hi = hi;
  est.diagnostics.iterations = static_cast<int>(iterations);
  est.diagnostics.roundtrip_error = std::abs(fwhm_unchecked(sigma, setup) - fwhm) / fwhm;
  if (est.diagnostics.roundtrip_error > options.relative_tolerance) {
    std::ostringstream os;
    os << "bisection round-trip error " << est.diagnostics.roundtrip_error << " exceeds "
       << options.relative_tolerance;
    throw Error(ErrorCode::BracketFailure, os.str());
  }
  return est;
}

ProfileFit fit_profile(const RadialProfile& profile, const OpticalSetup& setup, const InversionOptions& options) {
  require_decay(setup);
  const double alpha = setup.phase_coefficient();
  const double scale = setup.camera_scale();
  std::vector<double> q2;
  std::vector<double> v;
  std::vector<double> w;
  for (std::size_t k = 0; k < profile.radii.size(); ++k) {
    if (profile.sample_counts[k] <= 0 || !std::isfinite(profile.visibility[k])) continue;
    const double q = profile.radii[k] / scale;
    q2.push_back(q * q);
    v.push_back(profile.visibility[k]);
    w.push_back(profile.sample_counts[k]);
  }
  if (v.size() < 3) throw Error(ErrorCode::InsufficientData, "profile fit needs at least 3 populated radii");

  struct Eval {
    double amplitude;
    double mse;
  };
  const auto evaluate = [&](double sigma) {
    const double a2s2 = alpha * alpha * sigma * sigma;
    const double kappa = 2.0 * a2s2 / (1.0 + 4.0 * a2s2 * sigma * sigma);
    double sgg = 0.0;
    double svg = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double g = std::exp(-kappa * q2[i]);
      sgg += w[i] * g * g;
      svg += w[i] * v[i] * g;
    }
    const double amp = svg / sgg;
    double sse = 0.0;
    double sw = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double e = v[i] - amp * std::exp(-kappa * q2[i]);
      sse += w[i] * e * e;
      sw += w[i];
    }
    return Eval{amp, sse / sw};
  };

  const double lo = std::log(options.sigma_min);
  const double hi = std::log(options.sigma_max.value_or(regime_sigma(setup, options.regime_bound)));
  std::uintmax_t iterations = 200;
  const auto [log_sigma, mse] = boost::math::tools::brent_find_minima(
      [&](double s) { return evaluate(std::exp(s)).mse; }, lo, hi, 40, iterations);
  const double sigma = std::exp(log_sigma);
  return {sigma, evaluate(sigma).amplitude, std::sqrt(mse)};
}

Analysis analyze_stack(const FrameStack& stack, const AnalysisConfig& config) {
  staged("estimate", [&] { require_decay(config.setup); });
  const FrameStack clean =
      staged("preprocess", [&] { return preprocess(stack, config.background, config.blur_sigma, config.threads); });

  Analysis out;
  out.vmap = staged("fit_visibility", [&] { return fit_visibility(clean, config.mask, config.threads); });

  EstimateDiagnostics diag;
  PixelCoord center = out.vmap.mask_center;
  try {
    const CenterResult found = find_center(out.vmap, config.center);
    center = found.center;
    diag.center_score = found.score;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateScore) throw e.with_stage("find_center");
    center = intensity_centroid(out.vmap);
    diag.center_degenerate = true;
  }
  apply_mask(out.vmap, center, config.mask.threshold_fraction, config.mask.disk_radius);
  diag.center = center;

  out.profile = staged("radial_profile",
                       [&] { return radial_profile(out.vmap, center, config.n_angles, config.radial_step); });
  const double fwhm = staged("profile_fwhm", [&] { return profile_fwhm(out.profile); });

  out.estimate = staged("sigma_from_fwhm", [&] { return sigma_from_fwhm(fwhm, config.setup, config.inversion); });
  {
    const auto& v = out.profile.visibility;
    double peak = 0.0;
    int n = 0;
    for (std::size_t k = 0; k < v.size() && n < 3; ++k) {
      if (out.profile.sample_counts[k] > 0) {
        peak += v[k];
        ++n;
      }
    }
    diag.peak_visibility = peak / n;
  }
  try {
    const ProfileFit pf = fit_profile(out.profile, config.setup, config.inversion);
    diag.profile_fit_sigma_c = pf.sigma_c;
    diag.profile_fit_rms = pf.rms;
  } catch (const Error&) {
    // The secondary estimator is diagnostic only.
  }
  diag.bracket_lo = out.estimate.diagnostics.bracket_lo;
  diag.bracket_hi = out.estimate.diagnostics.bracket_hi;
  diag.iterations = out.estimate.diagnostics.iterations;
  diag.roundtrip_error = out.estimate.diagnostics.roundtrip_error;
  out.estimate.diagnostics = diag;
  if (stack.metadata.setup) {
    const double wp = stack.metadata.setup->w_p;
    out.estimate.theoretical_variance = 1.0 / (wp * wp);
  }
  return out;
}

CorrelationEstimate estimate_from_stack(const FrameStack& stack, const AnalysisConfig& config) {
  return analyze_stack(stack, config).estimate;
}

}  // namespace icfringe
