#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "icfringe/error.hpp"
#include "icfringe/estimate.hpp"
#include "icfringe/synth.hpp"
#include "oracles.hpp"

using namespace icfringe;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::InvalidArgument;
}

FrameStack noiseless(double w_p, double d = 11.7e-3, double photon_scale = 1e4) {
  OpticalSetup s;
  s.w_p = w_p;
  s.d = d;
  return synthesize_stack(GaussianCorrelationModel{1.0 / w_p}, SignalEnvelope{}, s, CameraGeometry{},
                          NoiseModel::noiseless(photon_scale), uniform_phases(25));
}

AnalysisConfig config_for(double w_p, double d = 11.7e-3) {
  AnalysisConfig c;
  c.setup.w_p = w_p;
  c.setup.d = d;
  return c;
}

}  // namespace

TEST(FwhmFromSigma, DerivedValues) {
  const OpticalSetup s;
  EXPECT_NEAR(fwhm_from_sigma(8000.0, s), oracle::kFwhm8000, 1e-12 * oracle::kFwhm8000);
  EXPECT_NEAR(fwhm_from_sigma(6250.0, s), oracle::kFwhm6250, 1e-12 * oracle::kFwhm6250);
  EXPECT_NEAR(fwhm_from_sigma(5000.0, s), oracle::kFwhm5000, 1e-12 * oracle::kFwhm5000);
  for (double sigma : {700.0, 3000.0, 11000.0}) {
    EXPECT_NEAR(fwhm_from_sigma(sigma, s), oracle::gaussian_fwhm(sigma, oracle::kAlpha, oracle::kCameraScale),
                1e-12 * fwhm_from_sigma(sigma, s));
  }
}

TEST(FwhmFromSigma, HalfMaximumOfClosedForm) {
  const OpticalSetup s;
  const double f = fwhm_from_sigma(8000.0, s);
  EXPECT_NEAR(visibility_closed_form(8000.0, s, f / 2.0), 0.5 * visibility_closed_form(8000.0, s, 0.0), 1e-12);
}

TEST(FwhmFromSigma, StrictlyDecreasingOnBracket) {
  const OpticalSetup s;
  const double top = regime_sigma(s);
  double prev = fwhm_from_sigma(100.0, s);
  for (int i = 1; i < 100; ++i) {
    const double sigma = 100.0 + (top - 100.0) * i / 100.0;
    const double f = fwhm_from_sigma(sigma, s);
    EXPECT_LT(f, prev);
    prev = f;
  }
}

TEST(FwhmFromSigma, Errors) {
  const OpticalSetup s;
  EXPECT_EQ(code_of([&] { fwhm_from_sigma(0.0, s); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { fwhm_from_sigma(oracle::kRegimeSigma * 1.0001, s); }), ErrorCode::RegimeViolation);
  OpticalSetup flat = s;
  flat.d = 0.0;
  EXPECT_EQ(code_of([&] { fwhm_from_sigma(8000.0, flat); }), ErrorCode::NoDecay);
  EXPECT_NO_THROW(fwhm_from_sigma(oracle::kRegimeSigma * 0.9999, s));
}

TEST(RegimeParameter, PaperValue) {
  EXPECT_NEAR(regime_parameter(8000.0, OpticalSetup{}), oracle::kRegime8000, 1e-14);
  EXPECT_NEAR(regime_sigma(OpticalSetup{}), oracle::kRegimeSigma, 1e-9);
}

TEST(SigmaFromFwhm, RoundTrip) {
  const OpticalSetup s;
  for (double sigma = 2000.0; sigma <= 10000.0; sigma += 250.0) {
    const CorrelationEstimate e = sigma_from_fwhm(fwhm_from_sigma(sigma, s), s);
    EXPECT_NEAR(e.sigma_c, sigma, 1e-3 * sigma);
    EXPECT_NEAR(e.sigma_c, sigma, 1e-8 * sigma);
    EXPECT_LE(e.diagnostics.roundtrip_error, 1e-6);
    EXPECT_EQ(e.variance, e.sigma_c * e.sigma_c);
    EXPECT_TRUE(e.valid);
  }
}

TEST(SigmaFromFwhm, PaperFwhmGivesPumpVariance) {
  const CorrelationEstimate e = sigma_from_fwhm(2.07e-3, OpticalSetup{});
  EXPECT_NEAR(e.variance, 6.4e7, 0.01 * 6.4e7);
  EXPECT_NEAR(e.fwhm_q, 2.07e-3 / oracle::kCameraScale, 1e-6);
  EXPECT_LT(e.regime_parameter, 0.5);
}

TEST(SigmaFromFwhm, Errors) {
  const OpticalSetup s;
  EXPECT_EQ(code_of([&] { sigma_from_fwhm(0.0, s); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { sigma_from_fwhm(-1e-3, s); }), ErrorCode::InvalidArgument);
  // Wider than sigma_min = 100 allows.
  EXPECT_EQ(code_of([&] { sigma_from_fwhm(1.0, s); }), ErrorCode::BracketFailure);
  // Narrower than any in-regime width.
  EXPECT_EQ(code_of([&] { sigma_from_fwhm(0.5 * fwhm_from_sigma(oracle::kRegimeSigma * 0.999, s), s); }),
            ErrorCode::RegimeViolation);
  InversionOptions narrow;
  narrow.sigma_max = 6000.0;
  EXPECT_EQ(code_of([&] { sigma_from_fwhm(oracle::kFwhm8000, s, narrow); }), ErrorCode::BracketFailure);
  InversionOptions beyond;
  beyond.sigma_max = 14000.0;
  EXPECT_EQ(code_of([&] { sigma_from_fwhm(oracle::kFwhm8000, s, beyond); }), ErrorCode::RegimeViolation);
  OpticalSetup flat = s;
  flat.d = 0.0;
  EXPECT_EQ(code_of([&] { sigma_from_fwhm(2e-3, flat); }), ErrorCode::NoDecay);
}

TEST(SigmaFromFwhm, GuardFollowsRegimeBound) {
  const OpticalSetup s;
  InversionOptions tight;
  tight.regime_bound = 0.15;
  EXPECT_EQ(code_of([&] { sigma_from_fwhm(oracle::kFwhm8000, s, tight); }), ErrorCode::RegimeViolation);
  tight.regime_bound = 0.2;
  EXPECT_NEAR(sigma_from_fwhm(oracle::kFwhm8000, s, tight).sigma_c, 8000.0, 1e-3);
}

TEST(FitProfile, RecoversSigmaFromExactProfile) {
  const OpticalSetup s;
  RadialProfile p;
  for (int k = 0; k < 120; ++k) {
    const double r = k * 16e-6;
    p.radii.push_back(r);
    p.visibility.push_back(0.9 * visibility_closed_form(6000.0, s, r) / visibility_closed_form(6000.0, s, 0.0));
    p.sample_counts.push_back(8);
  }
  const ProfileFit f = fit_profile(p, s);
  EXPECT_NEAR(f.sigma_c, 6000.0, 1.0);
  EXPECT_NEAR(f.amplitude, 0.9, 1e-4);
  EXPECT_LT(f.rms, 1e-6);
}

TEST(EstimateFromStack, NoiselessPumpWaists) {
  for (double w_p : {125e-6, 160e-6, 200e-6}) {
    const CorrelationEstimate e = estimate_from_stack(noiseless(w_p), config_for(w_p));
    const double target = 1.0 / (w_p * w_p);
    EXPECT_NEAR(e.variance, target, 0.01 * target) << w_p;
    ASSERT_TRUE(e.theoretical_variance.has_value());
    EXPECT_NEAR(*e.theoretical_variance, target, 1e-6 * target);
    ASSERT_TRUE(e.diagnostics.center.has_value());
    EXPECT_NEAR(e.diagnostics.center->x, 127.5, 0.5);
    EXPECT_NEAR(e.diagnostics.center->y, 127.5, 0.5);
    ASSERT_TRUE(e.diagnostics.profile_fit_sigma_c.has_value());
    EXPECT_NEAR(*e.diagnostics.profile_fit_sigma_c, 1.0 / w_p, 0.01 / w_p);
  }
}

TEST(EstimateFromStack, IntensityScaleInvariance) {
  const CorrelationEstimate a = estimate_from_stack(noiseless(125e-6, 11.7e-3, 1e4), config_for(125e-6));
  const CorrelationEstimate b = estimate_from_stack(noiseless(125e-6, 11.7e-3, 2.5e3), config_for(125e-6));
  EXPECT_NEAR(a.sigma_c, b.sigma_c, 1e-6 * a.sigma_c);
}

TEST(EstimateFromStack, NoDecayWithoutPropagation) {
  const FrameStack st = noiseless(125e-6, 0.0);
  try {
    estimate_from_stack(st, config_for(125e-6, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == ErrorCode::NoDecay || e.code() == ErrorCode::NoHalfCrossing);
    EXPECT_FALSE(e.stage().empty());
  }
}

TEST(EstimateFromStack, StageLabelOnPipelineError) {
  FrameStack st = noiseless(125e-6);
  st.phases.resize(2);
  st.frames.resize(2);
  try {
    estimate_from_stack(st, config_for(125e-6));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegeneratePhases);
    EXPECT_EQ(e.stage(), "fit_visibility");
  }
}

TEST(EstimateFromStack, NoisyWithinTenPercent) {
  for (double w_p : {125e-6, 200e-6}) {
    OpticalSetup s;
    s.w_p = w_p;
    NoiseModel n;
    n.rng_seed = 3;
    const FrameStack st = synthesize_stack(GaussianCorrelationModel{1.0 / w_p}, SignalEnvelope{}, s, CameraGeometry{},
                                           n, uniform_phases(25));
    const CorrelationEstimate e = estimate_from_stack(st, config_for(w_p));
    EXPECT_NEAR(e.variance, 1.0 / (w_p * w_p), 0.1 / (w_p * w_p));
  }
}

TEST(EstimateFromStack, NoisyFwhmNearNoiseless) {
  const CorrelationEstimate clean = estimate_from_stack(noiseless(125e-6), config_for(125e-6));
  const ExpectedStack ex = render_expected(GaussianCorrelationModel{8000.0}, SignalEnvelope{}, OpticalSetup{},
                                           CameraGeometry{}, uniform_phases(25));
  int within = 0;
  constexpr int kSeeds = 20;
  for (int seed = 0; seed < kSeeds; ++seed) {
    NoiseModel n;
    n.rng_seed = 100 + seed;
    const CorrelationEstimate e = estimate_from_stack(realize(ex, n), config_for(125e-6));
    if (std::abs(e.fwhm_camera - clean.fwhm_camera) <= 0.03 * clean.fwhm_camera) ++within;
  }
  EXPECT_GE(within, 19);
}
