#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "icfringe/error.hpp"
#include "icfringe/estimate.hpp"
#include "icfringe/model.hpp"
#include "oracles.hpp"

using namespace icfringe;

namespace {

constexpr double kPi = std::numbers::pi;

TransverseWaveVector at_radius(double rho, const OpticalSetup& setup = {}) { return {rho / setup.camera_scale(), 0.0}; }

double extracted_visibility(const CorrelationModel& model, const OpticalSetup& setup, const TransverseWaveVector& q) {
  // (I_max - I_min) / (I_max + I_min) with the extrema located from the phase of the coherence.
  const SignalEnvelope env;
  const FringeTerms t = fringe_terms(model, setup, q);
  const double phi_max = -std::arg(t.coherence);
  const double hi = t.intensity(env(q), phi_max);
  const double lo = t.intensity(env(q), phi_max + kPi);
  return (hi - lo) / (hi + lo);
}

}  // namespace

TEST(OpticalSetup, DerivedScales) {
  const OpticalSetup s;
  EXPECT_NEAR(s.phase_coefficient(), oracle::kAlpha, 1e-12 * oracle::kAlpha);
  EXPECT_NEAR(s.camera_scale(), oracle::kCameraScale, 1e-12 * oracle::kCameraScale);
}

TEST(OpticalSetup, DefaultsPassEnergyCheck) { EXPECT_NO_THROW(OpticalSetup{}.validate()); }

TEST(OpticalSetup, RejectsNonPositiveFieldsByName) {
  OpticalSetup s;
  s.w_p = -1.0;
  try {
    s.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
    EXPECT_NE(std::string(e.what()).find("w_p"), std::string::npos);
  }
  s = {};
  s.L = 0.0;
  EXPECT_THROW(s.validate(), Error);
  s = {};
  s.d = 0.0;
  EXPECT_NO_THROW(s.validate());
  s.d = -1e-3;
  EXPECT_THROW(s.validate(), Error);
}

TEST(OpticalSetup, EnergyConservationTolerance) {
  OpticalSetup s;
  s.lambda_p = 540e-9;
  EXPECT_THROW(s.validate(), Error);
  EXPECT_NO_THROW(s.validate(0.05));
  // The rounded default wavelengths miss exact conservation by about 1.6e-5.
  EXPECT_THROW(OpticalSetup{}.validate(1e-6), Error);
}

TEST(TransverseWaveVector, ParaxialBound) {
  EXPECT_NO_THROW(validate(TransverseWaveVector{3e5, 3e5}));
  EXPECT_THROW(validate(TransverseWaveVector{4e5, 4e5}), Error);
  EXPECT_THROW(validate(TransverseWaveVector{std::nan(""), 0.0}), Error);
  EXPECT_NO_THROW(validate(TransverseWaveVector{4e5, 4e5}, 1e6));
}

TEST(DeltaKz, ZeroAndPhaseMatched) {
  const OpticalSetup s;
  EXPECT_EQ(delta_kz({0, 0}, {0, 0}, s), 0.0);
  const TransverseWaveVector qi{3e4, -2e4};
  const double r = s.lambda_i / s.lambda_s;
  EXPECT_NEAR(delta_kz(r * qi, qi, s), 0.0, 1e-9);
}

TEST(DeltaKz, AntiCorrelatedExample) {
  EXPECT_NEAR(delta_kz({1e5, 0}, {-1e5, 0}, OpticalSetup{}), oracle::kDeltaKzExample, 1e-10 * oracle::kDeltaKzExample);
}

TEST(BiphotonDensity, PeakAndSincFactor) {
  const OpticalSetup s;
  EXPECT_DOUBLE_EQ(biphoton_density({0, 0}, {0, 0}, s), 1.0);
  EXPECT_NEAR(biphoton_density({8000, 0}, {-8000, 0}, s), oracle::kSinc2At8000, 1e-10);
}

TEST(BiphotonDensity, DependsOnSumOnlyForShortCrystal) {
  OpticalSetup s;
  s.L = 1e-12;
  const TransverseWaveVector sum{3000, -1000};
  const double ref = biphoton_density({0, 0}, sum, s);
  for (double t : {-4e4, -1e4, 2e4, 6e4}) {
    const TransverseWaveVector qs{t, 0.5 * t};
    EXPECT_NEAR(biphoton_density(qs, sum - qs, s), ref, 1e-12);
  }
}

TEST(Sinc, Convention) {
  EXPECT_EQ(sinc(0.0), 1.0);
  EXPECT_NEAR(sinc(kPi), 0.0, 1e-16);
  EXPECT_NEAR(sinc(1.0), std::sin(1.0), 1e-16);
}

TEST(ConditionalDensity, GaussianPeakValueAndLocation) {
  const GaussianCorrelationModel m{8000.0};
  const TransverseWaveVector qs{2e4, -1e4};
  const double peak = conditional_density(m, -qs, qs);
  EXPECT_NEAR(peak, oracle::kGaussPeakDensity8000, 1e-12 * oracle::kGaussPeakDensity8000);
  for (const TransverseWaveVector dq : {TransverseWaveVector{100, 0}, {0, -100}, {70, 70}}) {
    EXPECT_LT(conditional_density(m, -qs + dq, qs), peak);
  }
}

TEST(ConditionalDensity, GaussianIntegratesToOne) {
  const OpticalSetup s;
  for (double q : {0.0, 5e4, 1e5}) {
    const FringeTerms t = fringe_terms_2d(GaussianCorrelationModel{8000.0}, s, {q, 0.3 * q});
    EXPECT_NEAR(t.mass, 1.0, 1e-6);
  }
}

TEST(ConditionalDensity, SpdcIntegratesToOne) {
  const SpdcCorrelationModel m{OpticalSetup{}};
  for (double q : {0.0, 6e4}) {
    const SpdcConditional c(m, {q, 0.0});
    EXPECT_GT(c.normalization(), 0.0);
    EXPECT_LE(c.normalization_error(), 1e-6 * c.normalization());
  }
  EXPECT_NEAR(fringe_terms_2d(m, m.setup, {3e4, 1e4}).mass, 1.0, 1e-12);
}

TEST(PhaseFreeSpace, Values) {
  OpticalSetup s;
  EXPECT_EQ(phase_free_space({0, 0}, s), 0.0);
  EXPECT_NEAR(phase_free_space({1e5, 0}, s), oracle::kPhaseAt1e5, 1e-12 * oracle::kPhaseAt1e5);
  EXPECT_NEAR(phase_free_space({6e4, 8e4}, s), oracle::kPhaseAt1e5, 1e-12 * oracle::kPhaseAt1e5);
  s.d = 0.0;
  EXPECT_EQ(phase_free_space({3e5, 1e5}, s), 0.0);
}

TEST(IntensityPattern, NoPropagationGivesFullContrast) {
  OpticalSetup s;
  s.d = 0.0;
  const SignalEnvelope env;
  const GaussianCorrelationModel m{8000.0};
  for (const TransverseWaveVector q : {TransverseWaveVector{0, 0}, {4e4, -3e4}}) {
    EXPECT_NEAR(intensity_pattern(m, env, s, q, 0.0), 2.0 * env(q), 1e-12);
    EXPECT_NEAR(intensity_pattern(m, env, s, q, kPi), 0.0, 1e-12);
  }
}

TEST(IntensityPattern, NarrowCorrelationFollowsSinglePhase) {
  const OpticalSetup s;
  const SignalEnvelope env;
  const GaussianCorrelationModel m{1.0};
  for (double qx : {0.0, 3e4, 8e4}) {
    const TransverseWaveVector q{qx, 0.5 * qx};
    for (double phi : {0.0, 1.0, 2.5}) {
      const double expect = env(q) * (1.0 + std::cos(phase_free_space(-q, s) + phi));
      EXPECT_NEAR(intensity_pattern(m, env, s, q, phi), expect, 1e-6 * env(q));
    }
  }
}

TEST(IntensityPattern, NonNegativeAndPhaseAverageIsEnvelope) {
  const OpticalSetup s;
  const SignalEnvelope env;
  const GaussianCorrelationModel m{8000.0};
  for (double qx : {0.0, 2e4, 7e4}) {
    const TransverseWaveVector q{qx, -0.4 * qx};
    double sum = 0.0;
    for (int k = 0; k < 25; ++k) {
      const double i = intensity_pattern(m, env, s, q, 2.0 * kPi * k / 25.0);
      EXPECT_GE(i, 0.0);
      sum += i;
    }
    EXPECT_NEAR(sum / 25.0, env(q), 1e-6 * env(q));
  }
}

TEST(IntensityPattern, CentralVisibilityFromPhaseScan) {
  const double v = extracted_visibility(GaussianCorrelationModel{8000.0}, OpticalSetup{}, {0, 0});
  EXPECT_NEAR(v, oracle::kPeakVisibility8000, 1e-6);
}

TEST(FringeTerms, FactoredPathMatchesTensorSum) {
  const OpticalSetup s;
  for (double sigma : {2000.0, 8000.0, 12000.0}) {
    for (const TransverseWaveVector q : {TransverseWaveVector{0, 0}, {5e4, 0}, {4e4, -6e4}}) {
      const FringeTerms a = fringe_terms(GaussianCorrelationModel{sigma}, s, q);
      const FringeTerms b = fringe_terms_2d(GaussianCorrelationModel{sigma}, s, q);
      EXPECT_NEAR(a.mass, b.mass, 1e-12);
      EXPECT_NEAR(std::abs(a.coherence - b.coherence), 0.0, 1e-12);
    }
  }
}

TEST(FringeTerms, CoherenceMatchesComplexGaussianIntegral) {
  const OpticalSetup s;
  for (double sigma : {3000.0, 9000.0}) {
    for (const TransverseWaveVector q : {TransverseWaveVector{2e4, 1e4}, {-7e4, 3e4}}) {
      const auto expect = oracle::gaussian_coherence(sigma, oracle::kAlpha, q.norm2());
      const auto got = fringe_terms_2d(GaussianCorrelationModel{sigma}, s, q).coherence;
      EXPECT_NEAR(std::abs(got - expect), 0.0, 1e-8);
    }
  }
}

TEST(FringeTerms, QuadratureFailureWhenGridTooCoarse) {
  QuadratureOptions coarse;
  coarse.max_phase_per_panel = 40.0;
  coarse.min_panels = 1;
  try {
    fringe_terms_2d(GaussianCorrelationModel{12000.0}, OpticalSetup{}, {1e5, 0}, coarse);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::QuadratureFailure);
  }
}

TEST(VisibilityClosedForm, AgreesWithArbitraryPrecisionQuadrature) {
  const OpticalSetup s;
  EXPECT_NEAR(visibility_closed_form(8000.0, s, 0.0), oracle::kPeakVisibility8000, 1e-15);
  for (const auto& p : oracle::kQuadraturePoints) {
    EXPECT_NEAR(visibility_closed_form(p.sigma_c, s, p.rho), p.visibility, 1e-14);
  }
}

TEST(VisibilityClosedForm, Limits) {
  OpticalSetup s;
  for (double rho : {0.0, 1e-3, 2e-3}) EXPECT_NEAR(visibility_closed_form(1e-3, s, rho), 1.0, 1e-12);
  s.d = 0.0;
  for (double sigma : {1000.0, 8000.0}) EXPECT_EQ(visibility_closed_form(sigma, s, 1.5e-3), 1.0);
}

TEST(VisibilityClosedForm, QuadratureAgreementOnGrid) {
  const OpticalSetup s;
  for (int i = 0; i < 7; ++i) {
    const double sigma = 2000.0 + 8000.0 * i / 6.0;
    for (int j = 0; j < 7; ++j) {
      const double rho = 2e-3 * j / 6.0;
      const double v = fringe_terms_2d(GaussianCorrelationModel{sigma}, s, at_radius(rho, s)).visibility();
      EXPECT_NEAR(v, visibility_closed_form(sigma, s, rho), 1e-6) << sigma << ' ' << rho;
    }
  }
}

TEST(VisibilityClosedForm, MonotoneInRadiusAndSigma) {
  const OpticalSetup s;
  const double top = regime_sigma(s);
  for (double sigma = 500.0; sigma < top; sigma += 500.0) {
    double prev = 2.0;
    for (double rho = 0.0; rho <= 3e-3; rho += 5e-5) {
      const double v = visibility_closed_form(sigma, s, rho);
      EXPECT_LE(v, prev);
      prev = v;
    }
  }
  for (double rho = 1e-4; rho <= 3e-3; rho += 1e-4) {
    double prev = 2.0;
    for (double sigma = 100.0; sigma < top; sigma += 100.0) {
      const double v = visibility_closed_form(sigma, s, rho);
      EXPECT_LE(v, prev);
      prev = v;
    }
  }
}

TEST(SpdcModel, CrystalLengthBound) {
  OpticalSetup s;
  const double dev = max_sinc_deviation(s, 1e5);
  EXPECT_GT(dev, 0.2);
  const double l = crystal_length_bound(s, 1e5, 0.01);
  s.L = l;
  EXPECT_NEAR(max_sinc_deviation(s, 1e5), 0.01, 1e-6);
}

TEST(SpdcModel, MatchesGaussianForShortCrystal) {
  OpticalSetup s;
  s.L = crystal_length_bound(s, 1e5, 0.01);
  const SpdcCorrelationModel spdc{s};
  const GaussianCorrelationModel gauss{1.0 / s.w_p};
  for (double rho : {0.0, 0.5e-3, 1.0e-3, 1.5e-3, 2.0e-3}) {
    const auto q = at_radius(rho, s);
    EXPECT_NEAR(extracted_visibility(spdc, s, q), extracted_visibility(gauss, s, q), 0.01) << rho;
  }
}

TEST(SpdcModel, RotationInvariance) {
  const SpdcCorrelationModel m{OpticalSetup{}};
  const double r = 5e4;
  const double v0 = fringe_terms_2d(m, m.setup, {r, 0}).visibility();
  const double v1 = fringe_terms_2d(m, m.setup, {r * std::cos(0.7), r * std::sin(0.7)}).visibility();
  EXPECT_NEAR(v0, v1, 1e-7);
}
