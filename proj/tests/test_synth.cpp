#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "icfringe/error.hpp"
#include "icfringe/model.hpp"
#include "icfringe/synth.hpp"
#include "oracles.hpp"

using namespace icfringe;

namespace {

CameraGeometry small_geometry() { return CameraGeometry::centered(32, 32, 64e-6); }

FrameStack small_stack(const NoiseModel& noise, int threads = 1) {
  return synthesize_stack(GaussianCorrelationModel{8000.0}, SignalEnvelope{}, OpticalSetup{}, small_geometry(), noise,
                          uniform_phases(5), threads);
}

}  // namespace

TEST(PixelMapping, CenterAndScale) {
  const OpticalSetup s;
  const CameraGeometry g;
  const auto q0 = pixel_to_q(g.center, g, s);
  EXPECT_EQ(q0.qx, 0.0);
  EXPECT_EQ(q0.qy, 0.0);
  const double px = 2e-3 / g.pixel_pitch;
  EXPECT_NEAR(pixel_to_q({g.center.x + px, g.center.y}, g, s).norm(), oracle::kQAt2mm, 1e-9 * oracle::kQAt2mm);
  const double d = px / std::sqrt(2.0);
  EXPECT_NEAR(pixel_to_q({g.center.x - d, g.center.y + d}, g, s).norm(), oracle::kQAt2mm, 1e-9 * oracle::kQAt2mm);
}

TEST(PixelMapping, RoundTrip) {
  const OpticalSetup s;
  const CameraGeometry g;
  for (const PixelCoord p : {PixelCoord{0.0, 0.0}, {13.25, 200.5}, {255.0, 97.125}}) {
    const PixelCoord back = q_to_pixel(pixel_to_q(p, g, s), g, s);
    EXPECT_NEAR(back.x, p.x, 1e-12 * std::max(1.0, std::abs(p.x)));
    EXPECT_NEAR(back.y, p.y, 1e-12 * std::max(1.0, std::abs(p.y)));
  }
}

TEST(CameraGeometry, Validation) {
  EXPECT_NO_THROW(CameraGeometry{}.validate());
  EXPECT_THROW(CameraGeometry::centered(15, 64, 1e-5).validate(), Error);
  CameraGeometry g;
  g.center = {300.0, 10.0};
  EXPECT_THROW(g.validate(), Error);
  g = {};
  g.pixel_pitch = 0.0;
  EXPECT_THROW(g.validate(), Error);
}

TEST(NoiseModel, Validation) {
  NoiseModel n;
  EXPECT_NO_THROW(n.validate());
  n.photon_scale = -1.0;
  EXPECT_THROW(n.validate(), Error);
  n = {};
  n.read_noise_sigma = -0.5;
  EXPECT_THROW(n.validate(), Error);
}

TEST(UniformPhases, Grid) {
  const auto p = uniform_phases(25);
  ASSERT_EQ(p.size(), 25u);
  EXPECT_EQ(p.front(), 0.0);
  for (std::size_t k = 1; k < p.size(); ++k) EXPECT_NEAR(p[k] - p[k - 1], 2.0 * std::numbers::pi / 25.0, 1e-15);
  EXPECT_LT(p.back(), 2.0 * std::numbers::pi);
}

TEST(FrameStack, Validation) {
  FrameStack s = small_stack(NoiseModel::noiseless());
  EXPECT_NO_THROW(s.validate());
  FrameStack bad = s;
  std::swap(bad.phases[1], bad.phases[2]);
  EXPECT_THROW(bad.validate(), Error);
  bad = s;
  bad.frames.pop_back();
  EXPECT_THROW(bad.validate(), Error);
  bad = s;
  bad.phases.back() = 2.0 * std::numbers::pi;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(RenderExpected, MatchesOracleIntensity) {
  const OpticalSetup s;
  const CameraGeometry g = CameraGeometry::centered(48, 40, 80e-6);
  const auto phases = uniform_phases(6);
  const ExpectedStack e = render_expected(GaussianCorrelationModel{7000.0}, SignalEnvelope{}, s, g, phases);
  EXPECT_EQ(e.metadata.source, "synthetic");
  for (std::size_t k = 0; k < phases.size(); ++k) {
    for (int y = 0; y < g.height; y += 3) {
      for (int x = 0; x < g.width; x += 5) {
        const double expect = oracle::expected_counts(7000.0, oracle::kAlpha, oracle::kCameraScale, 5e4, 1.0,
                                                      (x - g.center.x) * g.pixel_pitch,
                                                      (y - g.center.y) * g.pixel_pitch, phases[k]);
        EXPECT_NEAR(e.frames[k](x, y), expect, 1e-9);
      }
    }
  }
}

TEST(RenderExpected, RotationSymmetry) {
  const CameraGeometry g = CameraGeometry::centered(40, 40, 80e-6);
  const ExpectedStack e =
      render_expected(GaussianCorrelationModel{8000.0}, SignalEnvelope{}, OpticalSetup{}, g, uniform_phases(3));
  for (const auto& f : e.frames) {
    for (int y = 0; y < g.height; ++y) {
      for (int x = 0; x < g.width; ++x) EXPECT_NEAR(f(x, y), f(g.height - 1 - y, x), 1e-10);
    }
  }
}

TEST(RenderExpected, SpdcTableMatchesDirectEvaluation) {
  const OpticalSetup s;
  const CameraGeometry g = CameraGeometry::centered(32, 32, 120e-6);
  const SignalEnvelope env;
  const auto phases = uniform_phases(4);
  const SpdcCorrelationModel m{s};
  const ExpectedStack e = render_expected(m, env, s, g, phases);
  for (const PixelCoord p : {PixelCoord{3, 7}, {16, 16}, {20, 29}, {31, 0}}) {
    const auto q = pixel_to_q(p, g, s);
    const FringeTerms t = fringe_terms(m, s, q);
    for (std::size_t k = 0; k < phases.size(); ++k) {
      EXPECT_NEAR(e.frames[k](static_cast<int>(p.x), static_cast<int>(p.y)), 0.5 * t.intensity(env(q), phases[k]),
                  1e-6);
    }
  }
}

TEST(Synthesize, NoiselessDestructiveFrameIsBackground) {
  OpticalSetup s;
  s.d = 0.0;
  const std::vector<double> phases{0.0, std::numbers::pi};
  const FrameStack st = synthesize_stack(GaussianCorrelationModel{8000.0}, SignalEnvelope{}, s, small_geometry(),
                                         NoiseModel::noiseless(1e4, 12.0), phases);
  for (float v : st.frames[1].data) EXPECT_NEAR(v, 12.0f, 1e-5);
  EXPECT_NEAR(st.frames[0](16, 16), 12.0 + 1e4, 20.0);
}

TEST(Synthesize, ZeroPhotonsIsReadNoiseAroundBackground) {
  NoiseModel n;
  n.photon_scale = 0.0;
  n.read_noise_sigma = 3.0;
  n.background_level = 100.0;
  n.rng_seed = 11;
  const FrameStack st = small_stack(n);
  double sum = 0.0;
  double sum2 = 0.0;
  std::size_t count = 0;
  for (const auto& f : st.frames) {
    for (float v : f.data) {
      sum += v;
      sum2 += (v - 100.0) * (v - 100.0);
      ++count;
    }
  }
  const double mean = sum / count;
  EXPECT_NEAR(mean, 100.0, 5.0 * 3.0 / std::sqrt(count));
  EXPECT_NEAR(std::sqrt(sum2 / count), 3.0, 0.1);
}

TEST(Synthesize, DeterministicUnderSeed) {
  NoiseModel n;
  n.rng_seed = 42;
  n.read_noise_sigma = 1.5;
  const FrameStack a = small_stack(n);
  const FrameStack b = small_stack(n);
  EXPECT_EQ(a, b);
  n.rng_seed = 43;
  EXPECT_NE(a.frames, small_stack(n).frames);
}

TEST(Synthesize, IndependentOfThreadCount) {
  NoiseModel n;
  n.rng_seed = 5;
  n.read_noise_sigma = 2.0;
  const FrameStack a = small_stack(n, 1);
  for (int t : {2, 3, 8}) EXPECT_EQ(a, small_stack(n, t));
}

TEST(Synthesize, NoisyMeanConvergesToNoiseless) {
  const CameraGeometry g = CameraGeometry::centered(16, 16, 160e-6);
  const auto phases = uniform_phases(3);
  const ExpectedStack e = render_expected(GaussianCorrelationModel{8000.0}, SignalEnvelope{}, OpticalSetup{}, g, phases);
  NoiseModel n;
  n.photon_scale = 200.0;
  n.read_noise_sigma = 2.0;
  n.background_level = 5.0;
  constexpr int kRuns = 200;
  std::vector<double> sum(e.frames.size() * g.width * g.height, 0.0);
  for (int r = 0; r < kRuns; ++r) {
    n.rng_seed = 1000 + r;
    const FrameStack st = realize(e, n);
    for (std::size_t k = 0; k < st.frames.size(); ++k) {
      for (std::size_t i = 0; i < st.frames[k].data.size(); ++i) sum[k * st.frames[k].data.size() + i] += st.frames[k].data[i];
    }
  }
  int outside = 0;
  for (std::size_t k = 0; k < e.frames.size(); ++k) {
    for (std::size_t i = 0; i < e.frames[k].data.size(); ++i) {
      const double lambda = n.photon_scale * e.frames[k].data[i];
      const double expect = lambda + n.background_level;
      const double se = std::sqrt((lambda + n.read_noise_sigma * n.read_noise_sigma) / kRuns);
      if (std::abs(sum[k * e.frames[k].data.size() + i] / kRuns - expect) > 5.0 * se) ++outside;
    }
  }
  EXPECT_EQ(outside, 0);
}

TEST(Synthesize, NoiselessFramesAreExpectedCounts) {
  const FrameStack st = small_stack(NoiseModel::noiseless(1e4, 3.0));
  const CameraGeometry g = small_geometry();
  for (std::size_t k = 0; k < st.phases.size(); ++k) {
    for (int y = 0; y < g.height; y += 4) {
      for (int x = 0; x < g.width; x += 4) {
        const double expect = 3.0 + oracle::expected_counts(8000.0, oracle::kAlpha, oracle::kCameraScale, 5e4, 1e4,
                                                            (x - g.center.x) * g.pixel_pitch,
                                                            (y - g.center.y) * g.pixel_pitch, st.phases[k]);
        EXPECT_NEAR(st.frames[k](x, y), expect, 1e-6 * expect + 1e-6);
      }
    }
  }
}

TEST(Synthesize, MetadataRecordsParameters) {
  NoiseModel n;
  n.rng_seed = 9;
  const FrameStack st = small_stack(n);
  EXPECT_EQ(st.metadata.source, "synthetic");
  ASSERT_TRUE(st.metadata.setup.has_value());
  EXPECT_EQ(*st.metadata.setup, OpticalSetup{});
  ASSERT_TRUE(st.metadata.sigma_c.has_value());
  EXPECT_EQ(*st.metadata.sigma_c, 8000.0);
  ASSERT_TRUE(st.metadata.noise.has_value());
  EXPECT_EQ(st.metadata.noise->rng_seed, 9u);
}
