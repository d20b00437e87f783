#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "icfringe/image.hpp"
#include "icfringe/model.hpp"

namespace icfringe {

/// Sub-pixel sensor coordinates; pixel (i, j) has its center at x = i, y = j.
struct PixelCoord {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const PixelCoord&) const = default;
};

struct CameraGeometry {
  int width = 256;
  int height = 256;
  /// Meters per pixel.
  double pixel_pitch = 16e-6;
  /// Pattern center in pixel coordinates.
  PixelCoord center{127.5, 127.5};

  void validate() const;
  static CameraGeometry centered(int width, int height, double pixel_pitch);
  bool operator==(const CameraGeometry&) const = default;
};

struct NoiseModel {
  /// Expected counts at the envelope peak under full constructive interference.
  double photon_scale = 1e4;
  double read_noise_sigma = 0.0;
  double background_level = 0.0;
  std::uint64_t rng_seed = 0;
  /// Poisson sampling of the photon part. Disabled together with a zero read
  /// noise, frames are the exact expected counts.
  bool shot_noise = true;

  void validate() const;
  static NoiseModel noiseless(double photon_scale = 1e4, double background_level = 0.0);
  bool operator==(const NoiseModel&) const = default;
};

/// Provenance of a stack. Synthetic stacks record everything needed to
/// regenerate them; experimental stacks carry only the source tag.
struct StackMetadata {
  std::string source = "experimental/unknown";
  std::optional<OpticalSetup> setup;
  std::optional<std::string> model;
  std::optional<double> sigma_c;
  std::optional<double> sigma_env;
  std::optional<NoiseModel> noise;

  bool operator==(const StackMetadata&) const = default;
};

struct FrameStack {
  CameraGeometry geometry;
  /// Interferometric phase of each frame, radians, strictly increasing in [0, 2 pi).
  std::vector<double> phases;
  /// Counts, one image per phase.
  std::vector<Image<float>> frames;
  StackMetadata metadata;

  void validate() const;
  bool operator==(const FrameStack&) const = default;
};

/// n phases uniform on [0, 2 pi), endpoint excluded.
std::vector<double> uniform_phases(int n = 25);

TransverseWaveVector pixel_to_q(const PixelCoord& pixel, const CameraGeometry& geometry, const OpticalSetup& setup);
PixelCoord q_to_pixel(const TransverseWaveVector& q, const CameraGeometry& geometry, const OpticalSetup& setup);

/// Noise-free intensity per frame, intensity_pattern / 2: unit value at the
/// envelope peak under full constructive interference.
struct ExpectedStack {
  CameraGeometry geometry;
  std::vector<double> phases;
  std::vector<Image<double>> frames;
  StackMetadata metadata;
};

/// Renders intensity_pattern / 2 at every pixel center. The Gaussian model is
/// evaluated exactly per pixel; the SPDC model, which is invariant under joint
/// rotation of q_S and q_I, is tabulated over |q_S| and interpolated.
/// Throws QuadratureFailure or NormalizationFailure from the model.
ExpectedStack render_expected(const CorrelationModel& model, const SignalEnvelope& envelope,
                              const OpticalSetup& setup, const CameraGeometry& geometry,
                              const std::vector<double>& phases, int threads = 1,
                              const QuadratureOptions& options = {});

/// Scales by photon_scale, adds background and samples noise. Each pixel draws from its own stream
/// keyed by (seed, frame, pixel), so the result does not depend on `threads`.
FrameStack realize(const ExpectedStack& expected, const NoiseModel& noise, int threads = 1);

/// render_expected followed by realize.
FrameStack synthesize_stack(const CorrelationModel& model, const SignalEnvelope& envelope,
                            const OpticalSetup& setup, const CameraGeometry& geometry, const NoiseModel& noise,
                            const std::vector<double>& phases, int threads = 1,
                            const QuadratureOptions& options = {});

}  // namespace icfringe
