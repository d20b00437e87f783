#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "icfringe/image.hpp"
#include "icfringe/synth.hpp"

namespace icfringe {

/// Per-pixel result of the sinusoid fit. Masked pixels hold NaN visibility.
struct VisibilityMap {
  CameraGeometry geometry;
  Image<double> visibility;
  /// Fit result for every pixel, masked or not.
  Image<double> fitted_visibility;
  Image<double> mean_intensity;
  Image<std::uint8_t> mask;
  /// RMS residual of the fit, counts.
  Image<double> fit_residual;
  /// Center of the reference disk the mask was computed from.
  PixelCoord mask_center;
  /// Mean intensity inside the reference disk.
  double reference_intensity = 0.0;
  /// Unmasked pixels with visibility above one.
  int over_unity = 0;

  std::size_t unmasked_count() const noexcept;
};

struct RadialProfile {
  PixelCoord center;
  /// Camera-plane radii, meters, strictly increasing from 0.
  std::vector<double> radii;
  /// Mean visibility per radius; NaN where sample_counts is 0.
  std::vector<double> visibility;
  std::vector<int> sample_counts;
};

struct MaskOptions {
  double threshold_fraction = 0.20;
  /// Radius of the central reference disk, pixels.
  double disk_radius = 5.0;
  /// Reference disk center; the intensity centroid when absent.
  std::optional<PixelCoord> center;
};

/// Normalized Gaussian blur of one image, kernel truncated at 4 sigma and
/// renormalized over the in-sensor pixels near the border.
Image<double> gaussian_blur(const Image<double>& image, double sigma);

/// Subtracts `background` (no clamping) and applies a normalized Gaussian blur
/// truncated at 4 sigma. Near the border the kernel is renormalized over the
/// pixels inside the sensor. blur_sigma = 0 leaves frames untouched.
FrameStack preprocess(const FrameStack& stack, double background, double blur_sigma, int threads = 1);

/// Least-squares fit of c0 + c1 cos(phi0) + c2 sin(phi0) for a fixed phase set.
class SinusoidFitter {
 public:
  struct Result {
    double c0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    /// RMS residual.
    double residual = 0.0;
    double amplitude() const noexcept;
    double visibility() const noexcept;
  };

  /// Throws DegeneratePhases for fewer than 3 phases or a singular normal matrix.
  explicit SinusoidFitter(std::vector<double> phases);

  /// `samples` holds one value per phase.
  Result fit(std::span<const double> samples) const noexcept;
  std::size_t size() const noexcept { return phases_.size(); }

 private:
  std::vector<double> phases_;
  std::vector<double> cos_;
  std::vector<double> sin_;
  // Rows of (A^T A)^-1 A^T.
  std::vector<double> solve_;
};

/// Linear least squares I(phi0) = c0 + c1 cos(phi0) + c2 sin(phi0) per pixel.
/// visibility = hypot(c1, c2) / c0, mean_intensity = c0. Throws
/// DegeneratePhases when the normal matrix is singular.
VisibilityMap fit_visibility(const FrameStack& stack, const MaskOptions& options = {}, int threads = 1);

/// Recomputes the mask from the reference disk at `center`.
void apply_mask(VisibilityMap& vmap, const PixelCoord& center, double threshold_fraction = 0.20,
                double disk_radius = 5.0);

/// Intensity-weighted centroid of the unmasked pixels.
PixelCoord intensity_centroid(const VisibilityMap& vmap);

/// Bilinear visibility at a sub-pixel position; empty if any of the four
/// neighbours is masked or outside the sensor.
std::optional<double> sample_visibility(const VisibilityMap& vmap, double x, double y);

struct CenterSearchOptions {
  /// Half-size of the integer candidate grid around the intensity centroid, pixels.
  int search_window = 10;
  int n_angles = 64;
  /// Shortest paired ray that contributes to a candidate's score.
  int min_ray_samples = 5;
};

struct CenterResult {
  PixelCoord center;
  double score = 0.0;
};

/// Center maximizing the angle-averaged correlation between the visibility
/// along opposite ray directions. Integer grid search plus a parabolic
/// sub-pixel step per axis; ties go to the smallest (y, x).
/// Throws InsufficientData (< 100 unmasked pixels), DegenerateScore (all rays
/// flat) or CenterNotFound (no candidate yields a finite score).
CenterResult find_center(const VisibilityMap& vmap, const CenterSearchOptions& options = {});

/// Angle-averaged visibility over n_angles cross sections through `center`,
/// angles uniform on [0, pi), both ray directions sampled.
RadialProfile radial_profile(const VisibilityMap& vmap, const PixelCoord& center, int n_angles = 201,
                             double radial_step = 1.0);

/// Full width at half maximum of the central visibility peak, meters.
/// The peak value is the mean of the three innermost populated bins.
/// Throws ProfilePeakNotCentral or NoHalfCrossing.
double profile_fwhm(const RadialProfile& profile);

}  // namespace icfringe
