#pragma once

// Reference values and formulas written independently of the library.
// Frozen numbers were computed with 40-digit arbitrary-precision arithmetic.

#include <complex>
#include <filesystem>
#include <string>

namespace oracle {

// Default setup: lambda_p 532 nm, lambda_s 810 nm, lambda_i 1550 nm, d 11.7 mm, f_c 155 mm.
inline constexpr double kAlpha = 1.443137446485761e-9;               // lambda_i d / (4 pi), m^2
inline constexpr double kCameraScale = 1.9981903105187459e-8;        // f_c lambda_s / (2 pi), m^2
inline constexpr double kDeltaKzExample = 1878.05824530361600;       // q_S = (1e5, 0), q_I = (-1e5, 0)
inline constexpr double kPhaseAt1e5 = 14.4313744648576096;           // alpha |q|^2 at |q| = 1e5
inline constexpr double kPeakVisibility8000 = 0.98336352918374453;   // v(rho = 0), sigma_c = 8000
inline constexpr double kGaussPeakDensity8000 = 2.4867959858108646e-9;  // 1 / (2 pi 8000^2)
inline constexpr double kQAt2mm = 100090.56642261388;                // |q| at rho = 2 mm
inline constexpr double kFwhm8000 = 2.0723008109326748e-3;           // w_p = 125 um
inline constexpr double kFwhm6250 = 2.6249420870063803e-3;           // w_p = 160 um
inline constexpr double kFwhm5000 = 3.2689971774755447e-3;           // w_p = 200 um
inline constexpr double kRegime8000 = 0.18472159315017742;
inline constexpr double kRegimeSigma = 13161.826341907267;           // 2 alpha sigma^2 = 0.5
inline constexpr double kSinc2At8000 = 0.99998796088;                // L = 1 mm, q_S = (8000, 0), q_I = -q_S

// Closed-form visibility evaluated by arbitrary-precision 2-D quadrature.
struct VisibilityPoint {
  double sigma_c;
  double rho;
  double visibility;
};
inline constexpr VisibilityPoint kQuadraturePoints[] = {
    {5000.0, 1.0e-3, 0.769473966444188893},
    {8000.0, 1.5e-3, 0.230056337514597566},
    {10000.0, 2.0e-3, 0.0204053468642070261},
};

/// Coherence integral of the Gaussian conditional density:
/// integral N(q_I; -q_S, sigma^2 I) exp(i alpha |q_I|^2) d^2 q_I
///   = exp(i alpha |q_S|^2 / (1 - 2 i alpha sigma^2)) / (1 - 2 i alpha sigma^2).
std::complex<double> gaussian_coherence(double sigma_c, double alpha, double q_norm2);

/// |coherence| as a function of camera radius.
double gaussian_visibility(double sigma_c, double alpha, double camera_scale, double rho);

/// Half-maximum full width of the visibility in the camera plane.
double gaussian_fwhm(double sigma_c, double alpha, double camera_scale);

/// Expected counts of a noiseless synthetic pixel.
double expected_counts(double sigma_c, double alpha, double camera_scale, double sigma_env, double photon_scale,
                       double x_m, double y_m, double phi0);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

std::string read_file(const std::filesystem::path& path);

}  // namespace oracle
