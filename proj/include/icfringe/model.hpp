#pragma once

#include <complex>
#include <variant>

#include "icfringe/quadrature.hpp"

namespace icfringe {

/// Default paraxial bound on transverse wave-vector magnitudes, m^-1.
inline constexpr double kDefaultParaxialBound = 5e5;

/// Transverse wave vector (qx, qy) in m^-1.
struct TransverseWaveVector {
  double qx = 0.0;
  double qy = 0.0;

  double norm2() const noexcept { return qx * qx + qy * qy; }
  double norm() const noexcept;

  friend TransverseWaveVector operator+(TransverseWaveVector a, TransverseWaveVector b) noexcept {
    return {a.qx + b.qx, a.qy + b.qy};
  }
  friend TransverseWaveVector operator-(TransverseWaveVector a, TransverseWaveVector b) noexcept {
    return {a.qx - b.qx, a.qy - b.qy};
  }
  friend TransverseWaveVector operator-(TransverseWaveVector a) noexcept { return {-a.qx, -a.qy}; }
  friend TransverseWaveVector operator*(double s, TransverseWaveVector a) noexcept {
    return {s * a.qx, s * a.qy};
  }
  bool operator==(const TransverseWaveVector&) const = default;
};

/// Throws InvalidArgument if q is non-finite or |q| exceeds q_max.
void validate(const TransverseWaveVector& q, double q_max = kDefaultParaxialBound);

/// Physical parameters of the two-crystal interferometer. Lengths in meters.
struct OpticalSetup {
  double lambda_p = 532e-9;
  double lambda_s = 810e-9;
  double lambda_i = 1550e-9;
  /// Effective idler propagation distance between the crystals.
  double d = 11.7e-3;
  /// Focal length of the lens in front of the camera.
  double f_c = 0.155;
  /// Gaussian pump waist.
  double w_p = 125e-6;
  /// Crystal length.
  double L = 1e-3;

  /// Throws InvalidArgument naming the offending field. `d` may be zero.
  void validate(double energy_tolerance = 1e-3) const;

  /// lambda_i * d / (4 pi): coefficient of |q_I|^2 in the idler phase, m^2.
  double phase_coefficient() const noexcept;

  /// f_c * lambda_s / (2 pi): camera-plane distance per unit signal wave vector, m^2.
  double camera_scale() const noexcept;

  bool operator==(const OpticalSetup&) const = default;
};

/// Conditional density exp(-|q_S + q_I|^2 / (2 sigma_c^2)) / (2 pi sigma_c^2).
struct GaussianCorrelationModel {
  double sigma_c = 8000.0;

  void validate() const;
  bool operator==(const GaussianCorrelationModel&) const = default;
};

/// Full angular-spectrum model: pump angular spectrum times phase-matching sinc.
struct SpdcCorrelationModel {
  OpticalSetup setup;
  /// Relative tolerance the per-q_S normalization must reach.
  double normalization_tolerance = 1e-6;

  void validate() const;
  /// Width of the pump factor |A|^2 as a function of q_S + q_I: 1 / w_p.
  double pump_sigma() const noexcept;
  bool operator==(const SpdcCorrelationModel&) const = default;
};

using CorrelationModel = std::variant<GaussianCorrelationModel, SpdcCorrelationModel>;

/// Characteristic width of the conditional density, used to size quadrature domains.
double correlation_width(const CorrelationModel& model);

/// Marginal signal envelope p_S(q_S) = exp(-|q_S|^2 / (2 sigma_env^2)), unit peak.
struct SignalEnvelope {
  double sigma_env = 5e4;

  void validate() const;
  double operator()(const TransverseWaveVector& q_s) const noexcept;
  bool operator==(const SignalEnvelope&) const = default;
};

/// sin(x) / x with sinc(0) = 1.
double sinc(double x) noexcept;

/// Longitudinal phase mismatch |q_S - (lambda_i/lambda_s) q_I|^2 lambda_p lambda_s / (4 pi lambda_i).
double delta_kz(const TransverseWaveVector& q_s, const TransverseWaveVector& q_i, const OpticalSetup& setup);

/// Unnormalized |C(q_S, q_I)|^2 with a Gaussian pump of waist w_p.
double biphoton_density(const TransverseWaveVector& q_s, const TransverseWaveVector& q_i,
                        const OpticalSetup& setup);

/// SPDC conditional density bound to one q_S; the normalization over q_I is
/// computed once, on construction.
class SpdcConditional {
 public:
  SpdcConditional(const SpdcCorrelationModel& model, const TransverseWaveVector& q_s,
                  const QuadratureOptions& options = {});

  double operator()(const TransverseWaveVector& q_i) const noexcept;
  double normalization() const noexcept { return normalization_; }
  double normalization_error() const noexcept { return normalization_error_; }

 private:
  OpticalSetup setup_;
  TransverseWaveVector q_s_;
  double normalization_ = 1.0;
  double normalization_error_ = 0.0;
};

/// p(q_I | q_S) in m^2. Throws NormalizationFailure for an SPDC model whose
/// normalization quadrature misses its tolerance.
double conditional_density(const CorrelationModel& model, const TransverseWaveVector& q_i,
                           const TransverseWaveVector& q_s);

/// Idler phase after free-space propagation over d: lambda_i d |q_I|^2 / (4 pi).
double phase_free_space(const TransverseWaveVector& q_i, const OpticalSetup& setup);

/// Phase-independent pieces of the single-beam intensity at one q_S:
///   mass      = integral of p(q_I|q_S)
///   coherence = integral of p(q_I|q_S) exp(i phi_I(q_I))
/// so that I(phi0) = p_S(q_S) (mass + Re[exp(i phi0) coherence]).
struct FringeTerms {
  double mass = 0.0;
  std::complex<double> coherence{0.0, 0.0};
  /// Absolute error estimate from comparing two quadrature orders.
  double error_estimate = 0.0;

  double visibility() const noexcept;
  double intensity(double envelope_value, double phi0) const noexcept;
};

/// Fringe terms on a tensor-product composite Gauss-Legendre grid over
/// +-half_width_sigmas around -q_S. The Gaussian model's integrand factors
/// into x and y parts, so its tensor sum is evaluated as a product of 1-D
/// sums. Throws QuadratureFailure when the error estimate exceeds tolerance.
FringeTerms fringe_terms(const CorrelationModel& model, const OpticalSetup& setup,
                         const TransverseWaveVector& q_s, const QuadratureOptions& options = {});

/// Same grid as fringe_terms, always summed node by node in 2-D. Works for
/// any model; used to cross-check the factored Gaussian path.
FringeTerms fringe_terms_2d(const CorrelationModel& model, const OpticalSetup& setup,
                            const TransverseWaveVector& q_s, const QuadratureOptions& options = {});

/// One factor of the Gaussian tensor sum: the 1-D integral over one axis.
struct AxisTerms {
  double mass = 0.0;
  std::complex<double> coherence{0.0, 0.0};
  double error_estimate = 0.0;
};

/// 1-D Gaussian factor for signal component q_component along one axis.
AxisTerms gaussian_axis_terms(double sigma_c, double phase_coefficient, double q_component,
                              const QuadratureOptions& options = {});

/// Combines the x and y factors of the Gaussian model into fringe terms.
FringeTerms combine_axes(const AxisTerms& x, const AxisTerms& y, const QuadratureOptions& options = {});

/// p_S(q_S) * integral p(q_I|q_S) (1 + cos(phi_I(q_I) + phi0)) d^2 q_I.
double intensity_pattern(const CorrelationModel& model, const SignalEnvelope& envelope,
                         const OpticalSetup& setup, const TransverseWaveVector& q_s, double phi0,
                         const QuadratureOptions& options = {});

/// Analytic fringe visibility of the Gaussian model at camera radius rho (meters).
double visibility_closed_form(double sigma_c, const OpticalSetup& setup, double rho);

/// Largest 1 - sinc^2(L dk_z / 2) over |q_S| <= q_max along the anti-correlated
/// direction q_I = -q_S, where the pump factor peaks.
double max_sinc_deviation(const OpticalSetup& setup, double q_max);

/// Longest crystal for which max_sinc_deviation(setup, q_max) stays below `deviation`.
double crystal_length_bound(const OpticalSetup& setup, double q_max, double deviation);

}  // namespace icfringe
