#include "icfringe/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "icfringe/error.hpp"

namespace icfringe {

namespace {

constexpr double kPi = std::numbers::pi;

[[noreturn]] void invalid(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::InvalidArgument, field + " " + what);
}

void require_positive(double value, const char* field) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    std::ostringstream os;
    os << "must be finite and > 0 (got " << value << ")";
    invalid(field, os.str());
  }
}

double phase_matching_constant(const OpticalSetup& s) {
  return s.lambda_p * s.lambda_s / (4.0 * kPi * s.lambda_i);
}

// Grid of one integration axis centered on the density peak at -q_component.
struct AxisDomain {
  double lo;
  double hi;
  int panels;
};

AxisDomain axis_domain(double q_component, double width, double phase_gradient_per_q,
                       double extra_gradient, const QuadratureOptions& options) {
  const double half = options.half_width_sigmas * width;
  const double lo = -q_component - half;
  const double hi = -q_component + half;
  const double max_abs = std::max(std::abs(lo), std::abs(hi));
  const double gradient = phase_gradient_per_q * max_abs + extra_gradient;
  return {lo, hi, panel_count(lo, hi, gradient, options)};
}

// Upper bound on |d/dq_I (L dk_z / 2)| over the SPDC integration domain.
double sinc_argument_gradient(const OpticalSetup& s, const TransverseWaveVector& q_s, double half_width) {
  const double ratio = s.lambda_i / s.lambda_s;
  const double reach = q_s.norm() * (1.0 + ratio) + ratio * std::sqrt(2.0) * half_width;
  return s.L * phase_matching_constant(s) * ratio * reach;
}

struct RawSums {
  double mass = 0.0;
  std::complex<double> coherence{0.0, 0.0};
};

template <typename Density>
RawSums tensor_sum(const QuadratureRule& rx, const QuadratureRule& ry, double alpha, Density&& density) {
  RawSums sums;
  for (std::size_t j = 0; j < ry.nodes.size(); ++j) {
    const double qy = ry.nodes[j];
    double row_mass = 0.0;
    double row_re = 0.0;
    double row_im = 0.0;
    for (std::size_t i = 0; i < rx.nodes.size(); ++i) {
      const double qx = rx.nodes[i];
      const double p = rx.weights[i] * density(TransverseWaveVector{qx, qy});
      const double phase = alpha * (qx * qx + qy * qy);
      row_mass += p;
      row_re += p * std::cos(phase);
      row_im += p * std::sin(phase);
    }
    sums.mass += ry.weights[j] * row_mass;
    sums.coherence += ry.weights[j] * std::complex<double>(row_re, row_im);
  }
  return sums;
}

void check_quadrature(const FringeTerms& terms, const QuadratureOptions& options) {
  if (!(terms.error_estimate <= options.relative_tolerance * terms.mass) || !std::isfinite(terms.mass)) {
    std::ostringstream os;
    os << "error estimate " << terms.error_estimate << " exceeds relative tolerance "
       << options.relative_tolerance << " of mass " << terms.mass;
    throw Error(ErrorCode::QuadratureFailure, os.str());
  }
}

}  // namespace

double TransverseWaveVector::norm() const noexcept { return std::hypot(qx, qy); }

void validate(const TransverseWaveVector& q, double q_max) {
  if (!std::isfinite(q.qx) || !std::isfinite(q.qy)) {
    throw Error(ErrorCode::InvalidArgument, "transverse wave vector must be finite");
  }
  if (q.norm() > q_max) {
    std::ostringstream os;
    os << "transverse wave vector magnitude " << q.norm() << " exceeds paraxial bound " << q_max;
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
}

void OpticalSetup::validate(double energy_tolerance) const {
  require_positive(lambda_p, "lambda_p");
  require_positive(lambda_s, "lambda_s");
  require_positive(lambda_i, "lambda_i");
  if (!(d >= 0.0) || !std::isfinite(d)) invalid("d", "must be finite and >= 0");
  require_positive(f_c, "f_c");
  require_positive(w_p, "w_p");
  require_positive(L, "L");
  const double mismatch = std::abs(1.0 / lambda_p - (1.0 / lambda_s + 1.0 / lambda_i)) * lambda_p;
  if (mismatch > energy_tolerance) {
    std::ostringstream os;
    os << "energy conservation violated: relative mismatch " << mismatch << " > " << energy_tolerance;
    invalid("lambda_p", os.str());
  }
}

double OpticalSetup::phase_coefficient() const noexcept { return lambda_i * d / (4.0 * kPi); }

double OpticalSetup::camera_scale() const noexcept { return f_c * lambda_s / (2.0 * kPi); }

void GaussianCorrelationModel::validate() const { require_positive(sigma_c, "sigma_c"); }

void SpdcCorrelationModel::validate() const {
  setup.validate();
  require_positive(normalization_tolerance, "normalization_tolerance");
}

double SpdcCorrelationModel::pump_sigma() const noexcept { return 1.0 / setup.w_p; }

double correlation_width(const CorrelationModel& model) {
  return std::visit(
      [](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GaussianCorrelationModel>) {
          return m.sigma_c;
        } else {
          return m.pump_sigma();
        }
      },
      model);
}

void SignalEnvelope::validate() const { require_positive(sigma_env, "sigma_env"); }

double SignalEnvelope::operator()(const TransverseWaveVector& q_s) const noexcept {
  return std::exp(-q_s.norm2() / (2.0 * sigma_env * sigma_env));
}

double sinc(double x) noexcept {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

double delta_kz(const TransverseWaveVector& q_s, const TransverseWaveVector& q_i, const OpticalSetup& setup) {
  const double ratio = setup.lambda_i / setup.lambda_s;
  const TransverseWaveVector mismatch = q_s - ratio * q_i;
  return mismatch.norm2() * phase_matching_constant(setup);
}

double biphoton_density(const TransverseWaveVector& q_s, const TransverseWaveVector& q_i,
                        const OpticalSetup& setup) {
  const double pump = std::exp(-(q_s + q_i).norm2() * setup.w_p * setup.w_p / 4.0);
  const double amplitude = pump * sinc(setup.L * delta_kz(q_s, q_i, setup) / 2.0);
  return amplitude * amplitude;
}

SpdcConditional::SpdcConditional(const SpdcCorrelationModel& model, const TransverseWaveVector& q_s,
                                 const QuadratureOptions& options)
    : setup_(model.setup), q_s_(q_s) {
  const double width = model.pump_sigma();
  const double extra = sinc_argument_gradient(setup_, q_s, options.half_width_sigmas * width);
  const AxisDomain dx = axis_domain(q_s.qx, width, 0.0, extra, options);
  const AxisDomain dy = axis_domain(q_s.qy, width, 0.0, extra, options);
  const auto density = [&](const TransverseWaveVector& q_i) { return biphoton_density(q_s_, q_i, setup_); };
  const RawSums primary =
      tensor_sum(composite_gauss_legendre(dx.lo, dx.hi, dx.panels, kPrimaryOrder),
                 composite_gauss_legendre(dy.lo, dy.hi, dy.panels, kPrimaryOrder), 0.0, density);
  const RawSums check =
      tensor_sum(composite_gauss_legendre(dx.lo, dx.hi, dx.panels, kCheckOrder),
                 composite_gauss_legendre(dy.lo, dy.hi, dy.panels, kCheckOrder), 0.0, density);
  normalization_ = primary.mass;
  normalization_error_ = std::abs(primary.mass - check.mass);
  if (!(normalization_ > 0.0) || !(normalization_error_ <= model.normalization_tolerance * normalization_)) {
    std::ostringstream os;
    os << "normalization " << normalization_ << " with error estimate " << normalization_error_
       << " misses relative tolerance " << model.normalization_tolerance;
    throw Error(ErrorCode::NormalizationFailure, os.str());
  }
}

double SpdcConditional::operator()(const TransverseWaveVector& q_i) const noexcept {
  return biphoton_density(q_s_, q_i, setup_) / normalization_;
}

double conditional_density(const CorrelationModel& model, const TransverseWaveVector& q_i,
                           const TransverseWaveVector& q_s) {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GaussianCorrelationModel>) {
          const double s2 = m.sigma_c * m.sigma_c;
          return std::exp(-(q_s + q_i).norm2() / (2.0 * s2)) / (2.0 * kPi * s2);
        } else {
          return SpdcConditional(m, q_s)(q_i);
        }
      },
      model);
}

double phase_free_space(const TransverseWaveVector& q_i, const OpticalSetup& setup) {
  return setup.phase_coefficient() * q_i.norm2();
}

double FringeTerms::visibility() const noexcept { return std::abs(coherence) / mass; }

double FringeTerms::intensity(double envelope_value, double phi0) const noexcept {
  const double modulated = coherence.real() * std::cos(phi0) - coherence.imag() * std::sin(phi0);
  return envelope_value * (mass + modulated);
}

AxisTerms gaussian_axis_terms(double sigma_c, double phase_coefficient, double q_component,
                              const QuadratureOptions& options) {
  const AxisDomain domain = axis_domain(q_component, sigma_c, 2.0 * phase_coefficient, 0.0, options);
  const double norm = 1.0 / (std::sqrt(2.0 * kPi) * sigma_c);
  const double inv_two_var = 1.0 / (2.0 * sigma_c * sigma_c);
  const auto sum = [&](int order) {
    const QuadratureRule rule = composite_gauss_legendre(domain.lo, domain.hi, domain.panels, order);
    AxisTerms t;
    double re = 0.0;
    double im = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      const double q = rule.nodes[k];
      const double u = q + q_component;
      const double p = rule.weights[k] * norm * std::exp(-u * u * inv_two_var);
      const double phase = phase_coefficient * q * q;
      t.mass += p;
      re += p * std::cos(phase);
      im += p * std::sin(phase);
    }
    t.coherence = {re, im};
    return t;
  };
  AxisTerms primary = sum(kPrimaryOrder);
  const AxisTerms check = sum(kCheckOrder);
  primary.error_estimate = std::abs(primary.mass - check.mass) + std::abs(primary.coherence - check.coherence);
  return primary;
}

FringeTerms combine_axes(const AxisTerms& x, const AxisTerms& y, const QuadratureOptions& options) {
  FringeTerms terms;
  terms.mass = x.mass * y.mass;
  terms.coherence = x.coherence * y.coherence;
  terms.error_estimate = x.error_estimate * std::max(y.mass, std::abs(y.coherence)) +
                         y.error_estimate * std::max(x.mass, std::abs(x.coherence)) +
                         x.error_estimate * y.error_estimate;
  check_quadrature(terms, options);
  return terms;
}

FringeTerms fringe_terms(const CorrelationModel& model, const OpticalSetup& setup,
                         const TransverseWaveVector& q_s, const QuadratureOptions& options) {
  if (const auto* gaussian = std::get_if<GaussianCorrelationModel>(&model)) {
    gaussian->validate();
    const double alpha = setup.phase_coefficient();
    return combine_axes(gaussian_axis_terms(gaussian->sigma_c, alpha, q_s.qx, options),
                        gaussian_axis_terms(gaussian->sigma_c, alpha, q_s.qy, options), options);
  }
  return fringe_terms_2d(model, setup, q_s, options);
}

FringeTerms fringe_terms_2d(const CorrelationModel& model, const OpticalSetup& setup,
                            const TransverseWaveVector& q_s, const QuadratureOptions& options) {
  const double alpha = setup.phase_coefficient();
  const double width = correlation_width(model);
  double extra = 0.0;
  if (const auto* spdc = std::get_if<SpdcCorrelationModel>(&model)) {
    spdc->validate();
    extra = sinc_argument_gradient(spdc->setup, q_s, options.half_width_sigmas * width);
  } else {
    std::get<GaussianCorrelationModel>(model).validate();
  }
  const AxisDomain dx = axis_domain(q_s.qx, width, 2.0 * alpha, extra, options);
  const AxisDomain dy = axis_domain(q_s.qy, width, 2.0 * alpha, extra, options);

  const auto evaluate = [&](int order) {
    const QuadratureRule rx = composite_gauss_legendre(dx.lo, dx.hi, dx.panels, order);
    const QuadratureRule ry = composite_gauss_legendre(dy.lo, dy.hi, dy.panels, order);
    return std::visit(
        [&](const auto& m) -> RawSums {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, GaussianCorrelationModel>) {
            return tensor_sum(rx, ry, alpha,
                              [&](const TransverseWaveVector& q_i) { return conditional_density(m, q_i, q_s); });
          } else {
            // Normalized on the same grid: mass is 1 up to rounding.
            return tensor_sum(rx, ry, alpha,
                              [&](const TransverseWaveVector& q_i) { return biphoton_density(q_s, q_i, m.setup); });
          }
        },
        model);
  };

  const RawSums primary = evaluate(kPrimaryOrder);
  const RawSums check = evaluate(kCheckOrder);

  FringeTerms terms;
  if (const auto* spdc = std::get_if<SpdcCorrelationModel>(&model)) {
    const double norm_error = std::abs(primary.mass - check.mass);
    if (!(primary.mass > 0.0) || !(norm_error <= spdc->normalization_tolerance * primary.mass)) {
      std::ostringstream os;
      os << "normalization " << primary.mass << " with error estimate " << norm_error
         << " misses relative tolerance " << spdc->normalization_tolerance;
      throw Error(ErrorCode::NormalizationFailure, os.str());
    }
    terms.mass = 1.0;
    terms.coherence = primary.coherence / primary.mass;
    terms.error_estimate = std::abs(terms.coherence - check.coherence / check.mass);
  } else {
    terms.mass = primary.mass;
    terms.coherence = primary.coherence;
    terms.error_estimate = std::abs(primary.mass - check.mass) + std::abs(primary.coherence - check.coherence);
  }
  check_quadrature(terms, options);
  return terms;
}

double intensity_pattern(const CorrelationModel& model, const SignalEnvelope& envelope,
                         const OpticalSetup& setup, const TransverseWaveVector& q_s, double phi0,
                         const QuadratureOptions& options) {
  return fringe_terms(model, setup, q_s, options).intensity(envelope(q_s), phi0);
}

double visibility_closed_form(double sigma_c, const OpticalSetup& setup, double rho) {
  const double alpha = setup.phase_coefficient();
  const double q = rho / setup.camera_scale();
  const double a2s2 = alpha * alpha * sigma_c * sigma_c;
  const double denom = 1.0 + 4.0 * a2s2 * sigma_c * sigma_c;
  return std::exp(-2.0 * a2s2 * q * q / denom) / std::sqrt(denom);
}

double max_sinc_deviation(const OpticalSetup& setup, double q_max) {
  constexpr int kSamples = 2000;
  double worst = 0.0;
  for (int k = 0; k <= kSamples; ++k) {
    const TransverseWaveVector q_s{q_max * k / kSamples, 0.0};
    const double s = sinc(setup.L * delta_kz(q_s, -q_s, setup) / 2.0);
    worst = std::max(worst, 1.0 - s * s);
  }
  return worst;
}

double crystal_length_bound(const OpticalSetup& setup, double q_max, double deviation) {
  if (!(deviation > 0.0 && deviation < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "sinc deviation bound must lie in (0, 1)");
  }
  // 1 - sinc^2 rises monotonically on (0, pi); bisect for the argument reaching `deviation`.
  double lo = 0.0;
  double hi = kPi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double s = sinc(mid);
    (1.0 - s * s < deviation ? lo : hi) = mid;
  }
  const TransverseWaveVector q_s{q_max, 0.0};
  return 2.0 * lo / delta_kz(q_s, -q_s, setup);
}

}  // namespace icfringe
