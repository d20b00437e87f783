#pragma once

#include <numbers>
#include <vector>

namespace icfringe {

struct QuadratureOptions {
  /// Relative tolerance on the error estimate (|primary - check| / mass).
  double relative_tolerance = 1e-8;
  /// Integration half-width around the density peak, in units of its standard deviation.
  double half_width_sigmas = 8.0;
  /// Upper bound on the idler phase change across one panel.
  double max_phase_per_panel = std::numbers::pi / 8.0;
  int min_panels = 12;
  int max_panels_per_axis = 8192;
};

/// Nodes and weights of a composite Gauss-Legendre rule.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Composite rule on [a, b] with `panels` equal panels of `order` points each.
/// Supported orders: 6 and 8.
QuadratureRule composite_gauss_legendre(double a, double b, int panels, int order);

/// Panel count for [a, b] such that the phase, whose derivative is bounded by
/// `phase_gradient_bound`, changes by at most max_phase_per_panel per panel.
int panel_count(double a, double b, double phase_gradient_bound, const QuadratureOptions& options);

/// Order of the primary rule and of the cheaper rule used for the error estimate.
inline constexpr int kPrimaryOrder = 8;
inline constexpr int kCheckOrder = 6;

}  // namespace icfringe
