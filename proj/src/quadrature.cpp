#include "icfringe/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>

#include "icfringe/error.hpp"

namespace icfringe {

namespace {

template <unsigned N>
void append_panel(double lo, double hi, QuadratureRule& rule) {
  using Gauss = boost::math::quadrature::gauss<double, N>;
  const auto& x = Gauss::abscissa();
  const auto& w = Gauss::weights();
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  // Boost stores the non-negative half of the symmetric rule.
  for (std::size_t i = x.size(); i-- > 0;) {
    if (x[i] == 0.0) continue;
    rule.nodes.push_back(mid - half * x[i]);
    rule.weights.push_back(half * w[i]);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    rule.nodes.push_back(mid + half * x[i]);
    rule.weights.push_back(half * w[i]);
  }
}

}  // namespace

QuadratureRule composite_gauss_legendre(double a, double b, int panels, int order) {
  if (!(b > a) || panels < 1) {
    throw Error(ErrorCode::InvalidArgument, "quadrature interval must be non-empty");
  }
  QuadratureRule rule;
  rule.nodes.reserve(static_cast<std::size_t>(panels * order));
  rule.weights.reserve(static_cast<std::size_t>(panels * order));
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    const double hi = (p + 1 == panels) ? b : a + (p + 1) * h;
    switch (order) {
      case 6: append_panel<6>(lo, hi, rule); break;
      case 8: append_panel<8>(lo, hi, rule); break;
      default:
        throw Error(ErrorCode::InvalidArgument, "unsupported Gauss-Legendre order " + std::to_string(order));
    }
  }
  return rule;
}

int panel_count(double a, double b, double phase_gradient_bound, const QuadratureOptions& options) {
  const double total_phase = std::abs(phase_gradient_bound) * (b - a);
  const double needed = std::ceil(total_phase / options.max_phase_per_panel);
  const double clamped = std::clamp(needed, static_cast<double>(options.min_panels),
                                    static_cast<double>(options.max_panels_per_axis));
  return static_cast<int>(clamped);
}

}  // namespace icfringe
